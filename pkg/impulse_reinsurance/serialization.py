"""
Provides JSON and CSV persistence for solver and simulator results.

Records are written with a ``__type__`` tag so that :class:`SolutionDecoder`
can rebuild them.  Strict JSON has no ``inf``, so non-finite floats (the
"no reinsurance" retention) are tagged as well, and tuples are tagged to
keep them apart from lists.  Keys are sorted and the indentation fixed,
so identical inputs give byte-identical files.
"""

# SPDX-License-Identifier: BSD-3-Clause

from __future__ import annotations

import csv
import dataclasses
import io
import json
import math
import os
import tempfile
from collections.abc import Iterable, Mapping
from datetime import datetime
from enum import Enum
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .model import Case, DerivedConstants, EconParams
from .numerics import Tolerances
from .policy_solver import SolverSettings
from .qvi_check import CheckSettings
from .simulator import PairwiseDifference, SimConfig, SimEstimate

TIME_FORMAT = "%Y-%m-%d_%H:%M:%S:%f"
CSV_FORMAT = ".17g"

RECORD_TYPES = {
    record.__name__: record
    for record in (
        CheckSettings,
        DerivedConstants,
        EconParams,
        PairwiseDifference,
        SimConfig,
        SimEstimate,
        SolverSettings,
        Tolerances,
    )
}
ENUM_TYPES = {"Case": Case}


class SolutionEncoder(json.JSONEncoder):
    """
    Convert results to strict JSON.

    Usage::

        import json
        with open('constants.json', 'w') as jf:
            json.dump(solution.summary(), jf, cls=SolutionEncoder)
    """

    def __init__(self, **kwargs) -> None:
        """Initialize the encoder; non-finite floats are never raw."""
        kwargs["allow_nan"] = False
        super().__init__(**kwargs)

    def iterencode(self, o: object, _one_shot: bool = False):
        """Tag the whole tree, then encode it."""
        return super().iterencode(self.tag(o), _one_shot)

    def tag(self, obj: object) -> object:  # noqa: PLR0911
        """
        Replace everything strict JSON cannot hold by a tagged record.

        Parameters:
            obj:  Any Python object.

        Returns:
            A tree of ``dict``, ``list``, ``str``, finite numbers,
            ``bool`` and ``None``.
        """
        if obj is None or isinstance(obj, (bool, str)):
            return obj
        if isinstance(obj, Enum):
            return {"__type__": type(obj).__name__, "value": obj.value}
        if isinstance(obj, np.bool_):
            return bool(obj)
        if isinstance(obj, (int, np.integer)):
            return int(obj)
        if isinstance(obj, (float, np.floating)):
            value = float(obj)
            if math.isfinite(value):
                return value
            return {"__type__": "float", "value": repr(value)}
        if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
            return {
                "__type__": type(obj).__name__,
                **{
                    f.name: self.tag(getattr(obj, f.name))
                    for f in dataclasses.fields(obj)
                    if f.repr
                },
            }
        if isinstance(obj, Mapping):
            return {str(k): self.tag(v) for k, v in obj.items()}
        if isinstance(obj, tuple):
            return {"__type__": "tuple", "items": [self.tag(x) for x in obj]}
        if isinstance(obj, np.ndarray):
            return {
                "__type__": "ndarray",
                "items": [self.tag(x) for x in obj.tolist()],
            }
        if isinstance(obj, datetime):
            return {
                "__type__": "datetime",
                "value": obj.strftime(TIME_FORMAT),
                "format": TIME_FORMAT,
            }
        if isinstance(obj, Path):
            return {"__type__": "Path", "value": str(obj)}
        if isinstance(obj, Iterable):
            return [self.tag(x) for x in obj]
        return self.default(obj)


class SolutionDecoder(json.JSONDecoder):
    """
    Convert JSON written by :class:`SolutionEncoder` back to objects.

    Usage::

        import json
        with open('constants.json') as jf:
            summary = json.load(jf, cls=SolutionDecoder)
    """

    def __init__(self, **kwargs) -> None:
        """Initialize the decoder."""
        kwargs["object_hook"] = self.dict_to_object
        super().__init__(**kwargs)

    @staticmethod
    def dict_to_object(obj: dict) -> object:  # noqa: PLR0911
        """
        Convert a ``dict`` to a corresponding object.

        Parameters:
            obj:  The JSON representation of an object.

        Returns:
            The object represented; records of unknown type come back
            as plain ``dict`` without the tag.
        """
        if "__type__" not in obj:
            return obj
        kind = obj["__type__"]
        if kind == "float":
            return float(obj["value"])
        if kind == "tuple":
            return tuple(obj["items"])
        if kind == "ndarray":
            return np.array(obj["items"], dtype=float)
        if kind == "datetime":
            return datetime.strptime(obj["value"], obj["format"])
        if kind == "Path":
            return Path(obj["value"])
        if kind in ENUM_TYPES:
            return ENUM_TYPES[kind](obj["value"])
        fields = {k: v for k, v in obj.items() if k != "__type__"}
        if kind in RECORD_TYPES:
            return RECORD_TYPES[kind](**fields)
        return fields


def dumps(data: Any) -> str:
    """Serialize ``data`` deterministically."""
    text = json.dumps(data, cls=SolutionEncoder, sort_keys=True, indent=4)
    return text + "\n"


def loads(text: str) -> Any:
    """Deserialize text written by :func:`dumps`."""
    return json.loads(text, cls=SolutionDecoder)


def atomic_write(path: Path, text: str) -> Path:
    """
    Write a text file atomically.

    The text goes to a temporary file in the target directory, which
    then replaces ``path``, so readers never see a partial file.

    Parameters:
        path:  The destination.
        text:  The file contents.

    Returns:
        The destination.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    handle, temporary = tempfile.mkstemp(
        dir=path.parent, prefix=f".{path.name}.", suffix=".tmp"
    )
    try:
        with os.fdopen(handle, "w", newline="") as stream:
            stream.write(text)
        Path(temporary).replace(path)
    except BaseException:
        Path(temporary).unlink(missing_ok=True)
        raise
    return path


def write_json(path: Path, data: Any) -> Path:
    """Write ``data`` to a JSON file atomically."""
    return atomic_write(path, dumps(data))


def read_json(path: Path) -> Any:
    """Read a JSON file written by :func:`write_json`."""
    return loads(Path(path).read_text())


def _cell(value: Any) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), CSV_FORMAT)
    if value is None:
        return ""
    return str(value)


def csv_text(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    """
    Format a table as CSV.

    Floats carry 17 significant digits, so they read back exactly;
    ``inf`` is written as ``inf``.
    """
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_cell(value) for value in row])
    return buffer.getvalue()


def write_csv(
    path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]
) -> Path:
    """Write a table to a CSV file atomically."""
    return atomic_write(path, csv_text(header, rows))


def read_csv(path: Path) -> dict[str, np.ndarray]:
    """
    Read a numeric CSV table.

    Returns:
        One float array per column, keyed by header.
    """
    with Path(path).open(newline="") as stream:
        reader = csv.reader(stream)
        header = next(reader)
        rows = [[float(cell) for cell in row] for row in reader]
    table = np.array(rows, dtype=float).reshape(len(rows), len(header))
    return {name: table[:, i] for i, name in enumerate(header)}
