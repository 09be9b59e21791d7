"""
Provides the run configuration read by the command-line interface.

A run is described by one JSON document::

    {
        "model": {
            "groups": [
                {"name": "first", "intensity": 3, "probabilities": [1, 0]},
                ...
            ],
            "classes": [
                {
                    "name": "motor",
                    "claims": {"distribution": "exponential", "rate": 1},
                    "insurer_loading": 1,
                    "reinsurer_loading": 1.2
                },
                ...
            ]
        },
        "economics": {
            "discount_rate": 0.5, "tax_retention": 0.7, "transaction_cost": 0.2
        },
        "numerics": {"quad_rel": 1e-9, "uniform_step": 0.005, ...},
        "simulation": {"paths": 100000, "time_step": 0.001, ...},
        "output_dir": "results/example"
    }

Every field is checked before any computation and unknown keys are
rejected; a violation raises :class:`~impulse_reinsurance.errors.ConfigError`
naming the dotted path of the field.
"""

# SPDX-License-Identifier: BSD-3-Clause

from __future__ import annotations

import copy
import dataclasses
import json
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

from .errors import ConfigError, InvalidConfigError, ParameterError
from .model import (
    ClaimClass,
    EconParams,
    ModelParams,
    ThinningStructure,
    claim_distribution,
)
from .numerics import Tolerances
from .policy_solver import SolverSettings
from .qvi_check import CheckSettings
from .simulator import SimConfig

logger = logging.getLogger(__name__)

OUTPUT_DIR_VARIABLE = "IMPULSE_REINSURANCE_OUTPUT_DIR"
DEFAULT_OUTPUT_DIR = "impulse-reinsurance-output"
BLOCKS = {"model", "economics", "numerics", "simulation", "output_dir"}
SOLVER_KEYS = {"retention_max", "uniform_step", "growth", "value_nodes"}
CHECKER_KEYS = {"checker_tolerance"}
SIMULATION_KEYS = {
    "paths",
    "time_step",
    "horizon",
    "seed",
    "antithetic",
    "workers",
    "block_size",
}
INTEGER_FIELDS = {
    "max_subdivisions",
    "value_nodes",
    "paths",
    "seed",
    "workers",
    "block_size",
}


@dataclass(frozen=True)
class RunConfig:
    """
    A validated run configuration.

    Attributes:
        params (ModelParams):  The problem parameters.
        tolerances (Tolerances):  Numerical tolerances.
        solver (SolverSettings):  Solver grid controls.
        checks (CheckSettings):  Checker tolerances.
        simulation (SimConfig):  Monte Carlo controls.
        output_dir (Path):  Where results are written.
        source (Optional[Path]):  The file the configuration came from.
        document (dict):  The raw JSON document.
    """

    params: ModelParams
    tolerances: Tolerances
    solver: SolverSettings
    checks: CheckSettings
    simulation: SimConfig
    output_dir: Path
    source: Optional[Path] = None
    document: dict = field(default_factory=dict, repr=False)


def _mapping(value: Any, path: str) -> dict:
    if not isinstance(value, dict):
        raise ConfigError(path, "expected an object")
    return value


def _check_keys(
    block: dict, path: str, allowed: set, required: set = frozenset()
) -> None:
    for key in block:
        if key not in allowed:
            raise ConfigError(f"{path}.{key}" if path else key, "unknown key")
    for key in sorted(required - set(block)):
        raise ConfigError(f"{path}.{key}" if path else key, "missing")


def _number(value: Any, path: str, *, integer: bool = False) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(path, f"expected a number, got {value!r}")
    if integer:
        if int(value) != value:
            raise ConfigError(path, f"expected an integer, got {value!r}")
        return int(value)
    return float(value)


def _record(record_type: type, values: dict, path: str) -> Any:
    """
    Build a settings record, blaming the first field it rejects.

    Each supplied field is tried on its own against the defaults so that
    the error names the offending key.
    """
    for key, value in values.items():
        try:
            record_type(**{key: value})
        except (ParameterError, InvalidConfigError) as error:
            raise ConfigError(f"{path}.{key}", str(error)) from error
    try:
        return record_type(**values)
    except (ParameterError, InvalidConfigError) as error:
        raise ConfigError(path, str(error)) from error


def _parse_groups(groups: Any, path: str) -> ThinningStructure:
    if not isinstance(groups, list) or not groups:
        raise ConfigError(path, "expected a non-empty list of groups")
    names, intensities, probabilities = [], [], []
    for index, group in enumerate(groups):
        where = f"{path}.{index}"
        group = _mapping(group, where)
        _check_keys(
            group,
            where,
            {"name", "intensity", "probabilities"},
            {"intensity", "probabilities"},
        )
        name = str(group.get("name", f"group{index + 1}"))
        where = f"{path}.{name}"
        intensity = _number(group["intensity"], f"{where}.intensity")
        if not intensity > 0:
            raise ConfigError(f"{where}.intensity", "must be positive")
        pair = group["probabilities"]
        if not isinstance(pair, list) or len(pair) != 2:  # noqa: PLR2004
            raise ConfigError(
                f"{where}.probabilities", "expected two probabilities"
            )
        pair = tuple(
            _number(p, f"{where}.probabilities.{i}")
            for i, p in enumerate(pair)
        )
        if any(not 0 <= p <= 1 for p in pair):
            raise ConfigError(
                f"{where}.probabilities", "probabilities must lie in [0, 1]"
            )
        names.append(name)
        intensities.append(intensity)
        probabilities.append(pair)
    if len(set(names)) != len(names):
        raise ConfigError(path, "group names must be unique")
    try:
        return ThinningStructure(
            tuple(intensities), tuple(probabilities), tuple(names)
        )
    except ParameterError as error:
        raise ConfigError(path, str(error)) from error


def _parse_class(block: Any, index: int, path: str) -> ClaimClass:
    where = f"{path}.{index}"
    block = _mapping(block, where)
    _check_keys(
        block,
        where,
        {"name", "claims", "insurer_loading", "reinsurer_loading"},
        {"claims", "insurer_loading", "reinsurer_loading"},
    )
    name = str(block.get("name", f"class{index + 1}"))
    where = f"{path}.{name}"
    eta = _number(block["insurer_loading"], f"{where}.insurer_loading")
    theta = _number(block["reinsurer_loading"], f"{where}.reinsurer_loading")
    if not eta > 0:
        raise ConfigError(f"{where}.insurer_loading", "must be positive")
    if not theta > eta:
        raise ConfigError(
            f"{where}.reinsurer_loading",
            f"must exceed the insurer loading {eta!r}",
        )
    claims = _mapping(block["claims"], f"{where}.claims")
    if "distribution" not in claims:
        raise ConfigError(f"{where}.claims.distribution", "missing")
    arguments = {
        key: (
            value
            if key == "distribution"
            else _number(value, f"{where}.claims.{key}")
        )
        for key, value in claims.items()
    }
    try:
        distribution = claim_distribution(**arguments)
    except (ParameterError, TypeError) as error:
        raise ConfigError(f"{where}.claims", str(error)) from error
    return ClaimClass(distribution, eta, theta, name)


def _parse_model(
    block: Any,
) -> tuple[tuple[ClaimClass, ...], ThinningStructure]:
    block = _mapping(block, "model")
    _check_keys(block, "model", {"groups", "classes"}, {"groups", "classes"})
    thinning = _parse_groups(block["groups"], "model.groups")
    classes = block["classes"]
    if not isinstance(classes, list) or len(classes) != 2:  # noqa: PLR2004
        raise ConfigError("model.classes", "expected exactly two classes")
    parsed = tuple(
        _parse_class(item, index, "model.classes")
        for index, item in enumerate(classes)
    )
    if parsed[0].name == parsed[1].name:
        raise ConfigError("model.classes", "class names must be unique")
    return parsed, thinning


def _parse_economics(block: Any) -> EconParams:
    block = _mapping(block, "economics")
    keys = {"discount_rate", "tax_retention", "transaction_cost"}
    _check_keys(block, "economics", keys, keys)
    values = {k: _number(v, f"economics.{k}") for k, v in block.items()}
    if not values["discount_rate"] > 0:
        raise ConfigError("economics.discount_rate", "must be positive")
    if not 0 < values["tax_retention"] < 1:
        raise ConfigError(
            "economics.tax_retention", "must lie strictly between 0 and 1"
        )
    if not values["transaction_cost"] > 0:
        raise ConfigError("economics.transaction_cost", "must be positive")
    return EconParams(**values)


def _parse_numerics(
    block: Any,
) -> tuple[Tolerances, SolverSettings, CheckSettings]:
    block = _mapping(block, "numerics")
    tolerance_keys = {f.name for f in dataclasses.fields(Tolerances)}
    _check_keys(
        block, "numerics", tolerance_keys | SOLVER_KEYS | CHECKER_KEYS
    )
    values = {
        k: _number(v, f"numerics.{k}", integer=k in INTEGER_FIELDS)
        for k, v in block.items()
    }
    tolerances = _record(
        Tolerances,
        {k: v for k, v in values.items() if k in tolerance_keys},
        "numerics",
    )
    solver = _record(
        SolverSettings,
        {k: v for k, v in values.items() if k in SOLVER_KEYS},
        "numerics",
    )
    checks = CheckSettings()
    if "checker_tolerance" in values:
        if not values["checker_tolerance"] > 0:
            raise ConfigError("numerics.checker_tolerance", "must be positive")
        checks = dataclasses.replace(
            checks, generator_factor=values["checker_tolerance"]
        )
    return tolerances, solver, checks


def _parse_simulation(block: Any) -> SimConfig:
    block = _mapping(block, "simulation")
    _check_keys(block, "simulation", SIMULATION_KEYS)
    values = {}
    for key, value in block.items():
        if key == "antithetic":
            if not isinstance(value, bool):
                raise ConfigError("simulation.antithetic", "expected a bool")
            values[key] = value
        else:
            values[key] = _number(
                value, f"simulation.{key}", integer=key in INTEGER_FIELDS
            )
    return _record(SimConfig, values, "simulation")


def parse_config(document: Any, source: Optional[Path] = None) -> RunConfig:
    """
    Validate a configuration document.

    Parameters:
        document:  The decoded JSON document.
        source:  The file it was read from, if any.

    Returns:
        The :class:`RunConfig`.

    Raises:
        ConfigError:  Naming the first offending field.
    """
    document = _mapping(document, "(document)")
    _check_keys(document, "", BLOCKS, {"model", "economics"})
    classes, thinning = _parse_model(document["model"])
    econ = _parse_economics(document["economics"])
    tolerances, solver, checks = _parse_numerics(
        document.get("numerics", {})
    )
    simulation = _parse_simulation(document.get("simulation", {}))
    output_dir = document.get("output_dir", DEFAULT_OUTPUT_DIR)
    if not isinstance(output_dir, str) or not output_dir:
        raise ConfigError("output_dir", "expected a non-empty path")
    if os.environ.get(OUTPUT_DIR_VARIABLE):
        output_dir = os.environ[OUTPUT_DIR_VARIABLE]
        logger.debug("Output directory overridden by %s.", OUTPUT_DIR_VARIABLE)
    return RunConfig(
        params=ModelParams(classes, thinning, econ),
        tolerances=tolerances,
        solver=solver,
        checks=checks,
        simulation=simulation,
        output_dir=Path(output_dir),
        source=source,
        document=document,
    )


def read_document(path: Path) -> dict:
    """
    Read a configuration document.

    Raises:
        ConfigError:  If the file is unreadable or not JSON.
    """
    path = Path(path)
    try:
        return json.loads(path.read_text())
    except OSError as error:
        raise ConfigError(str(path), f"cannot read:  {error}") from error
    except json.JSONDecodeError as error:
        raise ConfigError(str(path), f"invalid JSON:  {error}") from error


def load_config(path: Path) -> RunConfig:
    """Read and validate the configuration file at ``path``."""
    config = parse_config(read_document(path), source=Path(path))
    logger.info("Loaded configuration from %s.", path)
    return config


def _child(node: Any, key: str, path: str) -> tuple[Any, Any]:
    """The container slot named by ``key``:  a dict key or list entry."""
    if isinstance(node, dict):
        if key not in node:
            raise ConfigError(path, "no such field")
        return node, key
    if isinstance(node, list):
        for index, item in enumerate(node):
            if isinstance(item, dict) and item.get("name") == key:
                return node, index
        if key.isdigit() and int(key) < len(node):
            return node, int(key)
        raise ConfigError(path, "no such entry")
    raise ConfigError(path, "not a container")


def override(document: dict, dotted: str, value: Any) -> dict:
    """
    Replace one scalar leaf of a configuration document.

    Parameters:
        document:  The raw document; it is not modified.
        dotted:  The dotted path of the leaf.  List entries are named
            by their ``name`` field or by index, as in
            ``model.groups.common.intensity``.
        value:  The new value.

    Returns:
        A modified copy of ``document``.

    Raises:
        ConfigError:  If the path names no scalar leaf.
    """
    result = copy.deepcopy(document)
    keys = dotted.split(".")
    node = result
    for depth, key in enumerate(keys):
        path = ".".join(keys[: depth + 1])
        container, slot = _child(node, key, path)
        if depth == len(keys) - 1:
            if isinstance(container[slot], (dict, list)):
                raise ConfigError(path, "not a scalar field")
            container[slot] = value
        else:
            node = container[slot]
    return result
