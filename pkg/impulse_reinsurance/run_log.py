"""Provides the :class:`RunLog` class, the record behind ``run.json``."""

# SPDX-License-Identifier: BSD-3-Clause

from __future__ import annotations

import logging
from contextlib import contextmanager
from datetime import datetime, timedelta
from pathlib import Path
from typing import Iterator, Optional

from .serialization import write_json

logger = logging.getLogger(__name__)


class RunLog:
    """
    Keep track of the steps of one command-line run.

    Each step (solve, check, simulate, ...) is appended to the
    :attr:`log_book` with its wall time and outcome; :meth:`finalize`
    writes everything to ``run.json`` in the output directory.

    Example::

        run_log = RunLog("solve", Path("results"), config=Path("cfg.json"))
        with run_log.step("Solve the control problem.") as entry:
            solution = solve(params)
            entry["case"] = solution.constants.case
        run_log.finalize(exit_code=0)

    Attributes:
        command (str):  The command being run.
        output_dir (Path):  Where ``run.json`` goes.
        config (Optional[Path]):  The configuration file.
        log_book (list[dict]):  One entry per step.
        init_time (datetime):  When the run started.
        done_time (datetime):  When the run (or its latest step) ended.
        duration (Optional[str]):  The formatted total duration.
    """

    def __init__(
        self,
        command: str,
        output_dir: Path,
        *,
        config: Optional[Path] = None,
        init_time: Optional[datetime] = None,
    ) -> None:
        """
        Initialize a :class:`RunLog` object.

        Parameters:
            command:  The command being run.
            output_dir:  Where ``run.json`` will be written.
            config:  The configuration file of the run.
            init_time:  Optionally specify when the run started.
        """
        self.command = command
        self.output_dir = Path(output_dir)
        self.config = config
        self.log_book: list[dict] = []
        self.init_time = datetime.now() if init_time is None else init_time
        self.done_time = self.init_time
        self.duration: Optional[str] = None

    @staticmethod
    def strfdelta(delta: timedelta, fmt: str = "{hrs}h {min}m {sec}s") -> str:
        """
        Convert a time delta to a string.

        Parameters:
            delta:  The time delta object.
            fmt:  The format string, with ``days``, ``hrs``, ``min`` and
                ``sec`` fields.

        Returns:
            A string representation of the time delta.
        """
        seconds = delta.total_seconds()
        d = {"days": delta.days}
        d["hrs"], rem = divmod(int(seconds * 1e6), 3600 * 10**6)
        d["min"], rem = divmod(rem, 60 * 10**6)
        d["sec"] = round(rem / 1e6, 2)
        return fmt.format(**d)

    @contextmanager
    def step(self, msg: str) -> Iterator[dict]:
        """
        Time one step and record it in the :attr:`log_book`.

        Parameters:
            msg:  What the step does.

        Yields:
            The log entry, to which the caller may add results.  If the
            step raises, the entry records the error before it
            propagates.
        """
        start = datetime.now()
        entry = {
            "msg": msg,
            "timestamp": start.strftime("%Y-%m-%d_%H%M%S"),
            "outcome": "ok",
        }
        try:
            yield entry
        except Exception as error:
            entry["outcome"] = f"{type(error).__name__}: {error}"
            raise
        finally:
            self.done_time = datetime.now()
            entry["seconds"] = (self.done_time - start).total_seconds()
            self.log_book.append(entry)
            logger.debug(
                "%s  (%.2f s, %s)", msg, entry["seconds"], entry["outcome"]
            )

    def print(self, msg: str) -> None:
        """Record a message without timing anything."""
        self.log_book.append({"msg": msg})

    def finalize(self, exit_code: int) -> Path:
        """
        Write ``run.json``.

        Parameters:
            exit_code:  The exit code of the command.

        Returns:
            The path of the written file.
        """
        self.done_time = datetime.now()
        self.duration = self.strfdelta(self.done_time - self.init_time)
        record = {
            "command": self.command,
            "config": self.config,
            "exit_code": exit_code,
            "init_time": self.init_time,
            "done_time": self.done_time,
            "duration": self.duration,
            "log_book": self.log_book,
        }
        return write_json(self.output_dir / "run.json", record)
