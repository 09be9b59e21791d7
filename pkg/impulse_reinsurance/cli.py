"""
Provides the ``impulse-reinsurance`` command-line interface.

Commands:

* ``solve CONFIG``:  write ``constants.json``, ``curves.csv`` and
  ``value.csv``.
* ``sweep CONFIG --param PATH --values V1,V2,...``:  solve once per value
  and write ``sweep.csv``.
* ``verify CONFIG [--perturb F]``:  solve and run the QVI checks.
* ``simulate CONFIG --x0 X [--strategy NAME]``:  estimate the value of a
  strategy by Monte Carlo and compare it with ``W(x)``.

Exit codes:  0 success, 2 invalid configuration, 3 solver failure,
4 failed verification, 5 simulation disagreeing with ``W``.
"""

# SPDX-License-Identifier: BSD-3-Clause

from __future__ import annotations

import argparse
import dataclasses
import functools
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .config import (
    RunConfig,
    load_config,
    override,
    parse_config,
    read_document,
)
from .errors import ConfigError, InvalidConfigError, ReinsuranceError
from .policy_solver import Solution, eval_W, solve, value_grid
from .qvi_check import QviReport, check_solution
from .run_log import RunLog
from .serialization import csv_text, dumps, write_csv, write_json
from .simulator import (
    RetentionRule,
    SimConfig,
    SimulationRun,
    Strategy,
    baseline_strategy,
    compare_strategies,
    estimate,
    run_paths,
    truncation_bound,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_CHECK = 4
EXIT_SIMULATION = 5
SWEEP_COLUMNS = (
    "parameter",
    "value",
    "z_l",
    "z_k",
    "case",
    "x0",
    "x_hat",
    "x_tilde",
    "error",
)


def create_parser() -> argparse.ArgumentParser:
    """
    Create the command-line parser.

    Returns:
        The parser, with one sub-command per operation.
    """
    parser = argparse.ArgumentParser(
        prog="impulse-reinsurance",
        description=(
            "Optimal excess-of-loss reinsurance and impulse dividends for "
            "a two-class diffusion surplus."
        ),
    )
    parser.add_argument(
        "-v",
        "--verbose",
        action="count",
        default=0,
        help="Log progress to stderr (-v for INFO, -vv for DEBUG).",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    solve_parser = commands.add_parser(
        "solve", help="Solve the control problem and write its tables."
    )
    solve_parser.add_argument("config", type=Path, help="The JSON config.")
    solve_parser.set_defaults(handler=cmd_solve)

    sweep_parser = commands.add_parser(
        "sweep", help="Solve once per value of one configuration field."
    )
    sweep_parser.add_argument("config", type=Path, help="The JSON config.")
    sweep_parser.add_argument(
        "--param",
        required=True,
        help="Dotted path of the field, e.g. model.groups.common.intensity.",
    )
    sweep_parser.add_argument(
        "--values",
        required=True,
        help="Comma-separated values, e.g. 1,1.5,2.",
    )
    sweep_parser.add_argument(
        "--workers",
        type=int,
        default=None,
        help="Worker processes (default:  one per value, up to the CPUs).",
    )
    sweep_parser.set_defaults(handler=cmd_sweep)

    verify_parser = commands.add_parser(
        "verify", help="Check the solution against the QVI."
    )
    verify_parser.add_argument("config", type=Path, help="The JSON config.")
    verify_parser.add_argument(
        "--perturb",
        type=float,
        default=None,
        help="Multiply W by this factor before checking.",
    )
    verify_parser.set_defaults(handler=cmd_verify)

    simulate_parser = commands.add_parser(
        "simulate", help="Estimate the value of a strategy by Monte Carlo."
    )
    simulate_parser.add_argument("config", type=Path, help="The JSON config.")
    simulate_parser.add_argument(
        "--x0", type=float, required=True, help="The initial surplus."
    )
    simulate_parser.add_argument(
        "--strategy",
        default="optimal",
        choices=[rule.rule_name for rule in RetentionRule.subclasses],
        help="The retention rule, combined with the optimal band.",
    )
    simulate_parser.add_argument(
        "--fraction",
        type=float,
        default=0.5,
        help="Retention per unit of surplus of the proportional rule.",
    )
    simulate_parser.add_argument(
        "--levels",
        default=None,
        help="Comma-separated retentions of the fixed rule, e.g. 1,inf.",
    )
    simulate_parser.add_argument(
        "--compare",
        nargs="+",
        choices=[rule.rule_name for rule in RetentionRule.subclasses],
        default=None,
        metavar="RULE",
        help="Also rank these rules and the optimal policy.",
    )
    simulate_parser.add_argument(
        "--band-shifts",
        nargs="+",
        type=float,
        default=None,
        metavar="FACTOR",
        help="Also rank the optimal policy with its band scaled by these.",
    )
    simulate_parser.add_argument("--seed", type=int, default=None)
    simulate_parser.add_argument("--paths", type=int, default=None)
    simulate_parser.add_argument("--workers", type=int, default=None)
    simulate_parser.add_argument(
        "--trace",
        type=Path,
        default=None,
        help="Write the surplus of the first paths to this CSV file.",
    )
    simulate_parser.add_argument(
        "--trace-paths",
        type=int,
        default=10,
        help="How many paths --trace records.",
    )
    simulate_parser.set_defaults(handler=cmd_simulate)
    return parser


def _configure_logging(verbosity: int) -> None:
    level = {0: logging.WARNING, 1: logging.INFO}.get(verbosity, logging.DEBUG)
    logging.basicConfig(
        level=level,
        format="%(asctime)s %(levelname)s %(name)s:  %(message)s",
        stream=sys.stderr,
    )


def _solve(config: RunConfig) -> Solution:
    return solve(config.params, config.solver, config.tolerances)


# solve ------------------------------------------------------------------


def curve_rows(solution: Solution, nodes: int) -> list[tuple]:
    """
    Tabulate the retention curve below ``x_0``.

    Returns:
        Rows ``(x, q1, q2, q1 - q2)`` in the caller's class labeling.
    """
    grid = value_grid(solution.value, nodes)
    grid = grid[grid < solution.curve.x0]
    first, second = solution.user_retentions(grid)
    return list(zip(grid, first, second, first - second))


def value_rows(solution: Solution, nodes: int) -> list[tuple]:
    """
    Tabulate ``W``, ``W'`` and ``U = W'/c*``.

    Returns:
        Rows ``(x, W, W', U)`` on ``[0, 1.25 x̂]``.
    """
    vf = solution.value
    grid = value_grid(vf, nodes)
    value = np.atleast_1d(vf.value(grid))
    slope = np.atleast_1d(vf.derivative(grid))
    return list(zip(grid, value, slope, slope / (vf.factor * vf.scale)))


def write_solution(solution: Solution, config: RunConfig) -> list[Path]:
    """Write ``constants.json``, ``curves.csv`` and ``value.csv``."""
    directory = config.output_dir
    nodes = config.solver.value_nodes
    return [
        write_json(directory / "constants.json", solution.summary()),
        write_csv(
            directory / "curves.csv",
            ("x", "q1", "q2", "diff"),
            curve_rows(solution, nodes),
        ),
        write_csv(
            directory / "value.csv",
            ("x", "W", "Wprime", "U"),
            value_rows(solution, nodes),
        ),
    ]


def cmd_solve(args: argparse.Namespace) -> int:
    """Run the ``solve`` command."""
    config = load_config(args.config)
    run_log = RunLog("solve", config.output_dir, config=args.config)
    exit_code = EXIT_SOLVER
    try:
        with run_log.step("Solve the control problem.") as entry:
            solution = _solve(config)
            entry["case"] = solution.constants.case
            entry["x0"] = solution.curve.x0
        with run_log.step("Write the solution tables.") as entry:
            entry["files"] = write_solution(solution, config)
        print(dumps(solution.summary()), end="")
        exit_code = EXIT_OK
    finally:
        run_log.finalize(exit_code)
    return exit_code


# sweep ------------------------------------------------------------------


def _parse_values(text: str) -> list[float]:
    try:
        values = [float(item) for item in text.split(",") if item.strip()]
    except ValueError as error:
        message = f"not a number list:  {text!r}"
        raise ConfigError("--values", message) from error
    if not values:
        raise ConfigError("--values", "at least one value is required")
    return values


def sweep_row(document: dict, param: str, value: float) -> dict:
    """
    Solve for one value of a swept field.

    Failures are recorded in the ``error`` column instead of raised.
    """
    row = dict.fromkeys(SWEEP_COLUMNS)
    row.update(parameter=param, value=value, error="")
    try:
        config = parse_config(override(document, param, value))
        solution = _solve(config)
    except ReinsuranceError as error:
        row["error"] = f"{type(error).__name__}: {error}"
        logger.warning("Sweep row %s = %g failed:  %s", param, value, error)
        return row
    consts = solution.constants
    row.update(
        z_l=consts.z_l,
        z_k=consts.z_k,
        case=consts.case.value,
        x0=solution.curve.x0,
        x_hat=solution.policy.upper,
        x_tilde=solution.policy.lower,
    )
    return row


def cmd_sweep(args: argparse.Namespace) -> int:
    """Run the ``sweep`` command."""
    document = read_document(args.config)
    config = parse_config(document, source=args.config)
    values = _parse_values(args.values)
    override(document, args.param, values[0])
    workers = args.workers or min(len(values), os.cpu_count() or 1)
    run_log = RunLog("sweep", config.output_dir, config=args.config)
    exit_code = EXIT_SOLVER
    try:
        with run_log.step(f"Sweep {args.param} over {values}.") as entry:
            row = functools.partial(sweep_row, document, args.param)
            if workers == 1:
                rows = [row(value) for value in values]
            else:
                with ProcessPoolExecutor(max_workers=workers) as executor:
                    rows = list(executor.map(row, values))
            entry["failed_rows"] = sum(1 for row in rows if row["error"])
        table = [[row[column] for column in SWEEP_COLUMNS] for row in rows]
        write_csv(config.output_dir / "sweep.csv", SWEEP_COLUMNS, table)
        print(csv_text(SWEEP_COLUMNS, table), end="")
        exit_code = EXIT_OK
    finally:
        run_log.finalize(exit_code)
    return exit_code


# verify -----------------------------------------------------------------


def report_record(report: QviReport) -> dict:
    """The scalar content of a :class:`QviReport`."""
    record = {
        "passed": report.passed,
        "case": report.case,
        "tolerance": report.tolerance,
        "checkpoints": int(report.points.size),
        "generator_max": float(np.max(report.generator_max)),
        "generator_at_policy": float(
            np.max(np.abs(report.generator_at_policy))
        ),
        "intervention_gap_max": float(
            np.max(report.intervention_gap, initial=-np.inf)
        ),
        "upper_gap": report.upper_gap,
        "argmax_share": report.argmax_share,
        "smoothness": report.smoothness,
        "failures": list(report.failures),
    }
    if report.phi is not None:
        record["phi"] = report.phi
    return record


def cmd_verify(args: argparse.Namespace) -> int:
    """Run the ``verify`` command."""
    config = load_config(args.config)
    run_log = RunLog("verify", config.output_dir, config=args.config)
    exit_code = EXIT_SOLVER
    try:
        with run_log.step("Solve the control problem."):
            solution = _solve(config)
        value = solution.value
        if args.perturb is not None:
            value = value.perturbed(args.perturb)
            run_log.print(f"W multiplied by {args.perturb}.")
        with run_log.step("Check the QVI.") as entry:
            report = check_solution(solution, config.checks, value=value)
            entry["passed"] = report.passed
        record = report_record(report)
        write_json(config.output_dir / "qvi.json", record)
        print(dumps(record), end="")
        if report.passed:
            exit_code = EXIT_OK
        else:
            print(f"Worst violation:  {report.worst()}", file=sys.stderr)
            exit_code = EXIT_CHECK
    finally:
        run_log.finalize(exit_code)
    return exit_code


# simulate ---------------------------------------------------------------


def _strategy(
    args: argparse.Namespace, solution: Solution, name: str
) -> Strategy:
    if name == "proportional":
        return baseline_strategy(name, solution, fraction=args.fraction)
    if name == "fixed":
        if args.levels is None:
            raise ConfigError("--levels", "required by the fixed rule")
        try:
            levels = [float(item) for item in args.levels.split(",")]
        except ValueError as error:
            raise ConfigError("--levels", str(error)) from error
        return baseline_strategy(name, solution, levels=levels)
    return baseline_strategy(name, solution)


def _shifted(args: argparse.Namespace, optimal: Strategy) -> list:
    factors = dict.fromkeys(args.band_shifts or [])
    if any(not factor > 0 for factor in factors):
        raise ConfigError("--band-shifts", "factors must be positive")
    return [optimal.shifted(factor) for factor in factors if factor != 1]


def _sim_config(args: argparse.Namespace, config: RunConfig) -> SimConfig:
    changes = {
        key: getattr(args, key)
        for key in ("seed", "paths", "workers")
        if getattr(args, key) is not None
    }
    if args.trace is not None:
        changes["trace_paths"] = args.trace_paths
    return dataclasses.replace(config.simulation, **changes)


def write_trace(path: Path, run: SimulationRun) -> Path:
    """Write the surplus of the traced paths, one column per path."""
    header = ["t"] + [f"path{i}" for i in range(run.trace.shape[1])]
    rows = np.column_stack([run.times, run.trace])
    return write_csv(path, header, rows.tolist())


def cmd_simulate(args: argparse.Namespace) -> int:
    """Run the ``simulate`` command."""
    config = load_config(args.config)
    cfg = _sim_config(args, config)
    if not args.x0 >= 0:
        raise ConfigError("--x0", "the initial surplus must be non-negative")
    run_log = RunLog("simulate", config.output_dir, config=args.config)
    exit_code = EXIT_SOLVER
    try:
        with run_log.step("Solve the control problem."):
            solution = _solve(config)
        strategy = _strategy(args, solution, args.strategy)
        target = float(eval_W(solution.value, args.x0))
        with run_log.step(f"Simulate '{strategy.name}'.") as entry:
            run = run_paths(config.params, strategy, args.x0, cfg)
            bound = truncation_bound(config.params, strategy.band, cfg.horizon)
            result = estimate(run, bound)
            entry["mean"] = result.mean
        slack = 3.0 * result.standard_error + result.truncation_bound
        if strategy.name == "optimal":
            verdict = result.agrees_with(target)
        else:
            verdict = result.mean <= target + slack
        record = {
            "strategy": strategy.describe(),
            "x0": args.x0,
            "estimate": result,
            "W": target,
            "agrees": verdict,
            "simulation": cfg,
        }
        if args.compare or args.band_shifts:
            names = dict.fromkeys(
                ["optimal", strategy.name, *(args.compare or [])]
            )
            strategies = [_strategy(args, solution, name) for name in names]
            strategies += _shifted(args, strategies[0])
            with run_log.step("Compare strategies."):
                comparison = compare_strategies(
                    config.params, strategies, args.x0, cfg
                )
            record["ranking"] = comparison.ranking
            record["differences"] = comparison.differences
        if args.trace is not None:
            write_trace(args.trace, run)
        write_json(config.output_dir / "simulation.json", record)
        print(dumps(record), end="")
        if verdict:
            exit_code = EXIT_OK
        else:
            print(
                f"Estimate {result.mean:.6g} +/- {result.standard_error:.3g} "
                f"rejects W({args.x0:g}) = {target:.6g}.",
                file=sys.stderr,
            )
            exit_code = EXIT_SIMULATION
    finally:
        run_log.finalize(exit_code)
    return exit_code


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Run the command line.

    Parameters:
        argv:  The arguments, ``sys.argv[1:]`` by default.

    Returns:
        The exit code.
    """
    args = create_parser().parse_args(argv)
    _configure_logging(args.verbose)
    try:
        return args.handler(args)
    except (ConfigError, InvalidConfigError) as error:
        print(f"Invalid configuration:  {error}", file=sys.stderr)
        return EXIT_CONFIG
    except ReinsuranceError as error:
        message = f"Solver failure:  {type(error).__name__}: {error}"
        print(message, file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
