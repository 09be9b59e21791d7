#!/usr/bin/env python3
"""An example of solving the problem and ranking strategies by simulation."""

# SPDX-License-Identifier: BSD-3-Clause

import logging
from pathlib import Path

from impulse_reinsurance import check_solution, compare_strategies, solve
from impulse_reinsurance.config import load_config
from impulse_reinsurance.simulator import baseline_strategy

logging.basicConfig(level=logging.INFO, format="%(levelname)s:  %(message)s")
config = load_config(Path(__file__).parent / "example1_lambda2.json")
solution = solve(config.params, config.solver, config.tolerances)
policy = solution.policy
print(
    f"Case {solution.constants.case.value}:  full retention from "
    f"x0 = {solution.curve.x0:.4f}, pay down to {policy.lower:.4f} "
    f"once the surplus reaches {policy.upper:.4f}."
)
report = check_solution(solution, config.checks)
if report.passed:
    print("The value function passes every QVI check.")
else:
    print(f"QVI check failed:  {report.worst()}")

strategies = [
    baseline_strategy("optimal", solution),
    baseline_strategy("no-reinsurance", solution),
    baseline_strategy("proportional", solution, fraction=0.5),
    baseline_strategy("fixed", solution, levels=[1.0, 1.0]),
]
x_start = solution.curve.x0
comparison = compare_strategies(
    config.params, strategies, x_start, config.simulation
)
for name in comparison.ranking:
    result = comparison.estimates[name]
    print(
        f"{name:>15}:  {result.mean:.4f} +/- {result.standard_error:.4f} "
        f"(ruined {result.ruin_fraction:.1%})"
    )
print(f"W({x_start:.4f}) = {float(solution.value(x_start)):.4f}")
