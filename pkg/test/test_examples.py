"""Tests for the configurations shipped in ``example/``."""

# SPDX-License-Identifier: BSD-3-Clause

from pathlib import Path

import pytest

from impulse_reinsurance import derive_constants, solve
from impulse_reinsurance.config import load_config
from impulse_reinsurance.model import Case

EXAMPLE_DIR = Path(__file__).resolve().parents[1] / "example"


def test_every_example_loads() -> None:
    """Ensure each shipped configuration is valid."""
    paths = sorted(EXAMPLE_DIR.glob("*.json"))
    assert len(paths) == 6
    for path in paths:
        config = load_config(path)
        assert config.output_dir.name == path.stem


@pytest.mark.parametrize(
    ("name", "x0"),
    [
        ("example1_lambda1", 2.2170),
        ("example1_lambda1_5", 2.4666),
        ("example1_lambda2", 2.7262),
        ("example2_theta1_5", 4.8197),
        ("example2_theta2_1", 7.8058),
    ],
)
def test_example_switching_level(name: str, x0: float) -> None:
    """
    Ensure the examples reproduce their full-retention levels.

    Parameters:
        name:  The configuration file stem.
        x0:  The expected level.
    """
    config = load_config(EXAMPLE_DIR / f"{name}.json")
    solution = solve(config.params, config.solver, config.tolerances)
    assert solution.constants.case is Case.CASE1
    assert solution.curve.x0 == pytest.approx(x0, abs=5e-3)


def test_low_surplus_example() -> None:
    """Ensure the low-surplus example has a pure-first-class region."""
    config = load_config(EXAMPLE_DIR / "low_surplus_region.json")
    consts = derive_constants(config.params)
    assert consts.case is Case.CASE2
    assert consts.z_l == pytest.approx(2.43, abs=0.01)
