"""Tests for the ``impulse_reinsurance.qvi_check`` module."""

# SPDX-License-Identifier: BSD-3-Clause

import pytest

from impulse_reinsurance import Solution, check_solution
from impulse_reinsurance.errors import ParameterError, WrongCaseError
from impulse_reinsurance.qvi_check import (
    CheckSettings,
    QviReport,
    generator_residual,
    intervention_value,
    phi_boundary_check,
    retention_surface,
    smoothness_check,
)


@pytest.fixture(scope="module")
def base_report(base_solution: Solution) -> QviReport:
    """
    Check the solved base parameter set once.

    Parameters:
        base_solution:  The solved base parameter set.

    Returns:
        The :class:`QviReport`.
    """
    return check_solution(base_solution)


def test_optimal_solution_passes(base_report: QviReport) -> None:
    """
    Ensure the solver's value function satisfies every check.

    Parameters:
        base_report:  The report on the base solution.
    """
    assert base_report.passed, base_report.worst()
    assert base_report.worst() == ""
    assert base_report.phi is None
    assert base_report.argmax_share >= 0.95


def test_case2_solution_passes(case2_solution: Solution) -> None:
    """
    Ensure the ``CASE2`` solution passes, including the ``φ`` check.

    Parameters:
        case2_solution:  The solved ``CASE2`` parameter set.
    """
    report = check_solution(case2_solution)
    assert report.passed, report.worst()
    assert report.phi is not None
    assert report.phi.passed
    assert report.phi.argmax == (report.phi.q1_star, 0.0)
    assert report.phi.stationary_slope == pytest.approx(0.0, abs=1e-9)
    assert report.phi.slope_beyond < 0


def test_perturbed_value_fails(base_solution: Solution) -> None:
    """
    Ensure a value function one percent too high is rejected.

    Parameters:
        base_solution:  The solved base parameter set.
    """
    perturbed = base_solution.value.perturbed(1.01)
    report = check_solution(base_solution, value=perturbed)
    assert not report.passed
    assert "x_hat" in report.worst()
    assert not report.smoothness.passed


def test_smoothness(base_solution: Solution) -> None:
    """
    Ensure ``W`` is continuously differentiable at its free boundaries.

    Parameters:
        base_solution:  The solved base parameter set.
    """
    report = smoothness_check(base_solution.value)
    assert report.passed
    assert set(report.slope_gaps) == {"x0", "x_hat"}
    assert report.linear_slope == pytest.approx(
        base_solution.params.econ.tax_retention
    )


@pytest.mark.parametrize("weight", [0.0, 0.5])
def test_generator_residual(base_solution: Solution, weight: float) -> None:
    """
    Ensure the solver's retentions maximize the generator.

    Parameters:
        base_solution:  The solved base parameter set.
        weight:  Where the surplus sits between ``x_0/2`` and ``x̂``.
    """
    vf = base_solution.value
    tolerance = 1e-4 * base_solution.params.econ.discount_rate * vf(vf.x0)
    x = (1 - weight) * 0.5 * vf.x0 + weight * vf.band.upper
    residual = generator_residual(
        vf, base_solution.curve, x, retention_surface(vf)
    )
    assert residual.x == x
    assert abs(residual.at_policy) <= tolerance
    assert residual.grid_max <= tolerance


def test_intervention_value(base_solution: Solution) -> None:
    """
    Ensure paying down from ``x̂`` to ``x̃`` attains ``W(x̂)``.

    Parameters:
        base_solution:  The solved base parameter set.
    """
    vf = base_solution.value
    upper = vf.band.upper
    assert intervention_value(vf, upper) == pytest.approx(vf(upper))
    inside = 0.5 * vf.x0
    assert intervention_value(vf, inside) < vf(inside)
    with pytest.raises(ParameterError, match="positive surplus"):
        intervention_value(vf, 0.0)


def test_phi_check_needs_case2(base_solution: Solution) -> None:
    """
    Ensure the low-surplus check refuses a ``CASE1`` curve.

    Parameters:
        base_solution:  The solved base parameter set.
    """
    curve = base_solution.curve
    with pytest.raises(WrongCaseError):
        phi_boundary_check(curve.context, curve, 0.1)


def test_phi_check_surplus_range(case2_solution: Solution) -> None:
    """
    Ensure the low-surplus check refuses a surplus above ``x̃_0``.

    Parameters:
        case2_solution:  The solved ``CASE2`` parameter set.
    """
    curve = case2_solution.curve
    with pytest.raises(ParameterError, match="not below"):
        phi_boundary_check(curve.context, curve, curve.x0)


def test_check_settings_validation() -> None:
    """Ensure the checker grids are range-checked."""
    with pytest.raises(ParameterError):
        CheckSettings(retention_low=10.0, retention_high=1.0)
    with pytest.raises(ParameterError):
        CheckSettings(argmax_share=0.0)
