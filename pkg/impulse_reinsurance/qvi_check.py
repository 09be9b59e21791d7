"""
Provides a numerical verification of the quasi-variational inequality.

A candidate value function ``W`` is optimal when, at every surplus,

* ``max_q L^q W - δ W <= 0`` with ``L^q W = ½ b²(q) W'' + d(q) W'``,
* ``M W - W <= 0`` with ``M W(x) = sup_η W(x - η) + k η - K``,

and one of the two holds with equality.  The checks here evaluate both
branches on a surplus grid, compare the maximizing retentions with the
solver's curve, measure the smooth fit at the free boundaries, and in
``CASE2`` confirm that the low-surplus maximization has class 2 fully
ceded.
"""

# SPDX-License-Identifier: BSD-3-Clause

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import minimize_scalar

from .auxiliary import AuxContext
from .errors import ParameterError, WrongCaseError
from .model import Case, drift, variance
from .numerics import find_root
from .policy_solver import RetentionCurve, Solution, ValueFunction, eval_q

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CheckSettings:
    """
    Tolerances and grids of the checker.

    Attributes:
        generator_factor (float):  The generator tolerance is this times
            ``δ W(x_0)``.
        intervention_tolerance (float):  Allowed ``M W - W`` below the
            band, and allowed ``|M W - W|`` at and above it.
        slope_tolerance (float):  Allowed relative ``W'`` jump.
        curvature_tolerance (float):  Allowed ``W''`` jump at ``x_0``.
        surplus_points (int):  Checkpoints on ``(0, 1.5 x̂]``.
        retention_points (int):  Log-spaced retentions per axis.
        retention_low (float):  Smallest positive grid retention.
        retention_high (float):  Largest finite grid retention.
        argmax_share (float):  Share of checkpoints whose grid argmax
            must sit within one cell of the solver's retentions.
        intervention_nodes (int):  Grid size of the ``M W`` search.
    """

    generator_factor: float = 1e-4
    intervention_tolerance: float = 1e-7
    slope_tolerance: float = 1e-6
    curvature_tolerance: float = 1e-5
    surplus_points: int = 120
    retention_points: int = 60
    retention_low: float = 1e-3
    retention_high: float = 1e3
    argmax_share: float = 0.95
    intervention_nodes: int = 2001

    def __post_init__(self) -> None:
        """Validate the settings."""
        if not 0 < self.retention_low < self.retention_high:
            message = "Need 0 < retention_low < retention_high."
            raise ParameterError(message)
        if not 0 < self.argmax_share <= 1:
            message = "`argmax_share` must lie in (0, 1]."
            raise ParameterError(message)
        points = min(self.surplus_points, self.retention_points)
        if points < 2:  # noqa: PLR2004
            message = "Grids need at least two points."
            raise ParameterError(message)


# intervention operator --------------------------------------------------


def _intervention(vf, x: float, nodes: int) -> tuple[float, float]:
    """The supremum of ``W(y) + k (x - y) - K`` over ``0 <= y < x``."""
    k, cost = vf.econ.tax_retention, vf.econ.transaction_cost

    def payoff(y):
        return np.asarray(vf(y)) + k * (x - np.asarray(y)) - cost

    levels = np.linspace(0.0, x, nodes)
    values = payoff(levels)
    best = int(np.argmax(values))
    y_best, v_best = float(levels[best]), float(values[best])
    if 0 < best < nodes - 1:
        refined = minimize_scalar(
            lambda y: -float(payoff(y)),
            bounds=(float(levels[best - 1]), float(levels[best + 1])),
            method="bounded",
            options={"xatol": 1e-12 * max(1.0, x)},
        )
        if refined.success and -refined.fun > v_best:
            y_best, v_best = float(refined.x), float(-refined.fun)
    return v_best, y_best


def intervention_value(vf, x: float, nodes: int = 2001) -> float:
    """
    Evaluate the intervention operator ``M W(x)``.

    Parameters:
        vf:  A callable value function with an ``econ`` attribute
            holding ``tax_retention`` and ``transaction_cost``.
        x:  A positive surplus.
        nodes:  The size of the search grid before local refinement.

    Returns:
        ``sup{W(x - η) + k η - K : 0 < η <= x}``.
    """
    if not x > 0:
        message = "The intervention operator needs a positive surplus."
        raise ParameterError(message)
    return _intervention(vf, x, nodes)[0]


# generator --------------------------------------------------------------


@dataclass(frozen=True)
class RetentionSurface:
    """
    Drift and variance tabulated on a product grid of retentions.

    Attributes:
        levels (np.ndarray):  The axis:  ``0``, log-spaced values and
            ``inf``.
        drift (np.ndarray):  ``d(q_1, q_2)`` on the grid.
        variance (np.ndarray):  ``b²(q_1, q_2)`` on the grid.
    """

    levels: np.ndarray = field(repr=False)
    drift: np.ndarray = field(repr=False)
    variance: np.ndarray = field(repr=False)

    def cell(self, q: float) -> int:
        """The grid index nearest to ``q``, in log scale."""
        if math.isinf(q):
            return self.levels.size - 1
        if q <= 0:
            return 0
        finite = self.levels[1:-1]
        position = np.abs(np.log(finite) - math.log(q))
        index = int(np.argmin(position)) + 1
        if q < finite[0] and q < 0.5 * finite[0]:
            return 0
        return index


def retention_surface(
    vf: ValueFunction, settings: CheckSettings = CheckSettings()
) -> RetentionSurface:
    """
    Tabulate drift and variance for the generator maximization.

    Parameters:
        vf:  The value function, whose constants fix the model.
        settings:  The grid controls.

    Returns:
        The :class:`RetentionSurface`.
    """
    consts = vf.marginal.consts
    params = vf.marginal.context.params
    levels = np.concatenate(
        [
            [0.0],
            np.geomspace(
                settings.retention_low,
                settings.retention_high,
                settings.retention_points,
            ),
            [math.inf],
        ]
    )
    first, second = np.meshgrid(levels, levels, indexing="ij")
    return RetentionSurface(
        levels,
        drift(consts, params, first, second),
        variance(consts, params, first, second),
    )


@dataclass(frozen=True)
class GeneratorResidual:
    """
    ``L^q W - δ W`` at one surplus.

    Attributes:
        x (float):  The surplus.
        at_policy (float):  The residual at the solver's retentions.
        grid_max (float):  The largest residual on the grid.
        argmax (tuple[float, float]):  Where the grid maximum sits.
        matches (bool):  Whether the argmax is within one grid cell of
            the solver's retentions on both axes.
    """

    x: float
    at_policy: float
    grid_max: float
    argmax: tuple[float, float]
    matches: bool


def generator_residual(
    vf: ValueFunction,
    curve: RetentionCurve,
    x: float,
    surface: RetentionSurface,
) -> GeneratorResidual:
    """
    Evaluate the generator branch of the inequality at one surplus.

    Parameters:
        vf:  The value function.
        curve:  The retention curve.
        x:  A surplus away from ``x_0`` and ``x̂``.
        surface:  Drift and variance on the retention grid.

    Returns:
        The :class:`GeneratorResidual`.
    """
    consts = vf.marginal.consts
    params = curve.context.params
    delta = params.econ.discount_rate
    w = float(vf.value(x))
    slope = float(vf.derivative(x))
    curvature = float(vf.second_derivative(x))
    residual = (
        0.5 * surface.variance * curvature + surface.drift * slope - delta * w
    )
    i, j = np.unravel_index(int(np.argmax(residual)), residual.shape)
    q1, q2 = eval_q(curve, x)
    at_policy = (
        0.5 * float(variance(consts, params, q1, q2)) * curvature
        + float(drift(consts, params, q1, q2)) * slope
        - delta * w
    )
    matches = (
        abs(int(i) - surface.cell(q1)) <= 1
        and abs(int(j) - surface.cell(q2)) <= 1
    )
    return GeneratorResidual(
        x=x,
        at_policy=at_policy,
        grid_max=float(residual[i, j]),
        argmax=(float(surface.levels[i]), float(surface.levels[j])),
        matches=matches,
    )


# smooth fit -------------------------------------------------------------


@dataclass(frozen=True)
class SmoothnessReport:
    """
    Jumps of ``W'`` and ``W''`` across the free boundaries.

    Attributes:
        slope_gaps (dict[str, float]):  Relative ``W'`` jumps at
            ``x_tilde0`` (``CASE2``), ``x0`` and ``x_hat``.
        curvature_gap (float):  ``W''`` jump at ``x_0``.
        slope_at_upper (float):  ``W'(x̂) - k``, from the left.
        linear_slope (float):  The slope of ``W`` beyond ``x̂``.
        passed (bool):  Whether all gaps are within tolerance.
    """

    slope_gaps: dict
    curvature_gap: float
    slope_at_upper: float
    linear_slope: float
    passed: bool


def _one_sided_slopes(vf: ValueFunction, point: float) -> tuple[float, float]:
    h = 1e-5 * max(1.0, point)
    left = (
        3.0 * vf(point) - 4.0 * vf(point - h) + vf(point - 2.0 * h)
    ) / (2.0 * h)
    right = (
        -3.0 * vf(point) + 4.0 * vf(point + h) - vf(point + 2.0 * h)
    ) / (2.0 * h)
    return float(left), float(right)


def smoothness_check(
    vf: ValueFunction, settings: CheckSettings = CheckSettings()
) -> SmoothnessReport:
    """
    Measure the smooth fit of ``W`` at its free boundaries.

    ``W'`` jumps come from second-order one-sided differences of ``W``;
    the ``W''`` jump at ``x_0`` compares the one-sided analytic values
    just left and right of ``x_0``.

    Parameters:
        vf:  The value function.
        settings:  The tolerances.

    Returns:
        The :class:`SmoothnessReport`.
    """
    points = {"x0": vf.x0, "x_hat": vf.band.upper}
    if vf.x_tilde0 is not None:
        points["x_tilde0"] = vf.x_tilde0
    slope_gaps = {}
    for name, point in points.items():
        left, right = _one_sided_slopes(vf, point)
        slope_gaps[name] = abs(left - right) / max(abs(left), abs(right))
    step = 1e-8 * vf.x0
    curvature_gap = abs(
        float(vf.second_derivative(vf.x0 + step))
        - float(vf.second_derivative(vf.x0 - step))
    )
    k = vf.econ.tax_retention
    slope_at_upper = float(vf.derivative(vf.band.upper)) - vf.factor * k
    upper = vf.band.upper
    linear_slope = float(vf(upper + 2.0) - vf(upper + 1.0))
    passed = (
        max(slope_gaps.values()) <= settings.slope_tolerance
        and curvature_gap <= settings.curvature_tolerance
        and abs(slope_at_upper) <= 1e-8 * max(1.0, k)
    )
    return SmoothnessReport(
        slope_gaps, curvature_gap, slope_at_upper, linear_slope, passed
    )


# low-surplus maximization -----------------------------------------------


@dataclass(frozen=True)
class PhiReport:
    """
    Maximization of ``φ(q) = d(q) - θ_1 b²(q)/(2 q_1*)`` below ``x̃_0``.

    Attributes:
        x (float):  The surplus.
        q1_star (float):  The solver's class-1 retention there.
        grid_gap (float):  ``max φ`` on the grid minus ``φ(q_1*, 0)``.
        argmax (tuple[float, float]):  The grid maximizer.
        stationary_slope (float):  ``∂φ/∂q_1`` at ``(q_1*, 0)``.
        slope_beyond (float):  ``∂φ/∂q_1`` at ``(1.1 q_1*, 0)``.
        max_cross_slope (float):  Largest ``L(q_1)``, the sign of
            ``∂φ/∂q_2`` along ``∂φ/∂q_1 = 0``.
        passed (bool):  Whether the maximum is at ``(q_1*, 0)``.
    """

    x: float
    q1_star: float
    grid_gap: float
    argmax: tuple[float, float]
    stationary_slope: float
    slope_beyond: float
    max_cross_slope: float
    passed: bool


def phi_boundary_check(
    context: AuxContext,
    curve: RetentionCurve,
    x: float,
    settings: CheckSettings = CheckSettings(),
) -> PhiReport:
    """
    Confirm that class 2 is fully ceded below ``x̃_0``.

    Parameters:
        context:  The auxiliary functions.
        curve:  A ``CASE2`` retention curve.
        x:  A surplus in ``(0, x̃_0)``.
        settings:  The retention grid.

    Returns:
        The :class:`PhiReport`.

    Raises:
        WrongCaseError:  For a ``CASE1`` curve.
    """
    if curve.case != Case.CASE2:
        message = "The boundary maximization only applies to CASE2."
        raise WrongCaseError(message)
    if not 0 < x < curve.x_tilde0:
        message = f"Surplus {x!r} is not below x~0 = {curve.x_tilde0!r}."
        raise ParameterError(message)
    c1, c2, c3 = context.c1, context.c2, context.c3
    theta1, theta2 = context.theta1, context.theta2
    first, second = context.first.claims, context.second.claims
    q_star = float(eval_q(curve, x)[0])

    def phi(q1, q2):
        d = (
            c1 * theta1 * first.g(q1)
            + c2 * theta2 * second.g(q2)
            + context.k0
        )
        b2 = (
            c1 * first.g2m(q1)
            + c2 * second.g2m(q2)
            + 2.0 * c3 * first.g(q1) * second.g(q2)
        )
        return d - theta1 * b2 / (2.0 * q_star)

    def slope_first(q1, q2):
        return (c1 * theta1 * first.survival(q1) / q_star) * (
            q_star - q1 - (c3 / c1) * second.g(q2)
        )

    axis = np.concatenate(
        [
            [0.0, q_star],
            np.geomspace(
                settings.retention_low,
                settings.retention_high,
                settings.retention_points,
            ),
            [math.inf],
        ]
    )
    axis = np.unique(axis)
    grid_first, grid_second = np.meshgrid(axis, axis, indexing="ij")
    values = phi(grid_first, grid_second)
    i, j = np.unravel_index(int(np.argmax(values)), values.shape)
    peak = float(phi(q_star, 0.0))
    grid_gap = float(values[i, j]) - peak
    # Along ∂φ/∂q1 = 0, g2(q2) = (c1/c3)(q1* - q1) for q1 below q1*.
    reach = min(q_star, 0.999 * (c3 / c1) * second.mean)
    cross = []
    for q1 in q_star - np.linspace(0.0, reach, 50):
        target = (c1 / c3) * (q_star - q1)
        q2 = _truncated_mean_inverse(second, target)
        cross.append(
            c2 * theta2 * q_star
            - theta1 * (c2 * q2 + c3 * float(first.g(q1)))
        )
    tolerance = 1e-10 * max(1.0, abs(peak))
    passed = (
        grid_gap <= tolerance
        and axis[i] == q_star
        and j == 0
        and max(cross) <= tolerance
    )
    return PhiReport(
        x=x,
        q1_star=q_star,
        grid_gap=grid_gap,
        argmax=(float(axis[i]), float(axis[j])),
        stationary_slope=float(slope_first(q_star, 0.0)),
        slope_beyond=float(slope_first(1.1 * q_star, 0.0)),
        max_cross_slope=max(cross),
        passed=passed,
    )


def _truncated_mean_inverse(claims, target: float) -> float:
    if target <= 0:
        return 0.0
    upper = 1.0
    while claims.g(upper) < target:
        upper *= 2.0
    return find_root(lambda q: float(claims.g(q)) - target, (0.0, upper))


# full report ------------------------------------------------------------


@dataclass(frozen=True)
class QviReport:
    """
    The outcome of all checks on one solution.

    Attributes:
        case (str):  The solution structure.
        tolerance (float):  The generator tolerance ``f δ W(x_0)``.
        points (np.ndarray):  The surplus checkpoints.
        generator_at_policy (np.ndarray):  Residual at the solver's
            retentions, per checkpoint.
        generator_max (np.ndarray):  Grid maximum of the residual.
        intervention_gap (np.ndarray):  ``M W - W`` per checkpoint.
        upper_gap (float):  ``M W - W`` at ``x̂``.
        argmax_share (float):  Share of checkpoints below ``x̂`` whose
            argmax matches the solver.
        smoothness (SmoothnessReport):  Smooth-fit gaps.
        phi (Optional[PhiReport]):  The low-surplus check (``CASE2``).
        failures (tuple[str, ...]):  Descriptions of failed checks,
            worst first.
    """

    case: str
    tolerance: float
    points: np.ndarray = field(repr=False)
    generator_at_policy: np.ndarray = field(repr=False)
    generator_max: np.ndarray = field(repr=False)
    intervention_gap: np.ndarray = field(repr=False)
    upper_gap: float
    argmax_share: float
    smoothness: SmoothnessReport
    phi: Optional[PhiReport]
    failures: tuple[str, ...]

    @property
    def passed(self) -> bool:
        """Whether every check passed."""
        return not self.failures

    def worst(self) -> str:
        """The most important failure, or an empty string."""
        return self.failures[0] if self.failures else ""


def _checkpoints(vf: ValueFunction, count: int) -> np.ndarray:
    upper = vf.band.upper
    points = np.linspace(0.0, 1.5 * upper, count + 1)[1:]
    boundaries = [vf.x0, upper]
    if vf.x_tilde0 is not None:
        boundaries.append(vf.x_tilde0)
    keep = np.ones(points.size, dtype=bool)
    for boundary in boundaries:
        keep &= np.abs(points - boundary) > 1e-9 * max(1.0, boundary)
    return points[keep]


def check_solution(
    solution: Solution,
    settings: CheckSettings = CheckSettings(),
    value: Optional[ValueFunction] = None,
) -> QviReport:
    """
    Run every check on a solution.

    Parameters:
        solution:  The solver output.
        settings:  Tolerances and grids.
        value:  A replacement value function (for example a perturbed
            copy); the solution's own by default.

    Returns:
        The :class:`QviReport`.
    """
    vf = solution.value if value is None else value
    curve = solution.curve
    delta = solution.params.econ.discount_rate
    tolerance = settings.generator_factor * delta * float(vf(vf.x0))
    surface = retention_surface(vf, settings)
    points = _checkpoints(vf, settings.surplus_points)
    upper = vf.band.upper
    residuals = [generator_residual(vf, curve, x, surface) for x in points]
    at_policy = np.array([r.at_policy for r in residuals])
    grid_max = np.array([r.grid_max for r in residuals])
    gaps = np.array(
        [
            _intervention(vf, x, settings.intervention_nodes)[0] - vf(x)
            for x in points
        ]
    )
    upper_gap = float(
        _intervention(vf, upper, settings.intervention_nodes)[0] - vf(upper)
    )
    inside = points < upper
    matches = np.array([r.matches for r in residuals])[inside]
    argmax_share = float(np.mean(matches)) if matches.size else 1.0
    smoothness = smoothness_check(vf, settings)
    phi = None
    if curve.case == Case.CASE2:
        phi = phi_boundary_check(
            curve.context, curve, 0.5 * curve.x_tilde0, settings
        )
    failures = []
    gap_tolerance = settings.intervention_tolerance * max(1.0, vf(upper))
    if abs(upper_gap) > gap_tolerance:
        failures.append(
            f"M W - W = {upper_gap:.3e} at x_hat = {upper:.6g}, expected 0."
        )
    beyond = ~inside
    if np.any(beyond):
        active = np.maximum(grid_max[beyond], gaps[beyond])
        worst = float(np.max(np.abs(active)))
        if worst > max(tolerance, gap_tolerance):
            failures.append(
                f"max(L W - δW, M W - W) departs from 0 by {worst:.3e} "
                "above x_hat."
            )
    if np.max(grid_max) > tolerance:
        where = int(np.argmax(grid_max))
        failures.append(
            f"max_q L W - δW = {grid_max[where]:.3e} at x = "
            f"{points[where]:.6g} exceeds {tolerance:.3e}."
        )
    if np.max(np.abs(at_policy[inside])) > tolerance:
        failures.append(
            "Residual at the solver's retentions reaches "
            f"{np.max(np.abs(at_policy[inside])):.3e}."
        )
    if np.any(inside) and np.max(gaps[inside]) > gap_tolerance:
        failures.append(
            f"M W - W = {np.max(gaps[inside]):.3e} below x_hat exceeds "
            f"{gap_tolerance:.3e}."
        )
    if argmax_share < settings.argmax_share:
        failures.append(
            f"Grid argmax matches the curve at only {argmax_share:.1%} "
            "of checkpoints."
        )
    if not smoothness.passed:
        failures.append(
            f"Smooth fit fails:  W' gaps {smoothness.slope_gaps}, W'' gap "
            f"{smoothness.curvature_gap:.3e}, W'(x_hat) - k = "
            f"{smoothness.slope_at_upper:.3e}."
        )
    if phi is not None and not phi.passed:
        failures.append(
            f"φ is not maximized at (q1*, 0) for x = {phi.x:.6g}:  grid gap "
            f"{phi.grid_gap:.3e}, argmax {phi.argmax}."
        )
    report = QviReport(
        case=curve.case.value,
        tolerance=tolerance,
        points=points,
        generator_at_policy=at_policy,
        generator_max=grid_max,
        intervention_gap=gaps,
        upper_gap=upper_gap,
        argmax_share=argmax_share,
        smoothness=smoothness,
        phi=phi,
        failures=tuple(failures),
    )
    if report.passed:
        logger.info("All QVI checks passed (tolerance %.3e).", tolerance)
    else:
        logger.warning("QVI check failed:  %s", report.worst())
    return report
