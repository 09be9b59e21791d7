"""
Provides the optimal retention curves, dividend band and value function.

The retention curve is built as one or two segments.  On each segment
the class-1 retention ``q`` runs from a starting level to the next one
(or to ``inf``), the surplus at which it is reached is the cumulative
integral of a positive density in ``q``, and so the curve ``q_1(x)`` is
the inverse of a :class:`~impulse_reinsurance.numerics.MonotoneTable`.

* ``CASE1`` (``z_l <= z_k``):  one segment from ``q_0`` to ``inf`` on
  which both classes are reinsured.
* ``CASE2`` (``z_l > z_k``):  a segment from ``z_k`` to ``z_l`` on which
  class 2 is fully ceded (``q_2 = 0``), then a segment from ``z_l`` to
  ``inf`` as in ``CASE1``.

The surplus ``x_0`` at which the curve reaches ``inf`` is the critical
point above which no reinsurance is bought.  Along the curve the value
function satisfies ``δ W = S(q_1) W'`` with ``S`` the drift-minus-risk
rate of the segment, which gives both ``W`` and ``∫ W'`` in closed form
once the marginal value ``U = W'/scale`` is known.
"""

# SPDX-License-Identifier: BSD-3-Clause

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from time import perf_counter
from typing import Callable, Optional, Union

import numpy as np

from .auxiliary import AuxContext
from .errors import (
    DegenerateBandError,
    NegativeSurplusError,
    NoBracketError,
    ParameterError,
    TailNotQuadraticError,
    WrongCaseError,
)
from .model import (
    Case,
    DerivedConstants,
    EconParams,
    ModelParams,
    derive_constants,
)
from .numerics import (
    DEFAULT_TOLERANCES,
    MonotoneTable,
    Tolerances,
    find_root,
    integrate,
    integrate_ode,
    tabulate_inverse,
)

logger = logging.getLogger(__name__)

Surplus = Union[float, np.ndarray]
MAX_BRACKET_STEPS = 200


@dataclass(frozen=True)
class SolverSettings:
    """
    Grid controls of the solver.

    Attributes:
        retention_max (float):  The largest tabulated retention; the
            curve beyond it follows its asymptotic tail.
        uniform_step (float):  Retention node spacing below 1.
        growth (float):  Retention node ratio above 1.
        value_nodes (int):  Surplus nodes on ``[0, x_0]`` for exported
            value tables.
        ode_check_points (int):  Interior points of the ODE
            cross-check.
        tail_tolerance (float):  Allowed relative drift of
            ``y**2 * density(y)`` between ``retention_max`` and twice
            that.
    """

    retention_max: float = 1e6
    uniform_step: float = 0.005
    growth: float = 1.01
    value_nodes: int = 2000
    ode_check_points: int = 20
    tail_tolerance: float = 0.05

    def __post_init__(self) -> None:
        """Validate the settings."""
        if not self.retention_max > 1:
            message = "`retention_max` must exceed 1."
            raise ParameterError(message)
        if not 0 < self.uniform_step < 1:
            message = "`uniform_step` must lie in (0, 1)."
            raise ParameterError(message)
        if not self.growth > 1:
            message = "`growth` must exceed 1."
            raise ParameterError(message)
        if self.value_nodes < 2 or self.ode_check_points < 1:  # noqa: PLR2004
            message = "Node counts must be positive."
            raise ParameterError(message)
        if not self.tail_tolerance > 0:
            message = "`tail_tolerance` must be positive."
            raise ParameterError(message)


class SegmentKind:
    """The two kinds of curve segment."""

    SINGLE = "single"  # class 2 fully ceded, S = k
    PAIRED = "paired"  # both classes reinsured, S = H


def _segment_functions(
    context: AuxContext, kind: str
) -> tuple[Callable, Callable, Callable]:
    """The rate ``S``, its derivative and the decay rate of ``W'``."""
    if kind == SegmentKind.SINGLE:
        return (
            context.k_fn,
            context.k_prime,
            lambda q: context.theta1 / q,
        )
    return context.H, context.H_prime, context.risk_rate


@dataclass(frozen=True)
class CurveSegment:
    """
    One piece of the retention curve.

    Attributes:
        kind (str):  A :class:`SegmentKind` value.
        x_start (float):  The surplus where the segment starts.
        q_start (float):  The class-1 retention at ``x_start``.
        q_end (float):  The class-1 retention at the end, maybe ``inf``.
        position (MonotoneTable):  Surplus offset from ``x_start`` as a
            function of ``q``.
        exponent (MonotoneTable):  The accumulated decay exponent of
            ``W'`` as a function of ``q``.
        length (float):  The surplus width of the segment.
        total_exponent (float):  The exponent accumulated over the
            whole segment.
        tail_position (float):  ``C`` in ``length - x(q) ~ C/q`` beyond
            the table.
        tail_exponent (float):  ``C`` in ``total - Λ(q) ~ C/q**2``
            beyond the table.
        rate (Optional[MonotoneTable]):  The rate ``S`` as a function of
            ``q``.
        rate_limit (float):  ``S`` at ``q_end``.
    """

    kind: str
    x_start: float
    q_start: float
    q_end: float
    position: MonotoneTable = field(repr=False)
    exponent: MonotoneTable = field(repr=False)
    length: float
    total_exponent: float
    tail_position: float = 0.0
    tail_exponent: float = 0.0
    rate: Optional[MonotoneTable] = field(default=None, repr=False)
    rate_limit: float = math.nan

    @property
    def x_end(self) -> float:
        """The surplus where the segment ends."""
        return self.x_start + self.length

    @property
    def table_end(self) -> float:
        """The largest tabulated retention."""
        return self.position.domain[1]

    @property
    def second_reinsured(self) -> bool:
        """Whether class 2 keeps a positive retention."""
        return self.kind == SegmentKind.PAIRED

    def retention(self, x: Surplus) -> np.ndarray:
        """
        The class-1 retention at surplus ``x`` inside the segment.

        Parameters:
            x:  Surplus levels in ``[x_start, x_end]``.

        Returns:
            The retentions, ``inf`` at ``x_end`` for the last segment.
        """
        local = np.atleast_1d(np.asarray(x, dtype=float)) - self.x_start
        tabulated = self.position.range[1]
        result = np.full_like(local, math.inf)
        inside = local <= tabulated
        if np.any(inside):
            result[inside] = self.position.inverse(
                np.clip(local[inside], 0.0, tabulated)
            )
        tail = ~inside & (local < self.length)
        if np.any(tail):
            result[tail] = self.tail_position / (self.length - local[tail])
        if not math.isinf(self.q_end):
            result = np.minimum(result, self.q_end)
        return result

    def position_at(self, q: float) -> float:
        """The surplus offset at which retention ``q`` is reached."""
        if q <= self.table_end:
            return float(self.position(q))
        if math.isinf(q):
            return self.length
        return self.length - self.tail_position / q

    def exponent_at(self, q: Surplus) -> np.ndarray:
        """The accumulated exponent ``Λ(q)``."""
        levels = np.atleast_1d(np.asarray(q, dtype=float))
        result = np.full_like(levels, self.total_exponent)
        inside = levels <= self.table_end
        if np.any(inside):
            result[inside] = self.exponent(levels[inside])
        tail = ~inside & np.isfinite(levels)
        if np.any(tail):
            result[tail] = (
                self.total_exponent - self.tail_exponent / levels[tail] ** 2
            )
        return result

    def retention_for_exponent(self, value: float) -> float:
        """Invert :meth:`exponent_at`."""
        tabulated = self.exponent.range[1]
        if value <= tabulated:
            return float(self.exponent.inverse(value))
        if value >= self.total_exponent:
            return math.inf
        return math.sqrt(self.tail_exponent / (self.total_exponent - value))

    def rate_at(self, q: Surplus) -> np.ndarray:
        """
        The rate ``S(q)`` of ``δ W = S W'`` on this segment.

        Beyond the table ``S`` approaches its limit like ``1/q``.
        """
        levels = np.atleast_1d(np.asarray(q, dtype=float))
        result = np.full_like(levels, self.rate_limit)
        inside = levels <= self.table_end
        if np.any(inside):
            result[inside] = self.rate(levels[inside])
        tail = ~inside & np.isfinite(levels)
        if np.any(tail):
            last = float(self.rate.values[-1])
            result[tail] = self.rate_limit - (
                self.rate_limit - last
            ) * self.table_end / levels[tail]
        return result


def _check_tail(
    density: Callable[[float], float], start: float, tolerance: float
) -> None:
    near = start * start * density(start)
    far = 4.0 * start * start * density(2.0 * start)
    if not (math.isfinite(near) and math.isfinite(far) and near > 0):
        message = f"Curve density is not usable near q = {start!r}."
        raise TailNotQuadraticError(message)
    if abs(far / near - 1.0) > tolerance:
        message = (
            f"Curve density does not decay like q**-2:  q**2 density moves "
            f"from {near:.6g} to {far:.6g} between q = {start:g} and "
            f"{2 * start:g}."
        )
        raise TailNotQuadraticError(message)


def _build_segment(
    context: AuxContext,
    kind: str,
    x_start: float,
    q_start: float,
    q_end: float,
    settings: SolverSettings,
) -> CurveSegment:
    rate_fn, slope_fn, decay_fn = _segment_functions(context, kind)
    delta = context.delta

    def density(q: float) -> float:
        return slope_fn(q) / (delta + rate_fn(q) * decay_fn(q))

    def exponent_density(q: float) -> float:
        return decay_fn(q) * density(q)

    stop = settings.retention_max if math.isinf(q_end) else q_end
    grid = {
        "uniform_step": settings.uniform_step,
        "growth": settings.growth,
        "tolerances": context.tolerances,
    }
    position = tabulate_inverse(density, q_start, stop, **grid)
    exponent = tabulate_inverse(exponent_density, q_start, stop, **grid)
    length = position.range[1]
    total_exponent = exponent.range[1]
    nodes = position.arguments
    rate = MonotoneTable(
        nodes,
        np.array([rate_fn(q) for q in nodes]),
        np.array([slope_fn(q) for q in nodes]),
    )
    rate_limit = rate_fn(q_end)
    tail_position = tail_exponent = 0.0
    if math.isinf(q_end):
        _check_tail(density, stop, settings.tail_tolerance)
        extra_position = integrate(
            density, stop, math.inf, context.tolerances.tail_abs
        )
        extra_exponent = integrate(
            exponent_density, stop, math.inf, context.tolerances.tail_abs
        )
        length += extra_position
        total_exponent += extra_exponent
        tail_position = stop * extra_position
        tail_exponent = stop * stop * extra_exponent
    logger.debug(
        "Built a %s segment over q in [%g, %g]:  width %.10g, exponent %.10g.",
        kind,
        q_start,
        q_end,
        length,
        total_exponent,
    )
    return CurveSegment(
        kind=kind,
        x_start=x_start,
        q_start=q_start,
        q_end=q_end,
        position=position,
        exponent=exponent,
        length=length,
        total_exponent=total_exponent,
        tail_position=tail_position,
        tail_exponent=tail_exponent,
        rate=rate,
        rate_limit=rate_limit,
    )


@dataclass(frozen=True)
class RetentionCurve:
    """
    The optimal retention levels as functions of the surplus.

    Attributes:
        case (Case):  Which solution structure applies.
        segments (tuple[CurveSegment, ...]):  The segments in order of
            increasing surplus.
        context (AuxContext):  The auxiliary functions the curve was
            built from.
        ode_gap (float):  Largest relative gap between the tabulated
            curve and a direct integration of its ODE.
    """

    case: Case
    segments: tuple[CurveSegment, ...]
    context: AuxContext = field(repr=False, compare=False)
    ode_gap: float = math.nan

    @property
    def x0(self) -> float:
        """The critical surplus above which nothing is reinsured."""
        return self.segments[-1].x_end

    @property
    def x_tilde0(self) -> Optional[float]:
        """Where class 2 starts to be retained (``CASE2`` only)."""
        if self.case == Case.CASE2:
            return self.segments[0].x_end
        return None

    @property
    def q_start(self) -> float:
        """The class-1 retention at zero surplus."""
        return self.segments[0].q_start

    def locate(self, x: np.ndarray) -> np.ndarray:
        """The segment index of each surplus below ``x_0``."""
        starts = np.array([s.x_start for s in self.segments])
        return np.clip(
            np.searchsorted(starts, x, side="right") - 1,
            0,
            len(self.segments) - 1,
        )

    def retentions(self, x: Surplus) -> tuple[np.ndarray, np.ndarray]:
        """
        Evaluate both retention levels, in solver labeling.

        Parameters:
            x:  Non-negative surplus levels.

        Returns:
            Arrays ``(q_1, q_2)``; both ``inf`` at and above ``x_0``.
        """
        surplus = np.atleast_1d(np.asarray(x, dtype=float))
        first = np.full_like(surplus, math.inf)
        second = np.full_like(surplus, math.inf)
        below = surplus < self.x0
        where = self.locate(surplus)
        partner = np.vectorize(self.context.partner, otypes=[float])
        for index, segment in enumerate(self.segments):
            mask = below & (where == index)
            if not np.any(mask):
                continue
            q = segment.retention(surplus[mask])
            first[mask] = q
            second[mask] = partner(q) if segment.second_reinsured else 0.0
        return first, second


def eval_q(curve: RetentionCurve, x: Surplus) -> tuple:
    """
    Evaluate the optimal retention levels.

    Parameters:
        curve:  A built retention curve.
        x:  One or more non-negative surplus levels.

    Returns:
        ``(q_1, q_2)`` in solver labeling, as floats for scalar input.

    Raises:
        NegativeSurplusError:  If any ``x < 0``.
    """
    _check_surplus(x)
    first, second = curve.retentions(x)
    if np.ndim(x) == 0:
        return float(first[0]), float(second[0])
    return first, second


def _check_surplus(x: Surplus) -> None:
    if np.any(np.asarray(x) < 0):
        message = "Surplus must be non-negative."
        raise NegativeSurplusError(message)


def _ode_gap(
    context: AuxContext,
    segment: CurveSegment,
    settings: SolverSettings,
) -> float:
    """Compare the first segment with a direct integration of its ODE."""
    rate_fn, slope_fn, decay_fn = _segment_functions(context, segment.kind)
    delta = context.delta

    def rhs(_x: float, state: np.ndarray) -> np.ndarray:
        q = float(state[0])
        return np.array([(delta + rate_fn(q) * decay_fn(q)) / slope_fn(q)])

    stop = 0.75 * segment.length
    trajectory = integrate_ode(
        rhs,
        (segment.x_start, segment.x_start + stop),
        np.array([segment.q_start]),
        context.tolerances.ode_rtol,
    )
    checks = segment.x_start + np.linspace(
        0.0, stop, settings.ode_check_points + 1
    )[1:]
    direct = trajectory(checks)[0]
    tabulated = segment.retention(checks)
    gap = float(np.max(np.abs(direct - tabulated) / np.abs(tabulated)))
    if gap > 1e-6:  # noqa: PLR2004
        logger.warning(
            "Retention curve and its ODE differ by %.3g (relative).", gap
        )
    else:
        logger.debug("ODE cross-check gap:  %.3g.", gap)
    return gap


def build_case1_curves(
    context: AuxContext, settings: SolverSettings = SolverSettings()
) -> RetentionCurve:
    """
    Build the retention curve when ``z_l <= z_k``.

    The class-1 retention starts at ``q_0`` and the surplus at which it
    reaches ``q`` is ``G(q) = ∫_{q_0}^q H'/(δ + H c_1 θ_1/D) dy``;
    ``x_0 = G(inf)``.

    Parameters:
        context:  The auxiliary functions.
        settings:  Grid controls.

    Returns:
        A one-segment :class:`RetentionCurve`.

    Raises:
        WrongCaseError:  If ``z_l > z_k``.
    """
    if not context.is_case1:
        message = "CASE1 curves need z_l <= z_k."
        raise WrongCaseError(message)
    q0 = context.q0()
    segment = _build_segment(
        context, SegmentKind.PAIRED, 0.0, q0, math.inf, settings
    )
    gap = _ode_gap(context, segment, settings)
    logger.info("CASE1 curve:  q0 = %.10g, x0 = %.10g.", q0, segment.x_end)
    return RetentionCurve(Case.CASE1, (segment,), context, gap)


def build_case2_curves(
    context: AuxContext, settings: SolverSettings = SolverSettings()
) -> RetentionCurve:
    """
    Build the retention curve when ``z_l > z_k``.

    Below ``x̃_0 = R_1(z_l)`` class 2 is fully ceded and the class-1
    retention runs from ``z_k`` to ``z_l`` with density
    ``k'/(δ + θ_1 k/y)``; above it both classes are reinsured as in
    ``CASE1``, starting from ``z_l``.

    Parameters:
        context:  The auxiliary functions.
        settings:  Grid controls.

    Returns:
        A two-segment :class:`RetentionCurve`.

    Raises:
        WrongCaseError:  If ``z_l <= z_k``.
    """
    if context.is_case1:
        message = "CASE2 curves need z_l > z_k."
        raise WrongCaseError(message)
    z_l, z_k = context.z_l(), context.z_k()
    single = _build_segment(
        context, SegmentKind.SINGLE, 0.0, z_k, z_l, settings
    )
    paired = _build_segment(
        context, SegmentKind.PAIRED, single.x_end, z_l, math.inf, settings
    )
    gap = _ode_gap(context, single, settings)
    logger.info(
        "CASE2 curve:  x~0 = %.10g, x0 = %.10g.", single.x_end, paired.x_end
    )
    return RetentionCurve(Case.CASE2, (single, paired), context, gap)


class MarginalValue:
    """
    The marginal value ``U = W'/scale``, normalized so that ``U(x_0) = 1``.

    Below ``x_0``, ``U(x) = exp(∫_x^{x_0} a)`` with ``a`` the decay rate
    along the curve; above it,
    ``U = b_1 r_+ e^{r_+ s} + b_2 r_- e^{r_- s}`` with ``s = x - x_0``.
    ``U`` is convex with its minimum ``1`` at ``x_0``.  Its antiderivative
    from 0 is known in closed form, ``S(q_1(x)) U(x)/δ`` below ``x_0`` and
    ``b_1 e^{r_+ s} + b_2 e^{r_- s}`` above.
    """

    def __init__(self, curve: RetentionCurve, consts: DerivedConstants):
        """
        Initialize a :class:`MarginalValue`.

        Parameters:
            curve:  The retention curve.
            consts:  The aggregate constants of the same parameters.
        """
        self.curve = curve
        self.consts = consts
        self.context = curve.context
        self.delta = self.context.delta
        totals = [s.total_exponent for s in curve.segments]
        self.offsets = [math.fsum(totals[j + 1 :]) for j in range(len(totals))]

    @property
    def x0(self) -> float:
        """The critical surplus."""
        return self.curve.x0

    def _segment_eval(self, x: np.ndarray, body: Callable) -> np.ndarray:
        result = np.zeros_like(x)
        below = x < self.x0
        where = self.curve.locate(x)
        for index, segment in enumerate(self.curve.segments):
            mask = below & (where == index)
            if np.any(mask):
                q = segment.retention(x[mask])
                result[mask] = body(index, segment, q, x[mask])
        return result

    def _log_below(self, x: np.ndarray) -> np.ndarray:
        return self._segment_eval(
            x,
            lambda j, seg, q, _x: self.offsets[j]
            + seg.total_exponent
            - seg.exponent_at(q),
        )

    def _above(self, x: np.ndarray, order: int) -> np.ndarray:
        c = self.consts
        s = np.maximum(x - self.x0, 0.0)
        return c.b1 * c.r_plus**order * np.exp(c.r_plus * s) + (
            c.b2 * c.r_minus**order * np.exp(c.r_minus * s)
        )

    def __call__(self, x: Surplus) -> Surplus:
        """Evaluate ``U``."""
        surplus = np.atleast_1d(np.asarray(x, dtype=float))
        result = np.where(
            surplus < self.x0,
            np.exp(self._log_below(surplus)),
            self._above(surplus, 1),
        )
        return _like(result, x)

    def decay_rate(self, x: Surplus) -> Surplus:
        """The rate ``a(x) = -U'/U`` below ``x_0``; zero above."""
        surplus = np.atleast_1d(np.asarray(x, dtype=float))

        def body(_j, segment, q, _x):
            decay = _segment_functions(self.context, segment.kind)[2]
            return np.vectorize(decay, otypes=[float])(q)

        return _like(self._segment_eval(surplus, body), x)

    def slope(self, x: Surplus) -> Surplus:
        """Evaluate ``U'``."""
        surplus = np.atleast_1d(np.asarray(x, dtype=float))
        below = -np.atleast_1d(self.decay_rate(surplus)) * np.atleast_1d(
            self(surplus)
        )
        result = np.where(surplus < self.x0, below, self._above(surplus, 2))
        return _like(result, x)

    def antiderivative(self, x: Surplus) -> Surplus:
        """Evaluate ``Φ(x) = ∫_0^x U``."""
        surplus = np.atleast_1d(np.asarray(x, dtype=float))
        rates = self._segment_eval(
            surplus, lambda _j, segment, q, _x: segment.rate_at(q)
        )
        below = rates * np.atleast_1d(self(surplus)) / self.delta
        result = np.where(surplus < self.x0, below, self._above(surplus, 0))
        result = np.where(surplus == 0, 0.0, result)
        return _like(result, x)

    @property
    def at_zero(self) -> float:
        """``U(0)``."""
        first = self.curve.segments[0]
        return math.exp(self.offsets[0] + first.total_exponent)

    def level_above(self, target: float) -> float:
        """
        Find ``x >= x_0`` with ``U(x) = target``.

        Parameters:
            target:  A value at least 1.

        Returns:
            The surplus level.
        """
        if target <= 1.0:
            return self.x0

        def excess(s: float) -> float:
            return float(self._above(np.array([self.x0 + s]), 1)[0]) - target

        upper = 1.0
        for _ in range(MAX_BRACKET_STEPS):
            if excess(upper) > 0:
                break
            upper *= 2.0
        else:
            message = f"U never reaches {target!r} above x0."
            raise NoBracketError(message)
        tol = self.context.tolerances.root_abs
        return self.x0 + find_root(excess, (0.0, upper), tol)

    def level_below(self, target: float) -> float:
        """
        Find ``x <= x_0`` with ``U(x) = target``.

        Parameters:
            target:  A value in ``[1, U(0)]``.

        Returns:
            The surplus level; ``0`` for targets at or above ``U(0)``.
        """
        if target <= 1.0:
            return self.x0
        log_target = math.log(target)
        for index in reversed(range(len(self.curve.segments))):
            segment = self.curve.segments[index]
            ceiling = self.offsets[index] + segment.total_exponent
            if log_target <= ceiling:
                q = segment.retention_for_exponent(ceiling - log_target)
                return segment.x_start + segment.position_at(q)
        return 0.0

    def gain_between(self, c: float, k: float) -> float:
        """
        The net gain ``I_1(c) = ∫_{x̃_c}^{x̂_c} (k - c U)`` of one payment.

        The band ``(x̃_c, x̂_c)`` solves ``c U = k`` on either side of
        ``x_0``, so ``I_1(k) = 0`` and ``I_1`` decreases in ``c``.

        Parameters:
            c:  A scale in ``[k/U(0), k]``.
            k:  The share of a payment reaching the shareholders.

        Returns:
            The gain, before the fixed cost.
        """
        upper = self.level_above(k / c)
        lower = self.level_below(k / c)
        return k * (upper - lower) - c * (
            self.antiderivative(upper) - self.antiderivative(lower)
        )

    def gain_from_zero(self, c: float, k: float) -> float:
        """The gain ``I_2(c) = ∫_0^{x̂_c} (k - c U)`` of paying out all."""
        upper = self.level_above(k / c)
        return k * upper - c * self.antiderivative(upper)



def _like(result: np.ndarray, x: Surplus) -> Surplus:
    if np.ndim(x) == 0:
        return float(result[0])
    return result


@dataclass(frozen=True)
class Band:
    """
    The impulse dividend band and the scale of the value function.

    Attributes:
        scale (float):  ``c*``, so that ``W' = c* U`` below the band.
        lower (float):  ``x̃``, the level the surplus is paid down to.
        upper (float):  ``x̂``, the level that triggers a payment.
        liquidate (bool):  Whether the whole surplus is paid out at the
            first payment (``x̃ = 0``).
        threshold (float):  ``c̄ = k/U(0)``, which selects the branch.
        residual (float):  Residual of the solved branch equation.
    """

    scale: float
    lower: float
    upper: float
    liquidate: bool
    threshold: float
    residual: float


def determine_band(
    marginal: MarginalValue,
    econ: EconParams,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> Band:
    """
    Fix the scale of ``W`` and the dividend band.

    For ``c`` in ``[c̄, k]`` the band ``(x̃_c, x̂_c)`` solves
    ``c U = k`` on either side of ``x_0``, and the net gain of one
    payment is ``I_1(c) = ∫_{x̃_c}^{x̂_c} (k - c U)``.  If ``I_1(c̄) > K``
    the scale solves ``I_1(c*) = K``; otherwise the whole surplus is
    paid at ``x̂`` and the scale solves
    ``I_2(c*) = ∫_0^{x̂_c}(k - cU) = K``.

    Parameters:
        marginal:  The marginal value ``U``.
        econ:  The economic parameters.
        tolerances:  The root tolerance.

    Returns:
        The :class:`Band`.

    Raises:
        DegenerateBandError:  If ``U(0)`` is not finite or not above 1.
    """
    k, cost = econ.tax_retention, econ.transaction_cost
    u_zero = marginal.at_zero
    if not (math.isfinite(u_zero) and u_zero > 1.0):
        message = f"U(0) = {u_zero!r} cannot support a dividend band."
        raise DegenerateBandError(message)
    threshold = k / u_zero

    def gain_between(c: float) -> float:
        return marginal.gain_between(c, k)

    def gain_from_zero(c: float) -> float:
        return marginal.gain_from_zero(c, k)

    tol = tolerances.root_abs
    if gain_between(threshold) > cost:
        scale = find_root(
            lambda c: gain_between(c) - cost, (threshold, k), tol
        )
        lower = marginal.level_below(k / scale)
        residual = gain_between(scale) - cost
        liquidate = False
    else:
        floor = threshold
        for _ in range(MAX_BRACKET_STEPS):
            floor *= 0.5
            if gain_from_zero(floor) > cost:
                break
        else:
            message = "The one-payment gain never exceeds the cost."
            raise NoBracketError(message)
        scale = find_root(
            lambda c: gain_from_zero(c) - cost, (floor, threshold), tol
        )
        lower = 0.0
        residual = gain_from_zero(scale) - cost
        liquidate = True
    upper = marginal.level_above(k / scale)
    logger.info(
        "Dividend band (%.10g, %.10g) with scale %.10g%s.",
        lower,
        upper,
        scale,
        ", paying out everything" if liquidate else "",
    )
    return Band(scale, lower, upper, liquidate, threshold, residual)


@dataclass(frozen=True)
class ValueFunction:
    """
    The value function ``W``.

    ``W = scale * Φ`` on ``[0, x̂]`` and
    ``W(x) = W(x̃) + k (x - x̃) - K`` above ``x̂``, all multiplied by
    :attr:`factor` (``1`` except for deliberately perturbed copies).

    Attributes:
        case (Case):  The solution structure.
        marginal (MarginalValue):  The normalized marginal value.
        band (Band):  The dividend band and scale.
        econ (EconParams):  The economic parameters.
        factor (float):  A multiplier for negative controls.
    """

    case: Case
    marginal: MarginalValue = field(repr=False)
    band: Band
    econ: EconParams
    factor: float = 1.0

    @property
    def x0(self) -> float:
        """The critical surplus."""
        return self.marginal.x0

    @property
    def x_tilde0(self) -> Optional[float]:
        """Where class 2 starts to be retained (``CASE2`` only)."""
        return self.marginal.curve.x_tilde0

    @property
    def scale(self) -> float:
        """``c*``."""
        return self.band.scale

    def perturbed(self, factor: float) -> ValueFunction:
        """A copy of ``W`` multiplied by ``factor``."""
        return replace(self, factor=self.factor * factor)

    def _split(self, x: Surplus) -> tuple[np.ndarray, np.ndarray]:
        _check_surplus(x)
        surplus = np.atleast_1d(np.asarray(x, dtype=float))
        return surplus, surplus <= self.band.upper

    def value(self, x: Surplus) -> Surplus:
        """Evaluate ``W``."""
        surplus, inside = self._split(x)
        lower = self.band.lower
        anchor = self.scale * float(self.marginal.antiderivative(lower))
        linear = (
            anchor
            + self.econ.tax_retention * (surplus - lower)
            - self.econ.transaction_cost
        )
        below = self.scale * np.atleast_1d(
            self.marginal.antiderivative(np.minimum(surplus, self.band.upper))
        )
        return _like(self.factor * np.where(inside, below, linear), x)

    def derivative(self, x: Surplus) -> Surplus:
        """Evaluate ``W'``."""
        surplus, inside = self._split(x)
        below = self.scale * np.atleast_1d(
            self.marginal(np.minimum(surplus, self.band.upper))
        )
        result = np.where(inside, below, self.econ.tax_retention)
        return _like(self.factor * result, x)

    def second_derivative(self, x: Surplus) -> Surplus:
        """Evaluate ``W''``, taking the left limit at ``x̂``."""
        surplus, inside = self._split(x)
        below = self.scale * np.atleast_1d(
            self.marginal.slope(np.minimum(surplus, self.band.upper))
        )
        return _like(self.factor * np.where(inside, below, 0.0), x)

    def coefficients(self) -> dict[str, float]:
        """
        The closed-form coefficients of ``W``.

        Returns:
            ``c_star``, ``c5`` and ``c6`` (coefficients of
            ``e^{r_± (x - x_0)}`` above ``x_0``), and for ``CASE2`` also
            ``C1``, ``C2`` and ``C3 = W(x̃_0)``.
        """
        consts = self.marginal.consts
        scale = self.factor * self.scale
        result = {
            "c_star": scale,
            "c5": scale * consts.b1,
            "c6": scale * consts.b2,
        }
        if self.case == Case.CASE2:
            result["C2"] = scale
            result["C1"] = scale * float(self.marginal(self.x_tilde0))
            result["C3"] = float(self.value(self.x_tilde0))
        return result

    def __call__(self, x: Surplus) -> Surplus:
        """Evaluate ``W``."""
        return self.value(x)


def build_value_function(
    context: AuxContext,
    curve: RetentionCurve,
    consts: Optional[DerivedConstants] = None,
) -> ValueFunction:
    """
    Assemble ``W`` from the retention curve.

    Parameters:
        context:  The auxiliary functions.
        curve:  The retention curve of the same parameters.
        consts:  The aggregate constants, derived if not given.

    Returns:
        The value function, with its dividend band fixed.
    """
    if consts is None:
        consts = derive_constants(
            context.params, context.tolerances, context=context
        )
    marginal = MarginalValue(curve, consts)
    band = determine_band(marginal, context.params.econ, context.tolerances)
    return ValueFunction(curve.case, marginal, band, context.params.econ)


def eval_W(vf: ValueFunction, x: Surplus) -> Surplus:  # noqa: N802
    """
    Evaluate the value function.

    Parameters:
        vf:  A built value function.
        x:  One or more non-negative surplus levels.

    Returns:
        ``W(x)``.

    Raises:
        NegativeSurplusError:  If any ``x < 0``.
    """
    return vf.value(x)


@dataclass(frozen=True)
class Policy:
    """
    The optimal strategy:  feedback retentions plus the dividend band.

    Whenever the surplus reaches :attr:`upper` it is paid down to
    :attr:`lower`; with :attr:`liquidate` the first payment takes
    everything and ends the business.

    Attributes:
        curve (RetentionCurve):  The retention curve.
        lower (float):  ``x̃``.
        upper (float):  ``x̂``.
        liquidate (bool):  Whether ``x̃ = 0`` with a single payment.
    """

    curve: RetentionCurve = field(repr=False)
    lower: float
    upper: float
    liquidate: bool

    def retentions(self, x: Surplus) -> tuple[np.ndarray, np.ndarray]:
        """The retention levels, in solver labeling."""
        return self.curve.retentions(np.maximum(x, 0.0))


@dataclass(frozen=True)
class Solution:
    """
    Everything the solver produces for one parameter set.

    Attributes:
        params (ModelParams):  The parameters as given.
        constants (DerivedConstants):  The aggregate constants.
        curve (RetentionCurve):  The retention curve.
        value (ValueFunction):  The value function.
        policy (Policy):  The optimal strategy.
        seconds (float):  Wall time of the solve.
    """

    params: ModelParams = field(repr=False)
    constants: DerivedConstants
    curve: RetentionCurve = field(repr=False)
    value: ValueFunction = field(repr=False)
    policy: Policy = field(repr=False)
    seconds: float = 0.0

    def user_retentions(self, x: Surplus) -> tuple[np.ndarray, np.ndarray]:
        """The retention levels in the caller's class labeling."""
        first, second = self.curve.retentions(x)
        if self.constants.relabeled:
            return second, first
        return first, second

    def summary(self) -> dict:
        """
        Collect the scalar results.

        Returns:
            A flat record of constants, critical points, band and
            coefficients.
        """
        consts = self.constants
        record = {
            "case": consts.case.value,
            "relabeled": consts.relabeled,
            "c1": consts.c1,
            "c2": consts.c2,
            "c3": consts.c3,
            "k0": consts.k0,
            "K1": consts.K1,
            "K2": consts.K2,
            "r_plus": consts.r_plus,
            "r_minus": consts.r_minus,
            "b1": consts.b1,
            "b2": consts.b2,
            "z_l": consts.z_l,
            "z_k": consts.z_k,
            "q_start": self.curve.q_start,
            "x0": self.curve.x0,
            "x_tilde0": self.curve.x_tilde0,
            "band_lower": self.value.band.lower,
            "band_upper": self.value.band.upper,
            "liquidate": self.value.band.liquidate,
            "c_bar": self.value.band.threshold,
            "band_residual": self.value.band.residual,
            "ode_gap": self.curve.ode_gap,
        }
        record.update(self.value.coefficients())
        return record


def value_grid(vf: ValueFunction, nodes: int = 2000) -> np.ndarray:
    """
    Surplus nodes for tabulating ``W``.

    ``nodes`` points on ``[0, x_0]``, geometric refinement within 1% of
    ``x_0``, and a quarter as many points from ``x_0`` to ``1.25 x̂``.
    """
    x0, upper = vf.x0, vf.band.upper
    refine = x0 * (1.0 - np.geomspace(1e-2, 1e-8, 40))
    above = np.linspace(x0, 1.25 * upper, max(nodes // 4, 2))
    return np.unique(
        np.concatenate([np.linspace(0.0, x0, nodes), refine, above])
    )


def solve(
    params: ModelParams,
    settings: SolverSettings = SolverSettings(),
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> Solution:
    """
    Solve the combined reinsurance and dividend problem.

    Parameters:
        params:  The problem parameters, in any class order.
        settings:  Grid controls.
        tolerances:  Numerical tolerances.

    Returns:
        The :class:`Solution`.
    """
    start = perf_counter()
    context = AuxContext(params, tolerances)
    consts = derive_constants(params, tolerances, context=context)
    if consts.case == Case.CASE1:
        curve = build_case1_curves(context, settings)
    else:
        curve = build_case2_curves(context, settings)
    value = build_value_function(context, curve, consts)
    policy = Policy(
        curve, value.band.lower, value.band.upper, value.band.liquidate
    )
    seconds = perf_counter() - start
    logger.info("Solved %s in %.2f s.", consts.case.value, seconds)
    return Solution(params, consts, curve, value, policy, seconds)
