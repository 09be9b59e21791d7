"""
Provides the shared numerical kernel.

Bracketed root finding, adaptive quadrature (with a ``u = 1/y`` transform
for integrals running to infinity), monotone tables with their inverses,
and explicit adaptive ODE stepping.  Every routine states its tolerance
through a :class:`Tolerances` record.
"""

# SPDX-License-Identifier: BSD-3-Clause

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, fields
from typing import Callable, Union

import numpy as np
from scipy.integrate import IntegrationWarning, quad, solve_ivp
from scipy.interpolate import CubicHermiteSpline
from scipy.optimize import brentq

from .errors import (
    DomainError,
    MaxSubdivisionsError,
    NoBracketError,
    NonFiniteError,
    ParameterError,
)

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]
MAX_ROOT_ITERATIONS = 200
NEWTON_POLISH_STEPS = 3


@dataclass(frozen=True)
class Tolerances:
    """
    Tolerance contract shared by the numerical routines.

    Attributes:
        root_abs (float):  Absolute bracket width at which root finding
            stops.
        quad_rel (float):  Relative (and absolute) quadrature target.
        ode_rtol (float):  Local error target of the ODE stepper.
        tail_abs (float):  Absolute error allowed on improper tails.
        max_subdivisions (int):  Subinterval budget of the adaptive
            quadrature.
    """

    root_abs: float = 1e-10
    quad_rel: float = 1e-9
    ode_rtol: float = 1e-9
    tail_abs: float = 1e-8
    max_subdivisions: int = 200

    def __post_init__(self) -> None:
        """Reject non-positive tolerances."""
        for field in fields(self):
            value = getattr(self, field.name)
            if not value > 0:
                message = f"Tolerance `{field.name}` must be positive."
                raise ParameterError(message)


DEFAULT_TOLERANCES = Tolerances()


def _finite(function: Callable[[float], float], argument: float) -> float:
    value = float(function(argument))
    if not math.isfinite(value):
        message = f"Function returned {value} at {argument!r}."
        raise NonFiniteError(message)
    return value


def find_root(
    function: Callable[[float], float],
    bracket: tuple[float, float],
    tol: float = DEFAULT_TOLERANCES.root_abs,
) -> float:
    """
    Locate a root of a continuous function inside a sign-change bracket.

    Brent's method keeps the bracket at every step, so it converges on
    any sign change of a continuous function.

    Parameters:
        function:  The scalar function.
        bracket:  The interval ``(a, b)`` with ``f(a) * f(b) <= 0``.
        tol:  The absolute bracket width at which to stop.

    Returns:
        An argument ``x`` in the bracket with ``|f(x)|`` small.

    Raises:
        NoBracketError:  If ``f(a)`` and ``f(b)`` share a sign.
        NonFiniteError:  If ``function`` returns a non-finite value.
    """
    lower, upper = float(bracket[0]), float(bracket[1])
    f_lower = _finite(function, lower)
    if f_lower == 0.0:
        return lower
    f_upper = _finite(function, upper)
    if f_upper == 0.0:
        return upper
    if math.copysign(1.0, f_lower) == math.copysign(1.0, f_upper):
        message = (
            f"No sign change on [{lower!r}, {upper!r}]:  f(a) = {f_lower!r}, "
            f"f(b) = {f_upper!r}."
        )
        raise NoBracketError(message)
    return float(
        brentq(
            lambda x: _finite(function, x),
            lower,
            upper,
            xtol=tol,
            rtol=4 * np.finfo(float).eps,
            maxiter=MAX_ROOT_ITERATIONS,
        )
    )


def _quad(
    function: Callable[[float], float],
    lower: float,
    upper: float,
    tol: float,
    limit: int,
) -> float:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IntegrationWarning)
        value, error, *details = quad(
            function,
            lower,
            upper,
            epsabs=tol,
            epsrel=tol,
            limit=limit,
            full_output=1,
        )
    if not math.isfinite(value):
        message = f"Integral over [{lower!r}, {upper!r}] is {value}."
        raise NonFiniteError(message)
    target = tol * (1.0 + abs(value))
    if len(details) > 1 and error > target:
        if error > 1e3 * target:
            message = (
                f"Quadrature over [{lower!r}, {upper!r}] stalled at error "
                f"{error:.3g}:  {details[1]}"
            )
            raise MaxSubdivisionsError(message)
        logger.warning(
            "Quadrature over [%r, %r] reports error %.3g above target %.3g.",
            lower,
            upper,
            error,
            target,
        )
    return float(value)


def integrate(
    function: Callable[[float], float],
    lower: float,
    upper: float,
    tol: float = DEFAULT_TOLERANCES.quad_rel,
    max_subdivisions: int = DEFAULT_TOLERANCES.max_subdivisions,
) -> float:
    """
    Integrate a scalar function with adaptive Gauss–Kronrod quadrature.

    An infinite upper limit is handled by splitting at ``max(lower, 1)``
    and mapping the tail through ``u = 1/y``, which turns an
    ``O(y**-2)`` integrand into a bounded one on ``(0, 1/pivot]``.

    Parameters:
        function:  The integrand, finite on the interval.
        lower:  The lower limit.
        upper:  The upper limit, possibly ``math.inf``.
        tol:  The target ``|result - true| <= tol * (1 + |true|)``.
        max_subdivisions:  The subinterval budget.

    Returns:
        The value of the integral.

    Raises:
        MaxSubdivisionsError:  If the quadrature does not converge.
        NonFiniteError:  If the integral is not finite.
    """
    if upper == lower:
        return 0.0
    if math.isinf(upper):
        pivot = max(lower, 1.0)
        head = (
            _quad(function, lower, pivot, tol, max_subdivisions)
            if pivot > lower
            else 0.0
        )
        tail = _quad(
            lambda u: function(1.0 / u) / (u * u),
            0.0,
            1.0 / pivot,
            tol,
            max_subdivisions,
        )
        return head + tail
    return _quad(function, lower, upper, tol, max_subdivisions)


def retention_grid(
    start: float,
    stop: float,
    *,
    uniform_step: float = 0.02,
    growth: float = 1.05,
) -> np.ndarray:
    """
    Build a node grid for tabulating retention-indexed functions.

    Nodes are uniform below 1 and geometric above it, so resolution
    concentrates both near small retentions and, relatively, near the
    blow-up at large retentions.

    Parameters:
        start:  The first node.
        stop:  The last node.
        uniform_step:  The spacing below 1.
        growth:  The ratio between consecutive nodes above 1.

    Returns:
        A strictly increasing array from ``start`` to ``stop``.
    """
    if not stop > start:
        message = f"Empty grid:  start {start!r} >= stop {stop!r}."
        raise ParameterError(message)
    pieces = []
    knee = min(max(start, 1.0), stop)
    if knee > start:
        count = max(2, math.ceil((knee - start) / uniform_step) + 1)
        pieces.append(np.linspace(start, knee, count))
    if stop > knee:
        count = max(2, math.ceil(math.log(stop / knee) / math.log(growth)) + 1)
        pieces.append(np.geomspace(knee, stop, count))
    return np.unique(np.concatenate(pieces))


def _limit_slopes(
    nodes: np.ndarray, values: np.ndarray, slopes: np.ndarray
) -> np.ndarray:
    # Keeping every slope within three times its neighboring secants is
    # sufficient for a monotone cubic Hermite interpolant.
    secants = np.diff(values) / np.diff(nodes)
    cap = 3.0 * np.minimum(
        np.append(secants, np.inf), np.insert(secants, 0, np.inf)
    )
    return np.clip(np.nan_to_num(slopes, nan=0.0, posinf=np.inf), 0.0, cap)


class MonotoneTable:
    """
    A strictly increasing map tabulated at nodes, together with its inverse.

    Between nodes the map is a cubic Hermite interpolant whose slopes are
    limited so that monotonicity is preserved.  Inverse lookups bracket
    the value in the table, start from the interpolated inverse and
    polish with Newton steps on the forward interpolant, clipped to the
    bracket.

    Attributes:
        arguments (np.ndarray):  The strictly increasing nodes.
        values (np.ndarray):  The strictly increasing values at the nodes.
        slopes (np.ndarray):  The limited derivatives at the nodes.
    """

    def __init__(
        self,
        arguments: np.ndarray,
        values: np.ndarray,
        slopes: np.ndarray | None = None,
    ) -> None:
        """
        Initialize a :class:`MonotoneTable`.

        Parameters:
            arguments:  The nodes.
            values:  The values at the nodes.
            slopes:  The derivatives at the nodes, if known; otherwise
                averaged secants are used.

        Raises:
            ParameterError:  If either sequence is not strictly
                increasing.
        """
        arguments = np.asarray(arguments, dtype=float)
        values = np.asarray(values, dtype=float)
        if arguments.ndim != 1 or arguments.size < 2:
            message = "A monotone table needs at least two nodes."
            raise ParameterError(message)
        if arguments.shape != values.shape:
            message = "Arguments and values must have the same shape."
            raise ParameterError(message)
        if np.any(np.diff(arguments) <= 0) or np.any(np.diff(values) <= 0):
            message = "Arguments and values must be strictly increasing."
            raise ParameterError(message)
        if slopes is None:
            secants = np.diff(values) / np.diff(arguments)
            slopes = np.concatenate(
                [
                    [secants[0]],
                    0.5 * (secants[:-1] + secants[1:]),
                    [secants[-1]],
                ]
            )
        slopes = np.asarray(slopes, dtype=float)
        self.arguments = arguments
        self.values = values
        self.slopes = _limit_slopes(arguments, values, slopes)
        self._forward = CubicHermiteSpline(arguments, values, self.slopes)
        self._forward_slope = self._forward.derivative()
        inverse_slopes = np.divide(
            1.0,
            self.slopes,
            out=np.full_like(self.slopes, np.inf),
            where=self.slopes > 0,
        )
        self._inverse = CubicHermiteSpline(
            values, arguments, _limit_slopes(values, arguments, inverse_slopes)
        )

    @property
    def domain(self) -> tuple[float, float]:
        """The first and last node."""
        return float(self.arguments[0]), float(self.arguments[-1])

    @property
    def range(self) -> tuple[float, float]:
        """The first and last tabulated value."""
        return float(self.values[0]), float(self.values[-1])

    def __call__(self, argument: ArrayLike) -> ArrayLike:
        """
        Evaluate the interpolated map.

        Parameters:
            argument:  One or more arguments inside :attr:`domain`.

        Returns:
            The interpolated values.
        """
        return _scalar_or_array(self._forward(argument), argument)

    def derivative(self, argument: ArrayLike) -> ArrayLike:
        """The slope of the interpolated map."""
        return _scalar_or_array(self._forward_slope(argument), argument)

    def inverse(self, value: ArrayLike) -> ArrayLike:
        """
        Invert the interpolated map.

        Parameters:
            value:  One or more values inside :attr:`range`.

        Returns:
            The arguments mapping onto ``value``.

        Raises:
            DomainError:  If a value lies outside the tabulated range.
        """
        target = np.asarray(value, dtype=float)
        low, high = self.range
        slack = 1e-12 * max(1.0, abs(high))
        if np.any((target < low - slack) | (target > high + slack)):
            message = f"Value outside the tabulated range [{low}, {high}]."
            raise DomainError(message)
        target = np.clip(target, low, high)
        segment = np.clip(
            np.searchsorted(self.values, target, side="right") - 1,
            0,
            self.arguments.size - 2,
        )
        left = self.arguments[segment]
        right = self.arguments[segment + 1]
        guess = np.clip(self._inverse(target), left, right)
        for _ in range(NEWTON_POLISH_STEPS):
            slope = self._forward_slope(guess)
            step = np.divide(
                self._forward(guess) - target,
                slope,
                out=np.zeros_like(guess),
                where=slope > 0,
            )
            guess = np.clip(guess - step, left, right)
        return _scalar_or_array(guess, value)


def _scalar_or_array(result: np.ndarray, like: ArrayLike) -> ArrayLike:
    if np.ndim(like) == 0:
        return float(result)
    return np.asarray(result, dtype=float)


def tabulate_inverse(
    integrand: Callable[[float], float],
    start: float,
    stop: float,
    *,
    uniform_step: float = 0.02,
    growth: float = 1.05,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> MonotoneTable:
    """
    Tabulate ``F(q) = ∫_start^q integrand`` as an invertible table.

    Parameters:
        integrand:  A strictly positive integrand.
        start:  Where ``F`` vanishes.
        stop:  The last tabulated argument.
        uniform_step:  Node spacing below 1 (see
            :func:`retention_grid`).
        growth:  Node ratio above 1.
        tolerances:  The quadrature tolerances.

    Returns:
        The table of ``(q, F(q))`` with the integrand as node slopes.

    Raises:
        DomainError:  If the integrand is not strictly positive.
    """
    grid = retention_grid(
        start, stop, uniform_step=uniform_step, growth=growth
    )
    slopes = np.array([float(integrand(q)) for q in grid])
    if np.any(slopes[1:] <= 0) or not np.all(np.isfinite(slopes)):
        message = "Integrand of a monotone table must be positive and finite."
        raise DomainError(message)
    pieces = [
        integrate(
            integrand,
            a,
            b,
            tolerances.quad_rel,
            tolerances.max_subdivisions,
        )
        for a, b in zip(grid[:-1], grid[1:])
    ]
    values = np.concatenate([[0.0], np.cumsum(pieces)])
    logger.debug(
        "Tabulated a cumulative integral on %d nodes over [%g, %g].",
        grid.size,
        start,
        stop,
    )
    return MonotoneTable(grid, values, slopes)


def integrate_ode(
    rhs: Callable[[float, np.ndarray], np.ndarray],
    span: tuple[float, float],
    initial: np.ndarray,
    tol: float = DEFAULT_TOLERANCES.ode_rtol,
) -> Callable[[ArrayLike], np.ndarray]:
    """
    Integrate an explicit ODE with an adaptive Runge–Kutta method.

    Parameters:
        rhs:  The right-hand side ``f(t, y)``.
        span:  The integration interval.
        initial:  The state at ``span[0]``.
        tol:  The relative local error target.

    Returns:
        The dense-output interpolant of the solution.

    Raises:
        NonFiniteError:  If the stepper fails.
    """
    solution = solve_ivp(
        rhs,
        span,
        np.atleast_1d(np.asarray(initial, dtype=float)),
        method="DOP853",
        rtol=tol,
        atol=tol * 1e-2,
        dense_output=True,
    )
    if not solution.success:
        message = f"ODE integration failed:  {solution.message}"
        raise NonFiniteError(message)
    return solution.sol
