"""
Provides the scalar auxiliary functions of the optimal retention problem.

Along the optimal retention curve the two retention levels are tied
together by ``l_1(q_1) = l_2(q_2)``, and the value function satisfies
``δ W = S(q_1) W'`` where ``S`` is either ``k`` (only class 1 reinsured
at the margin) or ``H`` (both classes reinsured).  The roots ``z_l`` and
``z_k`` decide which structure applies near zero surplus, and ``q_0``
anchors the retention curve when both classes are reinsured.
"""

# SPDX-License-Identifier: BSD-3-Clause

from __future__ import annotations

import functools
import logging
import math

from .errors import (
    DomainError,
    NegativeArgumentError,
    NoBracketError,
    WrongCaseError,
)
from .model import ModelParams, loading_offset
from .numerics import DEFAULT_TOLERANCES, Tolerances, find_root

logger = logging.getLogger(__name__)

MAX_BRACKET_STEPS = 200
L2_INVERSE_CACHE_SIZE = 65536


class AuxContext:
    """
    The auxiliary functions of one parameter set.

    The context is immutable after construction; the ``l_2`` inverse is
    memoized, so one context is shared by all integrands of a solve.

    Attributes:
        params (ModelParams):  The parameters, in solver labeling.
        tolerances (Tolerances):  Root and quadrature tolerances.
        c1 (float):  Claim intensity of class 1.
        c2 (float):  Claim intensity of class 2.
        c3 (float):  Intensity of simultaneous claims.
        k0 (float):  Drift under full cession.
    """

    def __init__(
        self,
        params: ModelParams,
        tolerances: Tolerances = DEFAULT_TOLERANCES,
    ) -> None:
        """
        Initialize an :class:`AuxContext`.

        Parameters:
            params:  The problem parameters, in any class order.
            tolerances:  The numerical tolerances.
        """
        self.params = params.normalized()
        self.tolerances = tolerances
        self.first, self.second = self.params.classes
        thinning = self.params.thinning
        self.c1 = thinning.class_intensity(0)
        self.c2 = thinning.class_intensity(1)
        self.c3 = thinning.common_intensity
        self.k0 = loading_offset(self.params)
        self.theta1 = self.first.reinsurer_loading
        self.theta2 = self.second.reinsurer_loading
        self.delta = self.params.econ.discount_rate
        self._l2_inverse = functools.lru_cache(maxsize=L2_INVERSE_CACHE_SIZE)(
            self._solve_l2_inverse
        )
        self._z_l = functools.lru_cache(maxsize=1)(self._locate_z_l)
        self._z_k = functools.lru_cache(maxsize=1)(self._locate_z_k)

    @property
    def no_reinsurance_drift(self) -> float:
        """``H(inf) = Σ c_l η_l μ_l``."""
        return self.c1 * self.first.insurer_loading * self.first.mean + (
            self.c2 * self.second.insurer_loading * self.second.mean
        )

    # l_1 and l_2 ------------------------------------------------------------

    def l1(self, q: float) -> float:
        """``l_1(q) = θ_2 q - (c_3/c_2) θ_1 g_1(q)``, convex."""
        return self.theta2 * q - (
            self.c3 / self.c2
        ) * self.theta1 * self.first.claims.g(q)

    def l1_prime(self, q: float) -> float:
        """The derivative of :meth:`l1`."""
        return self.theta2 - (
            self.c3 / self.c2
        ) * self.theta1 * self.first.claims.survival(q)

    def l2(self, q: float) -> float:
        """``l_2(q) = θ_1 q - (c_3/c_1) θ_2 g_2(q)``, strictly increasing."""
        return self.theta1 * q - (
            self.c3 / self.c1
        ) * self.theta2 * self.second.claims.g(q)

    def l2_prime(self, q: float) -> float:
        """The derivative of :meth:`l2`."""
        return self.theta1 - (
            self.c3 / self.c1
        ) * self.theta2 * self.second.claims.survival(q)

    def l2_inverse(self, v: float) -> float:
        """
        Invert :meth:`l2`.

        Parameters:
            v:  A non-negative value, ``inf`` allowed.

        Returns:
            The retention ``q`` with ``l_2(q) = v``.

        Raises:
            NegativeArgumentError:  If ``v < 0``.
        """
        v = float(v)
        if v < 0:
            if v > -self.tolerances.root_abs:
                return 0.0
            message = f"`l2_inverse` is undefined for negative {v!r}."
            raise NegativeArgumentError(message)
        return self._l2_inverse(v)

    def _solve_l2_inverse(self, v: float) -> float:
        if v == 0 or math.isinf(v):
            return v
        # l_2 lies between θ_1 q - (c_3/c_1) θ_2 μ_2 and θ_1 q.
        lower = v / self.theta1
        upper = (
            v + (self.c3 / self.c1) * self.theta2 * self.second.mean
        ) / self.theta1
        return find_root(
            lambda q: self.l2(q) - v,
            (lower, upper),
            self._relative_tol(upper),
        )

    def _relative_tol(self, scale: float) -> float:
        return self.tolerances.root_abs * max(1.0, abs(scale))

    def partner(self, q: float) -> float:
        """
        The class-2 retention paired with ``q`` on the optimal curve.

        Parameters:
            q:  A class-1 retention at least ``z_l``.

        Returns:
            ``l_2^{-1}(l_1(q))``.
        """
        if math.isinf(q):
            return math.inf
        return self.l2_inverse(self.l1(q))

    def partner_prime(self, q: float) -> float:
        """The derivative of :meth:`partner`."""
        return self.l1_prime(q) / self.l2_prime(self.partner(q))

    # k ----------------------------------------------------------------------

    def k_fn(self, x: float) -> float:
        """
        Evaluate ``k(x) = c_1 θ_1 [g_1(x) - G_1(x)/(2x)] + k_0``.

        Parameters:
            x:  A positive retention; ``0`` and ``inf`` give the limits.

        Returns:
            The drift-minus-risk rate when only class 1 is reinsured.
        """
        if x == 0:
            return self.k0
        claims = self.first.claims
        if math.isinf(x):
            return self.c1 * self.theta1 * claims.mean + self.k0
        return (
            self.c1 * self.theta1 * (claims.g(x) - claims.g2m(x) / (2.0 * x))
            + self.k0
        )

    def k_prime(self, x: float) -> float:
        """``k'(x) = c_1 θ_1 G_1(x)/(2 x**2)``, positive."""
        if math.isinf(x):
            return 0.0
        if x == 0:
            return 0.5 * self.c1 * self.theta1
        return self.c1 * self.theta1 * self.first.claims.g2m(x) / (2.0 * x * x)

    # roots ------------------------------------------------------------------

    def z_l(self) -> float:
        """
        Locate the largest zero of :meth:`l1`.

        Returns:
            ``0`` when ``l_1'(0) >= 0``, otherwise the unique positive
            root, which lies in ``(0, c_3 θ_1 μ_1/(c_2 θ_2)]``.
        """
        return self._z_l()

    def _locate_z_l(self) -> float:
        if self.l1_prime(0.0) >= 0:
            return 0.0
        upper = self.c3 * self.theta1 * self.first.mean / (
            self.c2 * self.theta2
        )
        lower = 0.5 * upper
        for _ in range(MAX_BRACKET_STEPS):
            if self.l1(lower) < 0:
                break
            lower *= 0.5
        else:
            message = "Could not find a point where l_1 is negative."
            raise NoBracketError(message)
        root = find_root(self.l1, (lower, upper), self._relative_tol(upper))
        logger.debug("Located z_l = %.12g.", root)
        return root

    def z_k(self) -> float:
        """
        Locate the zero of :meth:`k_fn`.

        Returns:
            The root when ``k(inf) > 0``, otherwise ``inf``.
        """
        return self._z_k()

    def _locate_z_k(self) -> float:
        if self.k_fn(math.inf) <= 0:
            logger.debug("k stays negative; z_k = inf.")
            return math.inf
        upper = 1.0
        for _ in range(MAX_BRACKET_STEPS):
            if self.k_fn(upper) > 0:
                break
            upper *= 2.0
        else:
            message = "Could not find a point where k is positive."
            raise NoBracketError(message)
        root = find_root(self.k_fn, (0.0, upper), self._relative_tol(upper))
        logger.debug("Located z_k = %.12g.", root)
        return root

    @property
    def is_case1(self) -> bool:
        """Whether ``z_l <= z_k``."""
        return self.z_l() <= self.z_k()

    # H ----------------------------------------------------------------------

    def _pieces(self, q: float) -> tuple[float, float, float]:
        """The partner retention with the variance and scale terms."""
        p = self.partner(q)
        first, second = self.first.claims, self.second.claims
        g1, g2 = first.g(q), second.g(p)
        spread = (
            self.c1 * first.g2m(q)
            + self.c2 * second.g2m(p)
            + 2.0 * self.c3 * g1 * g2
        )
        scale = self.c1 * q + self.c3 * g2
        return p, spread, scale

    def _check_domain(self, q: float) -> None:
        if q < self.z_l() - self._relative_tol(self.z_l()):
            message = f"H is undefined below z_l = {self.z_l()!r}, got {q!r}."
            raise DomainError(message)

    def H(self, q: float) -> float:  # noqa: N802
        """
        Evaluate the drift-minus-risk rate on the two-class curve.

        ``H(q) = d(q, p) - (c_1 θ_1/2) b**2(q, p)/(c_1 q + c_3 g_2(p))``
        with ``p`` the :meth:`partner` of ``q``.

        Parameters:
            q:  A class-1 retention, at least ``z_l``; ``inf`` allowed.

        Returns:
            ``H(q)``; ``H(z_l) = k(z_l)`` and ``H(inf) = Σ c_l η_l μ_l``.

        Raises:
            DomainError:  If ``q < z_l``.
        """
        self._check_domain(q)
        if math.isinf(q):
            return self.no_reinsurance_drift
        if q <= 0:
            return self.k0
        p, spread, scale = self._pieces(q)
        return (
            self.k0
            + self.c1 * self.theta1 * self.first.claims.g(q)
            + self.c2 * self.theta2 * self.second.claims.g(p)
            - 0.5 * self.c1 * self.theta1 * spread / scale
        )

    def H_prime(self, q: float) -> float:  # noqa: N802
        """
        Evaluate ``H'(q)`` from its closed form.

        ``H'(q) = (c_1 θ_1/2) b**2 (c_1 + c_3 F̄_2(p) p')/D**2`` with
        ``D = c_1 q + c_3 g_2(p)``; the remaining terms cancel because
        ``l_1(q) = l_2(p)``.

        Raises:
            DomainError:  If ``q < z_l``.
        """
        self._check_domain(q)
        if math.isinf(q):
            return 0.0
        p, spread, scale = self._pieces(q)
        growth = self.c1 + self.c3 * self.second.claims.survival(
            p
        ) * self.partner_prime(q)
        return 0.5 * self.c1 * self.theta1 * spread * growth / (scale * scale)

    def risk_rate(self, q: float) -> float:
        """``c_1 θ_1/(c_1 q + c_3 g_2(p))``, the decay rate of ``W'``."""
        if math.isinf(q):
            return 0.0
        p = self.partner(q)
        return (
            self.c1
            * self.theta1
            / (self.c1 * q + self.c3 * self.second.claims.g(p))
        )

    def q0(self) -> float:
        """
        Locate the zero of :meth:`H` on ``[z_l, inf)``.

        Returns:
            The retention of class 1 at zero surplus.

        Raises:
            WrongCaseError:  If ``z_l > z_k``, where no zero exists.
        """
        z_l, z_k = self.z_l(), self.z_k()
        if z_l > z_k:
            message = (
                f"H has no zero when z_l = {z_l!r} exceeds z_k = {z_k!r}."
            )
            raise WrongCaseError(message)
        if z_l == z_k:
            return z_l
        upper = max(2.0 * z_l, 1.0)
        for _ in range(MAX_BRACKET_STEPS):
            if self.H(upper) > 0:
                break
            upper *= 2.0
        else:
            message = "Could not find a point where H is positive."
            raise NoBracketError(message)
        root = find_root(self.H, (z_l, upper), self._relative_tol(upper))
        logger.info("Located q0 = %.12g.", root)
        return root
