"""
Provides the problem parameterization of the two-class thinning model.

The surplus of an insurer with two classes of business, whose claim
arrivals are coupled through thinning of ``m`` common event groups, is
approximated by a diffusion whose drift and variance depend on the two
excess-of-loss retention levels.  This module holds the parameter
records, the claim-size distributions with their truncated moments, and
the aggregate constants the solver is built from.

Retention levels are plain floats; ``math.inf`` means "no reinsurance"
and is accepted by every truncated-moment function.
"""

# SPDX-License-Identifier: BSD-3-Clause

from __future__ import annotations

import logging
import math
from abc import abstractmethod
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import TYPE_CHECKING, Callable, Optional, Union

import numpy as np
from scipy import stats

from .abstract_method import AbstractMethod
from .errors import ParameterError
from .numerics import DEFAULT_TOLERANCES, Tolerances, integrate

if TYPE_CHECKING:
    from .auxiliary import AuxContext

logger = logging.getLogger(__name__)

Retention = Union[float, np.ndarray]


def claim_distribution(**kwargs) -> ClaimDistribution:
    """
    Generate claim-size distributions.

    A factory method that returns any subclass of
    :class:`ClaimDistribution` that has the
    ``@ClaimDistribution.subclass`` decorator applied to it.

    Parameters:
        **kwargs:  The ``distribution`` name plus any supported
            arguments of the :class:`ClaimDistribution` subclass.

    Returns:
        A single instance of a :class:`ClaimDistribution` subclass.

    Raises:
        ParameterError:  If the name matches no (or more than one)
            registered distribution.
    """
    kwargs = dict(kwargs)
    name = kwargs.pop("distribution", None)
    families = [
        d for d in ClaimDistribution.subclasses if d.distribution_name == name
    ]
    if len(families) == 1:
        return families[0](**kwargs)
    if len(families) == 0:
        message = f"Unsupported claim distribution:  {name}"
        raise ParameterError(message)
    message = f"Multiple claim distributions match '{name}'."
    raise ParameterError(message)


class ClaimDistribution:
    """
    A claim-size distribution with finite second moment.

    Subclasses supply the survival function and the first two moments;
    the truncated moments

    * ``g(q) = E[min(X, q)] = ∫_0^q F̄(x) dx`` and
    * ``g2m(q) = E[min(X, q)**2] = ∫_0^q 2x F̄(x) dx``

    fall back to adaptive quadrature unless a subclass knows them in
    closed form.
    """

    distribution_name = "undefined"  # Should be defined by subclasses.
    subclasses = []  # noqa: RUF012

    @staticmethod
    def subclass(distribution_subclass: type):
        """
        Mark a class as being a supported claim distribution.

        This is a class decorator that adds to a list of supported
        :class:`ClaimDistribution` classes for the
        :func:`claim_distribution` factory method.
        """
        if issubclass(distribution_subclass, ClaimDistribution):
            ClaimDistribution.subclasses.append(distribution_subclass)
        return distribution_subclass

    tolerances: Tolerances = DEFAULT_TOLERANCES

    @property
    @abstractmethod
    def mean(self) -> float:
        """The expected claim size ``μ``."""
        raise AbstractMethod

    @property
    @abstractmethod
    def second_moment(self) -> float:
        """The raw second moment ``μ**2 + σ**2``."""
        raise AbstractMethod

    @property
    def variance(self) -> float:
        """The claim-size variance ``σ**2``."""
        return self.second_moment - self.mean**2

    @abstractmethod
    def survival(self, q: Retention) -> Retention:
        """
        Evaluate the survival function ``F̄(q) = P(X > q)``.

        Parameters:
            q:  One or more non-negative levels, ``inf`` allowed.

        Returns:
            The survival probabilities.
        """
        raise AbstractMethod

    def g(self, q: Retention) -> Retention:
        """
        Evaluate the truncated mean ``E[min(X, q)]``.

        Parameters:
            q:  One or more retention levels, ``inf`` allowed.

        Returns:
            The truncated means; ``0`` at ``q = 0`` and ``μ`` at
            ``q = inf``.
        """
        return _vectorized(q, self._g_scalar)

    def g2m(self, q: Retention) -> Retention:
        """
        Evaluate the truncated second moment ``E[min(X, q)**2]``.

        Parameters:
            q:  One or more retention levels, ``inf`` allowed.

        Returns:
            The truncated second moments; ``0`` at ``q = 0`` and
            ``μ**2 + σ**2`` at ``q = inf``.
        """
        return _vectorized(q, self._g2m_scalar)

    def _g_scalar(self, q: float) -> float:
        if math.isinf(q):
            return self.mean
        return integrate(
            lambda x: float(self.survival(x)), 0.0, q, self.tolerances.quad_rel
        )

    def _g2m_scalar(self, q: float) -> float:
        if math.isinf(q):
            return self.second_moment
        return integrate(
            lambda x: 2.0 * x * float(self.survival(x)),
            0.0,
            q,
            self.tolerances.quad_rel,
        )

    def describe(self) -> dict:
        """Summarize the distribution as a plain record."""
        return {"distribution": self.distribution_name}


def _vectorized(q: Retention, scalar: Callable[[float], float]) -> Retention:
    levels = np.asarray(q, dtype=float)
    if np.any(levels < 0) or np.any(np.isnan(levels)):
        message = "Retention levels must be non-negative."
        raise ParameterError(message)
    if levels.ndim == 0:
        return 0.0 if levels == 0 else scalar(float(levels))
    result = np.zeros_like(levels)
    for index, level in np.ndenumerate(levels):
        if level > 0:
            result[index] = scalar(float(level))
    return result


@ClaimDistribution.subclass
class ExponentialClaims(ClaimDistribution):
    """Exponentially distributed claims, with closed-form moments."""

    distribution_name = "exponential"

    def __init__(self, rate: float) -> None:
        """
        Initialize an :class:`ExponentialClaims` object.

        Parameters:
            rate:  The rate ``β > 0``; the mean claim is ``1/β``.
        """
        if not (math.isfinite(rate) and rate > 0):
            message = f"Exponential rate must be positive, got {rate!r}."
            raise ParameterError(message)
        self.rate = float(rate)

    @property
    def mean(self) -> float:
        """The expected claim size ``1/β``."""
        return 1.0 / self.rate

    @property
    def second_moment(self) -> float:
        """The raw second moment ``2/β**2``."""
        return 2.0 / self.rate**2

    def survival(self, q: Retention) -> Retention:
        """Evaluate ``exp(-β q)``."""
        return _keep_scalar(np.exp(-self.rate * np.asarray(q, float)), q)

    def g(self, q: Retention) -> Retention:
        """Evaluate ``(1 - exp(-β q))/β``."""
        levels = _checked(q)
        return _keep_scalar(-np.expm1(-self.rate * levels) / self.rate, q)

    def g2m(self, q: Retention) -> Retention:
        """Evaluate ``2/β**2 [1 - (1 + β q) exp(-β q)]``."""
        levels = _checked(q)
        scaled = self.rate * levels
        with np.errstate(invalid="ignore"):
            decay = np.where(
                np.isinf(scaled), 0.0, (1.0 + scaled) * np.exp(-scaled)
            )
        return _keep_scalar(2.0 / self.rate**2 * (1.0 - decay), q)

    def describe(self) -> dict:
        """Summarize the distribution as a plain record."""
        return {"distribution": self.distribution_name, "rate": self.rate}


@ClaimDistribution.subclass
class GammaClaims(ClaimDistribution):
    """
    Gamma distributed claims.

    The truncated moments go through the quadrature fallback of
    :class:`ClaimDistribution`.
    """

    distribution_name = "gamma"

    def __init__(self, shape: float, scale: float) -> None:
        """
        Initialize a :class:`GammaClaims` object.

        Parameters:
            shape:  The shape parameter, positive.
            scale:  The scale parameter, positive.
        """
        for name, value in (("shape", shape), ("scale", scale)):
            if not (math.isfinite(value) and value > 0):
                message = f"Gamma {name} must be positive, got {value!r}."
                raise ParameterError(message)
        self.shape = float(shape)
        self.scale = float(scale)
        self._law = stats.gamma(self.shape, scale=self.scale)

    @property
    def mean(self) -> float:
        """The expected claim size."""
        return self.shape * self.scale

    @property
    def second_moment(self) -> float:
        """The raw second moment."""
        return self.shape * (self.shape + 1.0) * self.scale**2

    def survival(self, q: Retention) -> Retention:
        """Evaluate the gamma survival function."""
        return _keep_scalar(self._law.sf(q), q)

    def describe(self) -> dict:
        """Summarize the distribution as a plain record."""
        return {
            "distribution": self.distribution_name,
            "shape": self.shape,
            "scale": self.scale,
        }


class SurvivalClaims(ClaimDistribution):
    """
    Claims described by an arbitrary survival function.

    Only reachable from the Python API.  Moments not supplied are
    obtained by quadrature of the survival function.
    """

    distribution_name = "survival"

    def __init__(
        self,
        survival: Callable[[float], float],
        mean: Optional[float] = None,
        second_moment: Optional[float] = None,
    ) -> None:
        """
        Initialize a :class:`SurvivalClaims` object.

        Parameters:
            survival:  A scalar survival function with ``F̄(0) = 1``,
                non-increasing and vanishing at infinity.
            mean:  The mean, if known.
            second_moment:  The raw second moment, if known.

        Raises:
            ParameterError:  If ``F̄(0) != 1`` or a moment is not
                finite.
        """
        if abs(float(survival(0.0)) - 1.0) > 1e-12:
            message = "A survival function must equal 1 at 0."
            raise ParameterError(message)
        self._survival = survival
        self._mean = (
            integrate(survival, 0.0, math.inf) if mean is None else mean
        )
        self._second_moment = (
            integrate(lambda x: 2.0 * x * survival(x), 0.0, math.inf)
            if second_moment is None
            else second_moment
        )
        if not (
            math.isfinite(self._mean) and math.isfinite(self._second_moment)
        ):
            message = "Claim sizes must have finite second moment."
            raise ParameterError(message)

    @property
    def mean(self) -> float:
        """The expected claim size."""
        return self._mean

    @property
    def second_moment(self) -> float:
        """The raw second moment."""
        return self._second_moment

    def survival(self, q: Retention) -> Retention:
        """Evaluate the supplied survival function."""
        if np.ndim(q) == 0:
            return 0.0 if math.isinf(q) else float(self._survival(float(q)))
        return np.array(
            [0.0 if math.isinf(x) else self._survival(x) for x in np.ravel(q)]
        ).reshape(np.shape(q))


def _checked(q: Retention) -> np.ndarray:
    levels = np.asarray(q, dtype=float)
    if np.any(levels < 0) or np.any(np.isnan(levels)):
        message = "Retention levels must be non-negative."
        raise ParameterError(message)
    return levels


def _keep_scalar(result: np.ndarray, like: Retention) -> Retention:
    if np.ndim(like) == 0:
        return float(result)
    return result


@dataclass(frozen=True)
class ClaimClass:
    """
    One class of insurance business.

    Attributes:
        claims (ClaimDistribution):  The claim-size distribution.
        insurer_loading (float):  The insurer's safety loading ``η``.
        reinsurer_loading (float):  The reinsurer's safety loading
            ``θ``, strictly above ``η`` (non-cheap reinsurance).
        name (str):  A label used in configuration files and output.
    """

    claims: ClaimDistribution
    insurer_loading: float
    reinsurer_loading: float
    name: str = "class"

    def __post_init__(self) -> None:
        """Check the loadings."""
        if not self.insurer_loading > 0:
            message = (
                f"Class `{self.name}`:  insurer loading must be positive, "
                f"got {self.insurer_loading!r}."
            )
            raise ParameterError(message)
        if not self.reinsurer_loading > self.insurer_loading:
            message = (
                f"Class `{self.name}`:  reinsurer loading "
                f"{self.reinsurer_loading!r} must exceed the insurer loading "
                f"{self.insurer_loading!r}."
            )
            raise ParameterError(message)

    @property
    def mean(self) -> float:
        """The expected claim size ``μ``."""
        return self.claims.mean

    @property
    def variance(self) -> float:
        """The claim-size variance ``σ**2``."""
        return self.claims.variance


@dataclass(frozen=True)
class ThinningStructure:
    """
    Event groups and the probabilities with which they hit each class.

    Attributes:
        intensities (tuple[float, ...]):  The group intensities
            ``λ_k > 0``.
        probabilities (tuple[tuple[float, float], ...]):  For each group,
            the probabilities ``(p_k1, p_k2)`` that an event causes a
            claim in class 1 and class 2.
        names (tuple[str, ...]):  Group labels.
    """

    intensities: tuple[float, ...]
    probabilities: tuple[tuple[float, float], ...]
    names: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        """Validate the thinning structure."""
        if len(self.intensities) == 0:
            message = "At least one event group is required."
            raise ParameterError(message)
        if len(self.probabilities) != len(self.intensities):
            message = "Each event group needs a pair of probabilities."
            raise ParameterError(message)
        if not self.names:
            object.__setattr__(
                self,
                "names",
                tuple(f"group{k + 1}" for k in range(len(self.intensities))),
            )
        for name, intensity, pair in zip(
            self.names, self.intensities, self.probabilities
        ):
            if not (math.isfinite(intensity) and intensity > 0):
                message = f"Group `{name}`:  intensity must be positive."
                raise ParameterError(message)
            if len(pair) != 2 or any(not 0 <= p <= 1 for p in pair):
                message = (
                    f"Group `{name}`:  probabilities must be two numbers in "
                    "[0, 1]."
                )
                raise ParameterError(message)
        for column in (0, 1):
            if all(pair[column] == 0 for pair in self.probabilities):
                message = (
                    f"No event group can cause a claim in class {column + 1}."
                )
                raise ParameterError(message)

    def class_intensity(self, column: int) -> float:
        """The claim intensity ``c_l = Σ_k λ_k p_kl`` of one class."""
        return math.fsum(
            lam * pair[column]
            for lam, pair in zip(self.intensities, self.probabilities)
        )

    @property
    def common_intensity(self) -> float:
        """The joint intensity ``c_3 = Σ_k λ_k p_k1 p_k2``."""
        return math.fsum(
            lam * pair[0] * pair[1]
            for lam, pair in zip(self.intensities, self.probabilities)
        )

    def swapped(self) -> ThinningStructure:
        """The same structure with the two classes exchanged."""
        return ThinningStructure(
            self.intensities,
            tuple((p2, p1) for p1, p2 in self.probabilities),
            self.names,
        )


@dataclass(frozen=True)
class EconParams:
    """
    Economic parameters of the dividend problem.

    Attributes:
        discount_rate (float):  The discount rate ``δ > 0``.
        tax_retention (float):  The after-tax fraction ``k ∈ (0, 1)`` of
            each dividend reaching shareholders.
        transaction_cost (float):  The fixed cost ``K > 0`` of each
            payment.
    """

    discount_rate: float
    tax_retention: float
    transaction_cost: float

    def __post_init__(self) -> None:
        """Validate the economic parameters."""
        if not self.discount_rate > 0:
            message = "The discount rate must be positive."
            raise ParameterError(message)
        if not 0 < self.tax_retention < 1:
            message = "The tax retention must lie strictly between 0 and 1."
            raise ParameterError(message)
        if not self.transaction_cost > 0:
            message = "The transaction cost must be positive."
            raise ParameterError(message)


@dataclass(frozen=True)
class ModelParams:
    """
    The full problem parameterization.

    The solver assumes ``θ_1 >= θ_2``; :meth:`normalized` swaps the two
    classes when the input has them the other way round and records the
    swap in :attr:`relabeled`, so that results can be mapped back onto
    the caller's labels.

    Attributes:
        classes (tuple[ClaimClass, ClaimClass]):  The two classes.
        thinning (ThinningStructure):  The event groups.
        econ (EconParams):  The economic parameters.
        relabeled (bool):  Whether the classes were swapped.
    """

    classes: tuple[ClaimClass, ClaimClass]
    thinning: ThinningStructure
    econ: EconParams
    relabeled: bool = field(default=False, compare=False)

    def __post_init__(self) -> None:
        """Require exactly two classes."""
        if len(self.classes) != 2:  # noqa: PLR2004
            message = "Exactly two classes of business are supported."
            raise ParameterError(message)

    @property
    def needs_relabel(self) -> bool:
        """Whether the classes are in the wrong order for the solver."""
        first, second = self.classes
        return first.reinsurer_loading < second.reinsurer_loading

    def normalized(self) -> ModelParams:
        """
        Put the class with the larger reinsurer loading first.

        Returns:
            ``self`` if already ordered, else a swapped copy with
            ``relabeled`` toggled.
        """
        if not self.needs_relabel:
            return self
        logger.debug("Swapping the two classes so that θ_1 >= θ_2.")
        return replace(
            self,
            classes=(self.classes[1], self.classes[0]),
            thinning=self.thinning.swapped(),
            relabeled=not self.relabeled,
        )

    def with_econ(self, econ: EconParams) -> ModelParams:
        """A copy with other economic parameters."""
        return replace(self, econ=econ)


class Case(str, Enum):
    """Which of the two solution structures applies."""

    CASE1 = "CASE1"
    CASE2 = "CASE2"


@dataclass(frozen=True)
class DerivedConstants:
    """
    Aggregate constants of the two-class model, in solver labeling.

    Attributes:
        c1 (float):  Claim intensity of class 1.
        c2 (float):  Claim intensity of class 2.
        c3 (float):  Intensity of simultaneous claims.
        k0 (float):  Drift under full cession, ``Σ c_l (η_l - θ_l) μ_l``.
        K1 (float):  Half the variance without reinsurance.
        K2 (float):  Drift without reinsurance, ``Σ c_l η_l μ_l``.
        r_plus (float):  Positive root of ``K1 r**2 + K2 r - δ``.
        r_minus (float):  Negative root of the same quadratic.
        b1 (float):  Coefficient of ``exp(r_plus s)`` above ``x0``.
        b2 (float):  Coefficient of ``exp(r_minus s)`` above ``x0``.
        z_l (float):  Largest zero of ``l_1``.
        z_k (float):  Zero of ``k``, or ``inf``.
        case (Case):  ``CASE1`` if ``z_l <= z_k``, else ``CASE2``.
        relabeled (bool):  Whether the input classes were swapped.
    """

    c1: float
    c2: float
    c3: float
    k0: float
    K1: float  # noqa: N815
    K2: float  # noqa: N815
    r_plus: float
    r_minus: float
    b1: float
    b2: float
    z_l: float
    z_k: float
    case: Case
    relabeled: bool = False


def loading_offset(params: ModelParams) -> float:
    """The drift ``k0 = Σ c_l (η_l - θ_l) μ_l`` under full cession."""
    return math.fsum(
        params.thinning.class_intensity(column)
        * (cls.insurer_loading - cls.reinsurer_loading)
        * cls.mean
        for column, cls in enumerate(params.classes)
    )


def derive_constants(
    params: ModelParams,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
    context: Optional[AuxContext] = None,
) -> DerivedConstants:
    """
    Derive the aggregate constants and classify the case.

    Parameters:
        params:  The problem parameters, in any class order.
        tolerances:  Tolerances for locating ``z_l`` and ``z_k``.
        context:  An existing auxiliary context for the same
            parameters, reused for its cached roots.

    Returns:
        The constants in solver labeling (``θ_1 >= θ_2``).
    """
    from .auxiliary import AuxContext

    params = params.normalized()
    first, second = params.classes
    c1 = params.thinning.class_intensity(0)
    c2 = params.thinning.class_intensity(1)
    c3 = params.thinning.common_intensity
    k0 = loading_offset(params)
    K1 = 0.5 * (  # noqa: N806
        c1 * first.claims.second_moment + c2 * second.claims.second_moment
    ) + c3 * first.mean * second.mean
    K2 = c1 * first.insurer_loading * first.mean + (  # noqa: N806
        c2 * second.insurer_loading * second.mean
    )
    delta = params.econ.discount_rate
    root = math.sqrt(K2 * K2 + 4.0 * K1 * delta)
    r_plus = (-K2 + root) / (2.0 * K1)
    r_minus = (-K2 - root) / (2.0 * K1)
    b1 = r_minus / (r_plus * (r_minus - r_plus))
    b2 = r_plus / (r_minus * (r_plus - r_minus))
    if context is None:
        context = AuxContext(params, tolerances)
    z_l = context.z_l()
    z_k = context.z_k()
    case = Case.CASE1 if z_l <= z_k else Case.CASE2
    logger.info(
        "Derived constants:  c = (%g, %g, %g), k0 = %g, K1 = %g, K2 = %g, "
        "z_l = %g, z_k = %g, %s.",
        c1,
        c2,
        c3,
        k0,
        K1,
        K2,
        z_l,
        z_k,
        case.value,
    )
    return DerivedConstants(
        c1=c1,
        c2=c2,
        c3=c3,
        k0=k0,
        K1=K1,
        K2=K2,
        r_plus=r_plus,
        r_minus=r_minus,
        b1=b1,
        b2=b2,
        z_l=z_l,
        z_k=z_k,
        case=case,
        relabeled=params.relabeled,
    )


def _internal_order(
    consts: DerivedConstants, params: ModelParams
) -> ModelParams:
    params = params.normalized()
    if params.relabeled != consts.relabeled:
        message = "Constants were derived from differently labeled classes."
        raise ParameterError(message)
    return params


def drift(
    consts: DerivedConstants,
    params: ModelParams,
    q1: Retention,
    q2: Retention,
) -> Retention:
    """
    Evaluate the drift ``d(q) = Σ_l c_l θ_l g_l(q_l) + k0``.

    Parameters:
        consts:  Constants from :func:`derive_constants`.
        params:  The parameters the constants came from.
        q1:  Retention of class 1 in solver labeling, ``inf`` allowed.
        q2:  Retention of class 2 in solver labeling.

    Returns:
        The drift, broadcast over the retention arguments.
    """
    first, second = _internal_order(consts, params).classes
    return (
        consts.c1 * first.reinsurer_loading * first.claims.g(q1)
        + consts.c2 * second.reinsurer_loading * second.claims.g(q2)
        + consts.k0
    )


def variance(
    consts: DerivedConstants,
    params: ModelParams,
    q1: Retention,
    q2: Retention,
) -> Retention:
    """
    Evaluate the variance ``b**2(q) = Σ_l c_l G_l(q_l) + 2 c3 g_1 g_2``.

    Parameters:
        consts:  Constants from :func:`derive_constants`.
        params:  The parameters the constants came from.
        q1:  Retention of class 1 in solver labeling, ``inf`` allowed.
        q2:  Retention of class 2 in solver labeling.

    Returns:
        The variance rate, broadcast over the retention arguments.
    """
    first, second = _internal_order(consts, params).classes
    return (
        consts.c1 * first.claims.g2m(q1)
        + consts.c2 * second.claims.g2m(q2)
        + 2.0 * consts.c3 * first.claims.g(q1) * second.claims.g(q2)
    )
