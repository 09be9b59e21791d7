"""Provides the exception hierarchy for the ``impulse_reinsurance`` package."""

# SPDX-License-Identifier: BSD-3-Clause


class ReinsuranceError(RuntimeError):
    """Base class for every failure raised by this package."""


class ParameterError(ReinsuranceError, ValueError):
    """A model parameter violates its documented invariants."""


class NoBracketError(ReinsuranceError):
    """A root-finding bracket does not enclose a sign change."""


class NonFiniteError(ReinsuranceError):
    """A function returned ``nan`` or an infinite value."""


class MaxSubdivisionsError(ReinsuranceError):
    """Adaptive quadrature failed to reach the requested tolerance."""


class NegativeArgumentError(ReinsuranceError, ValueError):
    """An inverse function was asked for a value outside its range."""


class DomainError(ReinsuranceError, ValueError):
    """A function was evaluated outside its domain of definition."""


class WrongCaseError(ReinsuranceError):
    """An operation only defined for the other solution case was called."""


class TailNotQuadraticError(ReinsuranceError):
    """The integrand of the retention map does not decay like ``y**-2``."""


class DegenerateBandError(ReinsuranceError):
    """The dividend band cannot be determined from the marginal value."""


class NegativeSurplusError(ReinsuranceError, ValueError):
    """A surplus-indexed quantity was requested at a negative surplus."""


class InvalidConfigError(ReinsuranceError, ValueError):
    """A simulation configuration is not usable."""


class NonAdmissibleError(ReinsuranceError):
    """A strategy violates the admissibility conditions."""


class ConfigError(ReinsuranceError, ValueError):
    """
    A run configuration failed validation.

    Attributes:
        path (str):  The dotted path of the offending field.
    """

    def __init__(self, path: str, reason: str) -> None:
        """
        Initialize the :class:`ConfigError`.

        Parameters:
            path:  The dotted path of the offending field, e.g.
                ``economics.tax_retention``.
            reason:  What is wrong with it.
        """
        self.path = path
        super().__init__(f"{path}: {reason}")
