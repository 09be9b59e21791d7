"""Tests for the ``impulse_reinsurance.model`` module."""

# SPDX-License-Identifier: BSD-3-Clause

import math
from typing import Callable

import numpy as np
import pytest

from impulse_reinsurance import (
    ClaimClass,
    EconParams,
    ModelParams,
    ThinningStructure,
    claim_distribution,
    derive_constants,
)
from impulse_reinsurance.errors import ParameterError
from impulse_reinsurance.model import (
    Case,
    ClaimDistribution,
    ExponentialClaims,
    GammaClaims,
    SurvivalClaims,
    drift,
    loading_offset,
    variance,
)


def test_claim_distribution_factory() -> None:
    """Ensure the factory builds registered distributions by name."""
    claims = claim_distribution(distribution="exponential", rate=2.0)
    assert isinstance(claims, ExponentialClaims)
    assert claims.describe() == {"distribution": "exponential", "rate": 2.0}
    gamma = claim_distribution(distribution="gamma", shape=2.0, scale=0.5)
    assert isinstance(gamma, GammaClaims)


def test_claim_distribution_unknown() -> None:
    """Ensure an unknown name is refused."""
    with pytest.raises(ParameterError, match="Unsupported claim"):
        claim_distribution(distribution="pareto", alpha=3.0)


def test_missing_hook_is_named() -> None:
    """Ensure a distribution without its moments names the gap."""

    class Incomplete(ClaimDistribution):
        def survival(self, q: float) -> float:
            return 0.0

    with pytest.raises(
        NotImplementedError, match=r"`Incomplete` must implement `mean\(\)`"
    ):
        _ = Incomplete().mean


def test_exponential_truncated_moments() -> None:
    """Ensure the closed forms match their definitions."""
    claims = ExponentialClaims(2.0)
    assert claims.mean == 0.5
    assert claims.second_moment == 0.5
    assert claims.g(0.0) == 0.0
    assert claims.g(math.inf) == 0.5
    assert claims.g(1.0) == pytest.approx(0.5 * (1.0 - math.exp(-2.0)))
    assert claims.g2m(math.inf) == pytest.approx(0.5)
    assert claims.g2m(1.0) == pytest.approx(
        0.5 * (1.0 - 3.0 * math.exp(-2.0))
    )


def test_gamma_quadrature_matches_exponential() -> None:
    """Ensure the quadrature fallback agrees with the exponential forms."""
    gamma = GammaClaims(1.0, 0.5)
    exponential = ExponentialClaims(2.0)
    levels = np.array([0.0, 0.3, 1.0, 4.0])
    assert gamma.g(levels) == pytest.approx(exponential.g(levels), rel=1e-8)
    assert gamma.g2m(levels) == pytest.approx(
        exponential.g2m(levels), rel=1e-8
    )


def test_survival_claims_moments() -> None:
    """Ensure moments are integrated from a supplied survival function."""
    claims = SurvivalClaims(lambda x: math.exp(-x))
    assert claims.mean == pytest.approx(1.0, rel=1e-8)
    assert claims.second_moment == pytest.approx(2.0, rel=1e-8)
    assert claims.variance == pytest.approx(1.0, rel=1e-7)


def test_survival_claims_must_start_at_one() -> None:
    """Ensure a survival function below one at zero is refused."""
    with pytest.raises(ParameterError, match="equal 1 at 0"):
        SurvivalClaims(lambda x: 0.5 * math.exp(-x))


def test_negative_retention_refused() -> None:
    """Ensure truncated moments reject negative retentions."""
    with pytest.raises(ParameterError, match="non-negative"):
        ExponentialClaims(1.0).g(-0.1)


def test_cheap_reinsurance_refused() -> None:
    """Ensure a reinsurer loading at or below the insurer's is refused."""
    with pytest.raises(ParameterError, match="must exceed"):
        ClaimClass(ExponentialClaims(1.0), 1.0, 1.0, "cheap")


@pytest.mark.parametrize(
    ("kwargs", "match"),
    [
        ({"discount_rate": 0.0}, "discount rate"),
        ({"tax_retention": 1.0}, "tax retention"),
        ({"transaction_cost": -0.1}, "transaction cost"),
    ],
)
def test_econ_params_validation(kwargs: dict, match: str) -> None:
    """
    Ensure each economic parameter is range-checked.

    Parameters:
        kwargs:  The offending value.
        match:  Part of the expected message.
    """
    values = {
        "discount_rate": 0.5,
        "tax_retention": 0.7,
        "transaction_cost": 0.2,
    }
    values.update(kwargs)
    with pytest.raises(ParameterError, match=match):
        EconParams(**values)


def test_thinning_needs_each_class() -> None:
    """Ensure every class must be reachable by some group."""
    with pytest.raises(ParameterError, match="class 2"):
        ThinningStructure((1.0,), ((1.0, 0.0),))


def test_thinning_intensities() -> None:
    """Ensure the class and common intensities are aggregated."""
    thinning = ThinningStructure(
        (3.0, 4.0, 2.0), ((1.0, 0.0), (0.0, 1.0), (1.0, 1.0))
    )
    assert thinning.names == ("group1", "group2", "group3")
    assert thinning.class_intensity(0) == 5.0
    assert thinning.class_intensity(1) == 6.0
    assert thinning.common_intensity == 2.0


def test_derive_constants(base_params: ModelParams) -> None:
    """
    Ensure the aggregate constants of the base parameter set.

    Parameters:
        base_params:  The base parameter set.
    """
    consts = derive_constants(base_params)
    assert (consts.c1, consts.c2, consts.c3) == (5.0, 6.0, 2.0)
    assert consts.k0 == pytest.approx(-1.6)
    assert consts.K1 == pytest.approx(7.5)
    assert consts.K2 == pytest.approx(7.4)
    for root in (consts.r_plus, consts.r_minus):
        assert consts.K1 * root**2 + consts.K2 * root - 0.5 == pytest.approx(
            0.0, abs=1e-12
        )
    assert consts.r_plus > 0 > consts.r_minus
    assert consts.case is Case.CASE1
    assert consts.relabeled is False


def test_derive_constants_case2(case2_params: ModelParams) -> None:
    """
    Ensure the second parameter set falls in ``CASE2``.

    Parameters:
        case2_params:  The ``CASE2`` parameter set.
    """
    consts = derive_constants(case2_params)
    assert consts.case is Case.CASE2
    assert consts.z_l == pytest.approx(2.43, abs=0.01)
    assert consts.z_k == pytest.approx(0.46, abs=0.01)


def test_relabeling(base_params: ModelParams) -> None:
    """
    Ensure swapped classes give the same constants and a relabel flag.

    Parameters:
        base_params:  The base parameter set.
    """
    swapped = ModelParams(
        base_params.classes[::-1],
        base_params.thinning.swapped(),
        base_params.econ,
    )
    assert swapped.needs_relabel
    normalized = swapped.normalized()
    assert normalized.relabeled
    assert normalized.classes == base_params.classes
    consts = derive_constants(swapped)
    reference = derive_constants(base_params)
    assert consts.relabeled
    assert consts.K1 == pytest.approx(reference.K1)
    assert consts.z_l == pytest.approx(reference.z_l)


@pytest.mark.parametrize(
    ("rates", "loadings", "expected"),
    [
        ((1.0, 2.0), (1.0, 1.2), True),
        ((1.0, 2.0), (1.0, 1.0), False),
        ((2.0, 0.5), (1.2, 1.0), False),
    ],
)
def test_relabeling_follows_reinsurer_loading(
    make_params: Callable[..., ModelParams],
    rates: tuple[float, float],
    loadings: tuple[float, float],
    expected: bool,
) -> None:
    """
    Ensure only the reinsurer loadings decide the class order.

    Parameters:
        make_params:  The parameter builder.
        rates:  The claim-size rates of the two classes.
        loadings:  The reinsurer loadings of the two classes.
        expected:  Whether the classes are swapped.
    """
    params = make_params(rates=rates, reinsurer_loadings=loadings)
    assert params.needs_relabel is expected
    assert params.normalized().relabeled is expected


def test_drift_and_variance_limits(base_params: ModelParams) -> None:
    """
    Ensure the drift and variance at zero and infinite retention.

    Parameters:
        base_params:  The base parameter set.
    """
    consts = derive_constants(base_params)
    assert drift(consts, base_params, 0.0, 0.0) == pytest.approx(consts.k0)
    assert drift(consts, base_params, math.inf, math.inf) == pytest.approx(
        consts.K2
    )
    assert variance(consts, base_params, 0.0, 0.0) == 0.0
    assert variance(
        consts, base_params, math.inf, math.inf
    ) == pytest.approx(2.0 * consts.K1)
    assert loading_offset(base_params) == pytest.approx(-1.6)


def test_with_econ(base_params: ModelParams) -> None:
    """
    Ensure the economic parameters can be exchanged.

    Parameters:
        base_params:  The base parameter set.
    """
    econ = EconParams(0.3, 0.9, 0.1)
    assert base_params.with_econ(econ).econ == econ
    assert base_params.with_econ(econ).classes == base_params.classes
