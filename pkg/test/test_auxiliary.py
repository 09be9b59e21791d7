"""Tests for the ``impulse_reinsurance.auxiliary`` module."""

# SPDX-License-Identifier: BSD-3-Clause

import math

import pytest

from impulse_reinsurance import ModelParams
from impulse_reinsurance.auxiliary import AuxContext
from impulse_reinsurance.errors import (
    DomainError,
    NegativeArgumentError,
    WrongCaseError,
)


@pytest.fixture(scope="module")
def base_context(base_params: ModelParams) -> AuxContext:
    """
    The auxiliary functions of the base parameter set.

    Parameters:
        base_params:  The base parameter set.

    Returns:
        The :class:`AuxContext`.
    """
    return AuxContext(base_params)


@pytest.fixture(scope="module")
def case2_context(case2_params: ModelParams) -> AuxContext:
    """
    The auxiliary functions of the ``CASE2`` parameter set.

    Parameters:
        case2_params:  The ``CASE2`` parameter set.

    Returns:
        The :class:`AuxContext`.
    """
    return AuxContext(case2_params)


def central_difference(function, x: float, step: float = 1e-4) -> float:
    """
    Approximate a derivative numerically.

    Parameters:
        function:  A scalar function.
        x:  Where to differentiate.
        step:  The half-width of the stencil.

    Returns:
        The central difference quotient.
    """
    return (function(x + step) - function(x - step)) / (2.0 * step)


def test_base_roots(base_context: AuxContext) -> None:
    """
    Ensure ``l_1`` has no positive zero and ``k`` has one.

    Parameters:
        base_context:  The base auxiliary functions.
    """
    assert base_context.z_l() == 0.0
    z_k = base_context.z_k()
    assert 0 < z_k < math.inf
    assert base_context.k_fn(z_k) == pytest.approx(0.0, abs=1e-9)
    assert base_context.is_case1


def test_case2_roots(case2_context: AuxContext) -> None:
    """
    Ensure the roots of the ``CASE2`` parameter set are ordered.

    Parameters:
        case2_context:  The ``CASE2`` auxiliary functions.
    """
    z_l = case2_context.z_l()
    assert case2_context.l1(z_l) == pytest.approx(0.0, abs=1e-9)
    assert case2_context.l1(0.5 * z_l) < 0
    assert case2_context.z_k() < z_l
    assert not case2_context.is_case1


def test_k_limits(base_context: AuxContext) -> None:
    """
    Ensure ``k`` runs from ``k_0`` to ``c_1 θ_1 μ_1 + k_0``.

    Parameters:
        base_context:  The base auxiliary functions.
    """
    assert base_context.k_fn(0.0) == pytest.approx(-1.6)
    assert base_context.k_fn(math.inf) == pytest.approx(5.0 * 1.2 - 1.6)


@pytest.mark.parametrize("x", [0.3, 1.0, 4.0])
def test_k_prime(base_context: AuxContext, x: float) -> None:
    """
    Ensure the closed-form ``k'`` matches a finite difference.

    Parameters:
        base_context:  The base auxiliary functions.
        x:  Where to compare.
    """
    assert base_context.k_prime(x) > 0
    assert base_context.k_prime(x) == pytest.approx(
        central_difference(base_context.k_fn, x), rel=1e-6
    )


@pytest.mark.parametrize("q", [0.2, 1.0, 3.5])
def test_partner_matches_l1(base_context: AuxContext, q: float) -> None:
    """
    Ensure the partner retention solves ``l_2(p) = l_1(q)``.

    Parameters:
        base_context:  The base auxiliary functions.
        q:  A class-1 retention.
    """
    p = base_context.partner(q)
    assert p > 0
    assert base_context.l2(p) == pytest.approx(base_context.l1(q), rel=1e-9)
    assert base_context.partner_prime(q) == pytest.approx(
        central_difference(base_context.partner, q), rel=1e-4
    )


def test_l2_inverse_limits(base_context: AuxContext) -> None:
    """
    Ensure the inverse of ``l_2`` at its ends and below zero.

    Parameters:
        base_context:  The base auxiliary functions.
    """
    assert base_context.l2_inverse(0.0) == 0.0
    assert base_context.l2_inverse(math.inf) == math.inf
    with pytest.raises(NegativeArgumentError):
        base_context.l2_inverse(-0.5)


def test_H_limits(base_context: AuxContext) -> None:  # noqa: N802
    """
    Ensure ``H`` joins ``k`` at ``z_l`` and tends to ``K_2``.

    Parameters:
        base_context:  The base auxiliary functions.
    """
    z_l = base_context.z_l()
    assert base_context.H(z_l) == pytest.approx(base_context.k_fn(z_l))
    assert base_context.H(math.inf) == pytest.approx(7.4)
    assert base_context.H(1e6) == pytest.approx(7.4, rel=1e-4)


@pytest.mark.parametrize("q", [0.5, 2.0, 10.0])
def test_H_prime(base_context: AuxContext, q: float) -> None:  # noqa: N802
    """
    Ensure the closed-form ``H'`` matches a finite difference.

    Parameters:
        base_context:  The base auxiliary functions.
        q:  Where to compare.
    """
    assert base_context.H_prime(q) > 0
    assert base_context.H_prime(q) == pytest.approx(
        central_difference(base_context.H, q), rel=1e-4
    )


def test_q0(base_context: AuxContext) -> None:
    """
    Ensure ``q_0`` is the zero of ``H``.

    Parameters:
        base_context:  The base auxiliary functions.
    """
    q0 = base_context.q0()
    assert q0 > base_context.z_l()
    assert base_context.H(q0) == pytest.approx(0.0, abs=1e-8)


def test_H_below_z_l(case2_context: AuxContext) -> None:  # noqa: N802
    """
    Ensure ``H`` refuses retentions below ``z_l``.

    Parameters:
        case2_context:  The ``CASE2`` auxiliary functions.
    """
    with pytest.raises(DomainError, match="below z_l"):
        case2_context.H(0.5 * case2_context.z_l())


def test_q0_wrong_case(case2_context: AuxContext) -> None:
    """
    Ensure ``H`` has no zero when ``z_l > z_k``.

    Parameters:
        case2_context:  The ``CASE2`` auxiliary functions.
    """
    with pytest.raises(WrongCaseError):
        case2_context.q0()


def test_risk_rate(base_context: AuxContext) -> None:
    """
    Ensure the decay rate vanishes without reinsurance.

    Parameters:
        base_context:  The base auxiliary functions.
    """
    assert base_context.risk_rate(math.inf) == 0.0
    assert base_context.risk_rate(1.0) > base_context.risk_rate(2.0) > 0
