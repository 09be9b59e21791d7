"""Shared fixtures for the ``impulse_reinsurance`` test suite."""

# SPDX-License-Identifier: BSD-3-Clause

import copy
from pathlib import Path
from typing import Callable

import pytest
from _pytest.monkeypatch import MonkeyPatch

from impulse_reinsurance import (
    ClaimClass,
    EconParams,
    ModelParams,
    Solution,
    ThinningStructure,
    claim_distribution,
    solve,
)
from impulse_reinsurance.config import OUTPUT_DIR_VARIABLE

BASE_DOCUMENT = {
    "model": {
        "groups": [
            {"name": "first", "intensity": 3.0, "probabilities": [1, 0]},
            {"name": "second", "intensity": 4.0, "probabilities": [0, 1]},
            {"name": "common", "intensity": 2.0, "probabilities": [1, 1]},
        ],
        "classes": [
            {
                "name": "first",
                "claims": {"distribution": "exponential", "rate": 1.0},
                "insurer_loading": 1.0,
                "reinsurer_loading": 1.2,
            },
            {
                "name": "second",
                "claims": {"distribution": "exponential", "rate": 2.0},
                "insurer_loading": 0.8,
                "reinsurer_loading": 1.0,
            },
        ],
    },
    "economics": {
        "discount_rate": 0.5,
        "tax_retention": 0.7,
        "transaction_cost": 0.2,
    },
}


def build_params(  # noqa: PLR0913
    *,
    rates: tuple[float, float] = (1.0, 2.0),
    insurer_loadings: tuple[float, float] = (1.0, 0.8),
    reinsurer_loadings: tuple[float, float] = (1.2, 1.0),
    intensities: tuple[float, float, float] = (3.0, 4.0, 2.0),
    discount_rate: float = 0.5,
    tax_retention: float = 0.7,
    transaction_cost: float = 0.2,
) -> ModelParams:
    """
    Build two exponential classes driven by three event groups.

    The groups hit class 1 only, class 2 only, and both classes.

    Returns:
        The :class:`ModelParams`.
    """
    classes = tuple(
        ClaimClass(
            claim_distribution(distribution="exponential", rate=rate),
            eta,
            theta,
            name,
        )
        for rate, eta, theta, name in zip(
            rates, insurer_loadings, reinsurer_loadings, ("first", "second")
        )
    )
    thinning = ThinningStructure(
        intensities,
        ((1.0, 0.0), (0.0, 1.0), (1.0, 1.0)),
        ("first", "second", "common"),
    )
    econ = EconParams(discount_rate, tax_retention, transaction_cost)
    return ModelParams(classes, thinning, econ)


@pytest.fixture(autouse=True)
def _use_tmpdir(monkeypatch: MonkeyPatch, tmp_path: Path) -> None:
    """
    Use a temporary directory for all tests.

    Parameters:
        monkeypatch:  The ``MonkeyPatch`` fixture.
        tmp_path:  The temporary directory to use.
    """
    monkeypatch.chdir(tmp_path)
    monkeypatch.delenv(OUTPUT_DIR_VARIABLE, raising=False)


@pytest.fixture
def make_params() -> Callable[..., ModelParams]:
    """
    Give tests the parameter builder.

    Returns:
        A function accepting keyword overrides of the base parameters.
    """
    return build_params


@pytest.fixture(scope="session")
def base_params() -> ModelParams:
    """
    The base parameter set with a common-shock intensity of 2.

    Returns:
        Parameters with ``c = (5, 6, 2)``, ``k0 = -1.6``,
        ``K1 = 7.5`` and ``K2 = 7.4``.
    """
    return build_params()


@pytest.fixture(scope="session")
def case2_params() -> ModelParams:
    """
    A parameter set where class 2 is fully ceded at low surplus.

    Returns:
        Parameters with ``z_l > z_k``.
    """
    return build_params(
        insurer_loadings=(2.5, 0.8),
        reinsurer_loadings=(3.0, 1.0),
        intensities=(0.5, 0.5, 4.0),
    )


@pytest.fixture(scope="session")
def base_solution(base_params: ModelParams) -> Solution:
    """
    Solve the base parameter set once per session.

    Returns:
        The :class:`Solution`.
    """
    return solve(base_params)


@pytest.fixture(scope="session")
def case2_solution(case2_params: ModelParams) -> Solution:
    """
    Solve the ``CASE2`` parameter set once per session.

    Returns:
        The :class:`Solution`.
    """
    return solve(case2_params)


@pytest.fixture(scope="session")
def liquidating_solution(base_solution: Solution) -> Solution:
    """
    Solve the base parameters with a cost too large for a band.

    The cost is half again the largest net gain of a partial payment,
    so the first payment must take the whole surplus.

    Returns:
        The :class:`Solution`.
    """
    params = base_solution.params
    econ = params.econ
    largest = base_solution.value.marginal.gain_between(
        base_solution.value.band.threshold, econ.tax_retention
    )
    costly = EconParams(
        econ.discount_rate, econ.tax_retention, 1.5 * largest
    )
    return solve(params.with_econ(costly))


@pytest.fixture
def base_document() -> dict:
    """
    A fresh copy of the base configuration document.

    Returns:
        The JSON document as a ``dict``.
    """
    return copy.deepcopy(BASE_DOCUMENT)
