"""Tests for the ``impulse_reinsurance.simulator`` module."""

# SPDX-License-Identifier: BSD-3-Clause

import math

import numpy as np
import pytest

from impulse_reinsurance import (
    DividendBand,
    ModelParams,
    SimConfig,
    Solution,
    Strategy,
    compare_strategies,
    retention_rule,
    simulate,
)
from impulse_reinsurance.errors import (
    InvalidConfigError,
    NonAdmissibleError,
    ParameterError,
)
from impulse_reinsurance.simulator import (
    FixedRetention,
    NoReinsurance,
    ProportionalRetention,
    RetentionRule,
    SimEstimate,
    baseline_strategy,
    optimal_strategy,
    path_coefficients,
    run_paths,
    truncation_bound,
)


@pytest.fixture
def deterministic_config() -> SimConfig:
    """
    Paths without noise, on a coarse grid.

    Returns:
        The :class:`SimConfig`.
    """
    return SimConfig(
        paths=4,
        time_step=0.01,
        horizon=2.0,
        block_size=2,
        volatility_scale=0.0,
    )


def test_retention_rule_factory() -> None:
    """Ensure rules are built by name."""
    assert isinstance(retention_rule(rule="no-reinsurance"), NoReinsurance)
    rule = retention_rule(rule="proportional", fraction=0.25)
    assert isinstance(rule, ProportionalRetention)
    assert rule.describe() == {"rule": "proportional", "fraction": 0.25}
    fixed = retention_rule(rule="fixed", levels=[1.0, math.inf])
    assert isinstance(fixed, FixedRetention)
    with pytest.raises(ParameterError, match="Unsupported retention"):
        retention_rule(rule="quota-share")


def test_rule_levels_relabeled() -> None:
    """Ensure caller-labeled rules are swapped into solver labeling."""
    rule = FixedRetention([1.0, 2.0])
    x = np.array([0.0, 1.0])
    first, second = rule.solver_levels(x, relabeled=True)
    assert np.all(first == 2.0)
    assert np.all(second == 1.0)
    first, _ = rule.solver_levels(x, relabeled=False)
    assert np.all(first == 1.0)


def test_proportional_levels() -> None:
    """Ensure the proportional rule retains a share of the surplus."""
    first, second = ProportionalRetention(0.5).levels(np.array([0.0, 3.0]))
    assert list(first) == [0.0, 1.5]
    assert list(second) == [0.0, 1.5]
    with pytest.raises(ParameterError):
        ProportionalRetention(0.0)


@pytest.mark.parametrize(
    ("lower", "upper", "liquidate"),
    [(-1.0, 2.0, False), (2.0, 2.0, False), (1.0, 2.0, True)],
)
def test_dividend_band_validation(
    lower: float, upper: float, *, liquidate: bool
) -> None:
    """
    Ensure non-admissible dividend bands are refused.

    Parameters:
        lower:  The level paid down to.
        upper:  The trigger level.
        liquidate:  Whether the first payment ends the path.
    """
    with pytest.raises(NonAdmissibleError):
        DividendBand(lower, upper, liquidate)


def test_dividend_band_helpers() -> None:
    """Ensure the never-paying band and scaling."""
    assert not DividendBand.never_pay().pays
    band = DividendBand(1.0, 2.0).shifted(1.5)
    assert (band.lower, band.upper) == (1.5, 3.0)


def test_shifted_strategy(base_solution: Solution) -> None:
    """
    Ensure a shifted strategy keeps its rule and scales its band.

    Parameters:
        base_solution:  The solved base parameter set.
    """
    optimal = optimal_strategy(base_solution)
    shifted = optimal.shifted(0.8)
    assert shifted.name == "optimal@0.8"
    assert shifted.rule is optimal.rule
    assert shifted.band.upper == pytest.approx(0.8 * optimal.band.upper)
    assert shifted.describe()["band"]["lower"] == shifted.band.lower


@pytest.mark.parametrize(
    "kwargs",
    [
        {"paths": 0},
        {"time_step": 0.0},
        {"workers": 0},
        {"time_step": 2.0, "horizon": 1.0},
    ],
)
def test_sim_config_validation(kwargs: dict) -> None:
    """
    Ensure invalid run controls are refused.

    Parameters:
        kwargs:  The offending controls.
    """
    with pytest.raises(InvalidConfigError):
        SimConfig(**kwargs)


def test_sim_config_steps() -> None:
    """Ensure the step count covers the horizon."""
    assert SimConfig(time_step=0.01, horizon=2.0).steps == 200
    assert SimConfig(time_step=0.3, horizon=1.0).steps == 4


def test_deterministic_schedule(
    base_params: ModelParams, deterministic_config: SimConfig
) -> None:
    """
    Ensure noiseless paths pay on a fixed schedule.

    Without reinsurance the surplus climbs by ``7.4 Δt`` per step, so
    from 1 it first reaches 2 after 14 steps and pays 1.036.

    Parameters:
        base_params:  The base parameter set.
        deterministic_config:  Noiseless run controls.
    """
    strategy = Strategy(NoReinsurance(), DividendBand(1.0, 2.0), "plain")
    run = run_paths(base_params, strategy, 1.0, deterministic_config)
    assert np.all(run.payments == 14)
    assert np.all(np.isnan(run.ruin_time))
    net = 0.7 * 1.036 - 0.2
    expected = math.fsum(
        math.exp(-0.5 * 0.14 * j) * net for j in range(1, 15)
    )
    assert run.payoff == pytest.approx(np.full(4, expected), abs=1e-6)
    result = simulate(base_params, strategy, 1.0, deterministic_config)
    assert result.mean == pytest.approx(expected, abs=1e-6)
    assert result.standard_error == pytest.approx(0.0, abs=1e-12)
    assert result.mean_payments == 14.0


def test_payment_at_start(
    base_params: ModelParams, deterministic_config: SimConfig
) -> None:
    """
    Ensure a surplus above the band is paid down immediately.

    A liquidating payment closes the path without counting as ruin.

    Parameters:
        base_params:  The base parameter set.
        deterministic_config:  Noiseless run controls.
    """
    strategy = Strategy(
        NoReinsurance(), DividendBand(0.0, 2.0, liquidate=True), "liquidate"
    )
    run = run_paths(base_params, strategy, 3.0, deterministic_config)
    assert np.all(run.payments == 1)
    assert np.all(run.liquidation_time == 0.0)
    assert np.all(np.isnan(run.ruin_time))
    assert run.payoff == pytest.approx(np.full(4, 0.7 * 3.0 - 0.2))
    result = simulate(base_params, strategy, 3.0, deterministic_config)
    assert result.ruin_fraction == 0.0
    assert result.liquidated_fraction == 1.0
    assert math.isnan(result.mean_ruin_time)


def test_liquidation_pays_once(liquidating_solution: Solution) -> None:
    """
    Ensure a liquidating strategy pays at most once per path.

    Parameters:
        liquidating_solution:  The solution with a prohibitive cost.
    """
    strategy = optimal_strategy(liquidating_solution)
    upper = strategy.band.upper
    assert strategy.band.liquidate
    cfg = SimConfig(
        paths=400, time_step=0.01, horizon=5.0, block_size=200, seed=2
    )
    run = run_paths(liquidating_solution.params, strategy, 0.95 * upper, cfg)
    paid = run.payments == 1
    assert np.all(run.payments <= 1)
    assert np.any(paid)
    assert np.all(np.isfinite(run.liquidation_time[paid]))
    assert np.all(np.isnan(run.ruin_time[paid]))
    econ = liquidating_solution.params.econ
    above = simulate(liquidating_solution.params, strategy, 1.5 * upper, cfg)
    assert above.mean_payments == 1.0
    assert above.liquidated_fraction == 1.0
    assert above.mean == pytest.approx(
        econ.tax_retention * 1.5 * upper - econ.transaction_cost
    )


def test_never_pay(
    base_params: ModelParams, deterministic_config: SimConfig
) -> None:
    """
    Ensure a strategy that never pays is worth nothing.

    Parameters:
        base_params:  The base parameter set.
        deterministic_config:  Noiseless run controls.
    """
    strategy = Strategy(NoReinsurance(), DividendBand.never_pay(), "hoard")
    result = simulate(base_params, strategy, 1.0, deterministic_config)
    assert result.mean == 0.0
    assert result.truncation_bound == 0.0


def test_full_cession_is_ruined(
    base_params: ModelParams, deterministic_config: SimConfig
) -> None:
    """
    Ensure ceding everything drifts the surplus into ruin.

    Full cession leaves the drift ``k_0 = -1.6`` and no volatility.

    Parameters:
        base_params:  The base parameter set.
        deterministic_config:  Noiseless run controls.
    """
    strategy = Strategy(
        FixedRetention([0.0, 0.0]), DividendBand(1.0, 5.0), "cede"
    )
    result = simulate(base_params, strategy, 1.0, deterministic_config)
    assert result.ruin_fraction == 1.0
    assert result.mean == 0.0
    assert result.mean_ruin_time == pytest.approx(0.63, abs=0.011)


def test_negative_start(
    base_params: ModelParams, deterministic_config: SimConfig
) -> None:
    """
    Ensure a negative initial surplus is refused.

    Parameters:
        base_params:  The base parameter set.
        deterministic_config:  Noiseless run controls.
    """
    strategy = Strategy(NoReinsurance(), DividendBand(1.0, 2.0))
    with pytest.raises(InvalidConfigError, match="non-negative"):
        run_paths(base_params, strategy, -1.0, deterministic_config)


def test_trace(
    base_params: ModelParams, deterministic_config: SimConfig
) -> None:
    """
    Ensure the leading paths are recorded on the time grid.

    Parameters:
        base_params:  The base parameter set.
        deterministic_config:  Noiseless run controls.
    """
    cfg = SimConfig(
        paths=4,
        time_step=0.01,
        horizon=2.0,
        block_size=2,
        volatility_scale=0.0,
        trace_paths=5,
    )
    strategy = Strategy(NoReinsurance(), DividendBand(1.0, 2.0))
    run = run_paths(base_params, strategy, 1.0, cfg)
    assert run.trace.shape == (201, 2)
    assert run.times[-1] == pytest.approx(2.0)
    assert run.trace[0, 0] == 1.0
    assert run.trace[13, 0] == pytest.approx(1.962)
    assert run.trace[14, 0] == 1.0
    untraced = run_paths(base_params, strategy, 1.0, deterministic_config)
    assert untraced.trace.shape == (201, 0)


def test_path_coefficients_follow_curve(base_solution: Solution) -> None:
    """
    Ensure the tabulated drift joins ``K_2`` at ``x_0``.

    Parameters:
        base_solution:  The solved base parameter set.
    """
    strategy = optimal_strategy(base_solution)
    table = path_coefficients(
        base_solution.params, strategy, 1.0, SimConfig(paths=1)
    )
    x0 = base_solution.curve.x0
    assert x0 in table.grid
    rate, vol = table(np.array([0.0, x0, 1.5 * x0]))
    assert rate[0] < 7.4
    assert rate[1:] == pytest.approx([7.4, 7.4])
    assert vol[1:] == pytest.approx([math.sqrt(15.0)] * 2)


def test_worker_invariance(base_solution: Solution) -> None:
    """
    Ensure the estimate does not depend on the number of workers.

    Parameters:
        base_solution:  The solved base parameter set.
    """
    strategy = optimal_strategy(base_solution)
    serial = SimConfig(
        paths=300, time_step=0.01, horizon=3.0, block_size=100, seed=7
    )
    parallel = SimConfig(
        paths=300,
        time_step=0.01,
        horizon=3.0,
        block_size=100,
        seed=7,
        workers=2,
    )
    first = simulate(base_solution.params, strategy, 1.0, serial)
    second = simulate(base_solution.params, strategy, 1.0, parallel)
    assert first.mean == second.mean
    assert first.standard_error == second.standard_error
    assert first.ruin_fraction == second.ruin_fraction


def test_seed_changes_paths(base_solution: Solution) -> None:
    """
    Ensure different seeds give different samples.

    Parameters:
        base_solution:  The solved base parameter set.
    """
    strategy = optimal_strategy(base_solution)
    cfg = SimConfig(paths=200, time_step=0.01, horizon=3.0, block_size=200)
    first = simulate(base_solution.params, strategy, 1.0, cfg)
    other = SimConfig(
        paths=200, time_step=0.01, horizon=3.0, block_size=200, seed=1
    )
    second = simulate(base_solution.params, strategy, 1.0, other)
    assert first.mean != second.mean


def test_antithetic_normals(base_solution: Solution) -> None:
    """
    Ensure antithetic sampling runs and reports a finite error.

    Parameters:
        base_solution:  The solved base parameter set.
    """
    cfg = SimConfig(
        paths=200,
        time_step=0.01,
        horizon=3.0,
        block_size=200,
        antithetic=True,
    )
    result = simulate(
        base_solution.params, optimal_strategy(base_solution), 1.0, cfg
    )
    assert math.isfinite(result.standard_error)
    assert result.paths == 200


def test_self_comparison(base_solution: Solution) -> None:
    """
    Ensure two copies of one strategy differ by exactly nothing.

    Parameters:
        base_solution:  The solved base parameter set.
    """
    optimal = optimal_strategy(base_solution)
    copy = Strategy(optimal.rule, optimal.band, "copy")
    cfg = SimConfig(paths=200, time_step=0.01, horizon=3.0, block_size=100)
    comparison = compare_strategies(
        base_solution.params, [optimal, copy], 1.0, cfg
    )
    difference = comparison.difference("optimal", "copy")
    assert difference.mean == 0.0
    assert difference.standard_error == 0.0
    assert comparison.difference("copy", "optimal").mean == 0.0
    with pytest.raises(KeyError):
        comparison.difference("optimal", "missing")


def test_compare_needs_distinct_names(base_solution: Solution) -> None:
    """
    Ensure a comparison needs two distinctly named strategies.

    Parameters:
        base_solution:  The solved base parameter set.
    """
    optimal = optimal_strategy(base_solution)
    with pytest.raises(InvalidConfigError):
        compare_strategies(base_solution.params, [optimal], 1.0)
    with pytest.raises(InvalidConfigError):
        compare_strategies(base_solution.params, [optimal, optimal], 1.0)


def test_optimal_dominates_baselines(base_solution: Solution) -> None:
    """
    Ensure no baseline beats the optimal strategy at low surplus.

    The baselines keep the optimal band with other retentions, or the
    optimal retentions with the band moved by 20% either way.

    Parameters:
        base_solution:  The solved base parameter set.
    """
    optimal = optimal_strategy(base_solution)
    strategies = [
        optimal,
        baseline_strategy("no-reinsurance", base_solution),
        baseline_strategy("proportional", base_solution, fraction=0.5),
        optimal.shifted(0.8),
        optimal.shifted(1.2),
    ]
    cfg = SimConfig(
        paths=4000, time_step=2e-3, horizon=10.0, block_size=1000, seed=3
    )
    comparison = compare_strategies(
        base_solution.params, strategies, 0.5, cfg
    )
    assert set(comparison.ranking) == {s.name for s in strategies}
    for other in strategies[1:]:
        difference = comparison.difference("optimal", other.name)
        assert difference.mean > -3.0 * difference.standard_error


@pytest.mark.parametrize("where", ["half", "switch", "band"])
def test_estimate_agrees_with_value_function(
    base_solution: Solution, where: str
) -> None:
    """
    Ensure the simulated optimal strategy is worth ``W(x)``.

    The estimate must lie within three standard errors plus the
    truncation bound, below, at and above the full-retention level.

    Parameters:
        base_solution:  The solved base parameter set.
        where:  Which surplus to start from.
    """
    vf = base_solution.value
    x = {
        "half": 0.5 * vf.x0,
        "switch": vf.x0,
        "band": 0.5 * (vf.x0 + base_solution.policy.upper),
    }[where]
    cfg = SimConfig(
        paths=4000,
        time_step=5e-4,
        horizon=14.0,
        block_size=1000,
        seed=11,
        antithetic=True,
    )
    result = simulate(
        base_solution.params, optimal_strategy(base_solution), x, cfg
    )
    assert result.truncation_bound > 0
    assert result.agrees_with(float(vf(x)))


def test_halving_time_step(base_solution: Solution) -> None:
    """
    Ensure halving ``Δt`` moves the estimate by sampling noise only.

    Parameters:
        base_solution:  The solved base parameter set.
    """
    strategy = optimal_strategy(base_solution)
    x = 0.5 * base_solution.curve.x0
    coarse = SimConfig(
        paths=4000, time_step=2e-3, horizon=10.0, block_size=1000, seed=5
    )
    fine = SimConfig(
        paths=4000, time_step=1e-3, horizon=10.0, block_size=1000, seed=5
    )
    first = simulate(base_solution.params, strategy, x, coarse)
    second = simulate(base_solution.params, strategy, x, fine)
    assert second.truncation_bound == first.truncation_bound
    noise = math.hypot(first.standard_error, second.standard_error)
    assert abs(first.mean - second.mean) < 3.0 * noise


def test_truncation_bound(base_params: ModelParams) -> None:
    """
    Ensure the truncation bound decays with the horizon.

    Parameters:
        base_params:  The base parameter set.
    """
    band = DividendBand(1.0, 2.0)
    bound = truncation_bound(base_params, band, 10.0)
    assert bound == pytest.approx(
        math.exp(-5.0) * 0.7 * (2.0 + 7.4 / 0.5)
    )
    assert truncation_bound(base_params, DividendBand.never_pay(), 1.0) == 0


def test_agrees_with() -> None:
    """Ensure agreement allows three errors plus the truncation bound."""
    result = SimEstimate(
        mean=10.0,
        standard_error=0.1,
        interval=(9.7, 10.3),
        ruin_fraction=0.0,
        mean_ruin_time=math.nan,
        truncation_bound=0.05,
        paths=100,
    )
    assert result.agrees_with(10.34)
    assert not result.agrees_with(10.36)


def test_missing_hook_is_named() -> None:
    """Ensure a rule without ``levels`` names the gap."""

    class Incomplete(RetentionRule):
        def levels(self, x: np.ndarray) -> tuple:
            return super().levels(x)

    with pytest.raises(
        NotImplementedError,
        match=r"`Incomplete` must implement `levels\(\)`",
    ):
        Incomplete().levels(np.zeros(1))


def test_non_admissible_rule(base_params: ModelParams) -> None:
    """
    Ensure a rule producing negative retentions is refused.

    Parameters:
        base_params:  The base parameter set.
    """

    class Broken(NoReinsurance):
        rule_name = "broken"

        def levels(self, x: np.ndarray) -> tuple:
            return -np.ones_like(x), np.ones_like(x)

    strategy = Strategy(Broken(), DividendBand(1.0, 2.0))
    with pytest.raises(NonAdmissibleError, match="negative retention"):
        run_paths(base_params, strategy, 1.0, SimConfig(paths=2))
