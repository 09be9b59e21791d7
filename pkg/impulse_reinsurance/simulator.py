"""
Provides Monte Carlo simulation of the controlled surplus diffusion.

A strategy is a feedback retention rule ``x -> (q_1, q_2)`` together
with an impulse dividend band.  Paths are advanced with Euler-Maruyama
steps; at every grid time the surplus is checked for ruin (``X < 0``)
and for the upper barrier, where it is paid down to the lower barrier
and ``exp(-δ t) (k ξ - K)`` is credited.

Paths are simulated in fixed-size blocks, each with its own random
stream spawned from the master seed, so estimates depend on the seed
but not on the number of worker processes.  Every block draws a full
block of normals per step whatever its survivors, which keeps the
streams of two strategies aligned (common random numbers).
"""

# SPDX-License-Identifier: BSD-3-Clause

from __future__ import annotations

import itertools
import logging
import math
from abc import abstractmethod
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import stats

from .abstract_method import AbstractMethod
from .errors import InvalidConfigError, NonAdmissibleError, ParameterError
from .model import ModelParams, derive_constants, drift, variance
from .policy_solver import RetentionCurve, Solution

logger = logging.getLogger(__name__)

Levels = tuple[np.ndarray, np.ndarray]
CONFIDENCE = 0.99


def retention_rule(**kwargs) -> RetentionRule:
    """
    Generate retention rules.

    A factory method that returns any subclass of
    :class:`RetentionRule` that has the ``@RetentionRule.subclass``
    decorator applied to it.

    Parameters:
        **kwargs:  The ``rule`` name plus any supported arguments of
            the :class:`RetentionRule` subclass.

    Returns:
        A single instance of a :class:`RetentionRule` subclass.

    Raises:
        ParameterError:  If the name matches no (or more than one)
            registered rule.
    """
    kwargs = dict(kwargs)
    name = kwargs.pop("rule", None)
    rules = [r for r in RetentionRule.subclasses if r.rule_name == name]
    if len(rules) == 1:
        return rules[0](**kwargs)
    if len(rules) == 0:
        message = f"Unsupported retention rule:  {name}"
        raise ParameterError(message)
    message = f"Multiple retention rules match '{name}'."
    raise ParameterError(message)


class RetentionRule:
    """
    A feedback map from surplus to the two retention levels.

    Subclasses return levels in the caller's class labeling unless they
    set :attr:`solver_labeled`, in which case the levels are already in
    the order the solver uses (``θ_1 >= θ_2``).
    """

    rule_name = "undefined"  # Should be defined by subclasses.
    subclasses = []  # noqa: RUF012
    solver_labeled = False

    @staticmethod
    def subclass(rule_subclass: type):
        """
        Mark a class as being a supported retention rule.

        This is a class decorator that adds to a list of supported
        :class:`RetentionRule` classes for the :func:`retention_rule`
        factory method.
        """
        if issubclass(rule_subclass, RetentionRule):
            RetentionRule.subclasses.append(rule_subclass)
        return rule_subclass

    @abstractmethod
    def levels(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """
        Evaluate the retention levels.

        Parameters:
            x:  Non-negative surplus levels.

        Returns:
            Arrays ``(q_1, q_2)``; ``inf`` means no reinsurance.
        """
        raise AbstractMethod

    @property
    def reference_surplus(self) -> float:
        """A surplus above which the rule no longer changes."""
        return 0.0

    def knots(self) -> list[float]:
        """Surplus levels where the rule has a kink."""
        return []

    def solver_levels(self, x: np.ndarray, *, relabeled: bool) -> Levels:
        """The levels in solver labeling, checked for admissibility."""
        first, second = (
            np.broadcast_to(np.asarray(q, dtype=float), np.shape(x))
            for q in self.levels(x)
        )
        if np.any(first < 0) or np.any(second < 0):
            message = f"`{self.rule_name}` produced a negative retention."
            raise NonAdmissibleError(message)
        if relabeled and not self.solver_labeled:
            return second, first
        return first, second

    def describe(self) -> dict:
        """The rule as a configuration record."""
        return {"rule": self.rule_name}


@RetentionRule.subclass
class OptimalRetention(RetentionRule):
    """The retention curve of a solved problem."""

    rule_name = "optimal"
    solver_labeled = True

    def __init__(self, curve: RetentionCurve) -> None:
        """
        Initialize an :class:`OptimalRetention` rule.

        Parameters:
            curve:  The solver's retention curve.
        """
        self.curve = curve

    def levels(self, x: np.ndarray) -> Levels:  # noqa: D102
        return self.curve.retentions(np.maximum(x, 0.0))

    @property
    def reference_surplus(self) -> float:  # noqa: D102
        return self.curve.x0

    def knots(self) -> list[float]:  # noqa: D102
        return [s.x_start for s in self.curve.segments] + [self.curve.x0]


@RetentionRule.subclass
class NoReinsurance(RetentionRule):
    """Keep every claim:  ``q_1 = q_2 = inf``."""

    rule_name = "no-reinsurance"

    def levels(self, x: np.ndarray) -> Levels:  # noqa: D102
        return np.full(np.shape(x), math.inf), np.full(np.shape(x), math.inf)


@RetentionRule.subclass
class ProportionalRetention(RetentionRule):
    """Retain each claim up to a fixed fraction of the current surplus."""

    rule_name = "proportional"

    def __init__(self, fraction: float = 0.5) -> None:
        """
        Initialize a :class:`ProportionalRetention` rule.

        Parameters:
            fraction:  The retention per unit of surplus, positive.
        """
        if not fraction > 0:
            message = f"The retention fraction must be positive:  {fraction!r}"
            raise ParameterError(message)
        self.fraction = float(fraction)

    def levels(self, x: np.ndarray) -> Levels:  # noqa: D102
        q = self.fraction * np.maximum(x, 0.0)
        return q, q.copy()

    def describe(self) -> dict:  # noqa: D102
        return {"rule": self.rule_name, "fraction": self.fraction}


@RetentionRule.subclass
class FixedRetention(RetentionRule):
    """Constant retention levels, in the caller's class labeling."""

    rule_name = "fixed"

    def __init__(self, levels: Sequence[float]) -> None:
        """
        Initialize a :class:`FixedRetention` rule.

        Parameters:
            levels:  The two retention levels; ``inf`` allowed.
        """
        levels = tuple(float(q) for q in levels)
        if len(levels) != 2 or min(levels) < 0:
            message = f"Expected two non-negative retentions:  {levels!r}"
            raise ParameterError(message)
        self.fixed = levels

    def levels(self, x: np.ndarray) -> Levels:  # noqa: D102
        shape = np.shape(x)
        return np.full(shape, self.fixed[0]), np.full(shape, self.fixed[1])

    def describe(self) -> dict:  # noqa: D102
        return {"rule": self.rule_name, "levels": list(self.fixed)}


@dataclass(frozen=True)
class DividendBand:
    """
    An impulse dividend rule.

    Whenever the surplus is at least :attr:`upper` it is paid down to
    :attr:`lower`.  With :attr:`liquidate` the first payment takes the
    whole surplus and ends the path.

    Attributes:
        lower (float):  The level paid down to.
        upper (float):  The trigger level; ``inf`` never pays.
        liquidate (bool):  Whether the first payment ends the path.
    """

    lower: float = 0.0
    upper: float = math.inf
    liquidate: bool = False

    def __post_init__(self) -> None:
        """Check ``0 <= lower < upper``."""
        if not 0 <= self.lower < self.upper:
            message = (
                f"A dividend band needs 0 <= lower < upper, got "
                f"({self.lower!r}, {self.upper!r})."
            )
            raise NonAdmissibleError(message)
        if self.liquidate and self.lower != 0:
            message = "A liquidating band must pay down to zero."
            raise NonAdmissibleError(message)

    @classmethod
    def never_pay(cls) -> DividendBand:
        """A rule that never pays a dividend."""
        return cls()

    @property
    def pays(self) -> bool:
        """Whether the rule can pay at all."""
        return math.isfinite(self.upper)

    def shifted(self, factor: float) -> DividendBand:
        """Both barriers scaled by ``factor``."""
        return DividendBand(
            self.lower * factor, self.upper * factor, self.liquidate
        )


@dataclass(frozen=True)
class Strategy:
    """
    A retention rule with a dividend rule.

    Attributes:
        rule (RetentionRule):  The reinsurance control.
        band (DividendBand):  The dividend control.
        name (str):  A label for reports.
    """

    rule: RetentionRule = field(repr=False)
    band: DividendBand
    name: str = "strategy"

    def shifted(self, factor: float) -> Strategy:
        """
        The same retention rule with the band scaled by ``factor``.

        The copy is named ``<name>@<factor>``, e.g. ``optimal@1.2``.
        """
        return Strategy(
            self.rule, self.band.shifted(factor), f"{self.name}@{factor:g}"
        )

    def describe(self) -> dict:
        """The strategy as a record."""
        return {
            "name": self.name,
            "retention": self.rule.describe(),
            "band": {
                "lower": self.band.lower,
                "upper": self.band.upper,
                "liquidate": self.band.liquidate,
            },
        }


def optimal_strategy(solution: Solution) -> Strategy:
    """The solver's optimal policy as a :class:`Strategy`."""
    policy = solution.policy
    return Strategy(
        OptimalRetention(solution.curve),
        DividendBand(policy.lower, policy.upper, policy.liquidate),
        "optimal",
    )


def baseline_strategy(name: str, solution: Solution, **kwargs) -> Strategy:
    """
    A registered retention rule combined with the optimal band.

    Parameters:
        name:  A :class:`RetentionRule` name.
        solution:  The solved problem supplying the band (and the
            curve for ``optimal``).
        **kwargs:  Arguments of the rule.

    Returns:
        The baseline :class:`Strategy`.
    """
    if name == OptimalRetention.rule_name:
        return optimal_strategy(solution)
    policy = solution.policy
    return Strategy(
        retention_rule(rule=name, **kwargs),
        DividendBand(policy.lower, policy.upper, policy.liquidate),
        name,
    )


@dataclass(frozen=True)
class SimConfig:
    """
    Controls of a Monte Carlo run.

    Attributes:
        paths (int):  The number of paths ``N``.
        time_step (float):  The Euler step ``Δt``.
        horizon (float):  The horizon ``T``.
        seed (int):  The master seed.
        antithetic (bool):  Whether each block pairs normals with their
            negatives.
        workers (int):  Worker processes; ``1`` runs in-process.
        block_size (int):  Paths per random stream.
        volatility_scale (float):  Multiplies the diffusion coefficient;
            ``0`` gives deterministic paths.
        trace_paths (int):  How many leading paths to record.
        grid_nodes (int):  Surplus nodes of the drift/volatility tables.
    """

    paths: int = 100_000
    time_step: float = 1e-3
    horizon: float = 40.0
    seed: int = 20240101
    antithetic: bool = False
    workers: int = 1
    block_size: int = 8192
    volatility_scale: float = 1.0
    trace_paths: int = 0
    grid_nodes: int = 4001

    def __post_init__(self) -> None:
        """Validate the controls."""
        checks = {
            "paths": self.paths >= 1,
            "time_step": self.time_step > 0,
            "horizon": self.horizon > 0,
            "seed": self.seed >= 0,
            "workers": self.workers >= 1,
            "block_size": self.block_size >= 2,
            "volatility_scale": self.volatility_scale >= 0,
            "trace_paths": self.trace_paths >= 0,
            "grid_nodes": self.grid_nodes >= 2,
        }
        for name, valid in checks.items():
            if not valid:
                value = getattr(self, name)
                message = f"Invalid simulation setting `{name}` = {value!r}."
                raise InvalidConfigError(message)
        if self.time_step > self.horizon:
            message = "The time step exceeds the horizon."
            raise InvalidConfigError(message)

    @property
    def steps(self) -> int:
        """The number of Euler steps."""
        return max(1, math.ceil(self.horizon / self.time_step - 1e-9))


@dataclass(frozen=True)
class SimEstimate:
    """
    A Monte Carlo estimate of the expected discounted dividends.

    Attributes:
        mean (float):  The sample mean.
        standard_error (float):  ``stdev/sqrt(N)``.
        interval (tuple[float, float]):  The 99% confidence interval.
        ruin_fraction (float):  The share of paths ruined before ``T``;
            liquidated paths are not counted.
        mean_ruin_time (float):  Mean ruin time of ruined paths, or
            ``nan``.
        truncation_bound (float):  A bound on the dividends lost by
            stopping at ``T``.
        paths (int):  The number of paths.
        mean_payments (float):  Dividend payments per path.
        liquidated_fraction (float):  The share of paths closed by a
            liquidating payment.
    """

    mean: float
    standard_error: float
    interval: tuple[float, float]
    ruin_fraction: float
    mean_ruin_time: float
    truncation_bound: float
    paths: int
    mean_payments: float = 0.0
    liquidated_fraction: float = 0.0

    def agrees_with(self, value: float, width: float = 3.0) -> bool:
        """Whether ``value`` is within ``width`` errors plus the bound."""
        return abs(self.mean - value) <= (
            width * self.standard_error + self.truncation_bound
        )


@dataclass(frozen=True)
class PathCoefficients:
    """
    Drift and volatility tabulated over surplus.

    Lookups interpolate linearly and hold the end values beyond the
    grid.
    """

    grid: np.ndarray
    drift: np.ndarray
    volatility: np.ndarray

    def __call__(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """The drift and volatility at ``x``."""
        return (
            np.interp(x, self.grid, self.drift),
            np.interp(x, self.grid, self.volatility),
        )


def path_coefficients(
    params: ModelParams,
    strategy: Strategy,
    x_start: float,
    cfg: SimConfig,
) -> PathCoefficients:
    """
    Tabulate the controlled drift and volatility.

    Parameters:
        params:  The problem parameters.
        strategy:  The strategy whose retention rule is tabulated.
        x_start:  The initial surplus.
        cfg:  The run controls.

    Returns:
        The tables, covering every surplus a path can reach before a
        payment (and a margin beyond).
    """
    consts = derive_constants(params)
    band = strategy.band
    reach = max(
        x_start,
        band.upper if band.pays else 0.0,
        strategy.rule.reference_surplus,
        1.0,
    )
    grid = np.union1d(
        np.linspace(0.0, 2.0 * reach, cfg.grid_nodes),
        [k for k in strategy.rule.knots() if 0 <= k <= 2.0 * reach],
    )
    q1, q2 = strategy.rule.solver_levels(grid, relabeled=consts.relabeled)
    rate = drift(consts, params, q1, q2)
    spread = variance(consts, params, q1, q2)
    return PathCoefficients(
        grid,
        np.asarray(rate, dtype=float),
        cfg.volatility_scale * np.sqrt(np.asarray(spread, dtype=float)),
    )


@dataclass(frozen=True)
class _BlockTask:
    coefficients: PathCoefficients
    band: DividendBand
    x_start: float
    discount_rate: float
    tax_retention: float
    transaction_cost: float
    cfg: SimConfig
    seed: np.random.SeedSequence
    paths: int
    trace: int


@dataclass(frozen=True)
class _BlockResult:
    payoff: np.ndarray
    ruin_time: np.ndarray
    liquidation_time: np.ndarray
    payments: np.ndarray
    trace: Optional[np.ndarray]


def _normals(
    rng: np.random.Generator, size: int, *, antithetic: bool
) -> np.ndarray:
    if not antithetic:
        return rng.standard_normal(size)
    half = rng.standard_normal((size + 1) // 2)
    return np.concatenate([half, -half])[:size]


def _simulate_block(task: _BlockTask) -> _BlockResult:
    """
    Simulate one block of paths.

    Module-level so it can be pickled for worker processes.
    """
    cfg, band = task.cfg, task.band
    rng = np.random.default_rng(task.seed)
    n = task.paths
    x = np.full(n, float(task.x_start))
    alive = np.ones(n, dtype=bool)
    payoff = np.zeros(n)
    payments = np.zeros(n, dtype=np.int64)
    ruin_time = np.full(n, math.nan)
    liquidation_time = np.full(n, math.nan)
    trace = None
    if task.trace:
        trace = np.full((cfg.steps + 1, task.trace), math.nan)
        trace[0] = x[: task.trace]
    root_dt = math.sqrt(cfg.time_step)

    def pay(t: float) -> None:
        due = alive & (x >= band.upper)
        if not np.any(due):
            return
        amount = x[due] - band.lower
        if np.any(amount > x[due]):
            message = "A dividend exceeds the current surplus."
            raise NonAdmissibleError(message)
        payoff[due] += math.exp(-task.discount_rate * t) * (
            task.tax_retention * amount - task.transaction_cost
        )
        payments[due] += 1
        x[due] = band.lower
        if band.liquidate:
            liquidation_time[due] = t
            alive[due] = False

    if band.pays:
        pay(0.0)
    for step in range(1, cfg.steps + 1):
        z = _normals(rng, cfg.block_size, antithetic=cfg.antithetic)[:n]
        if not np.any(alive):
            continue
        t = step * cfg.time_step
        rate, vol = task.coefficients(x)
        moved = x + rate * cfg.time_step + vol * root_dt * z
        x = np.where(alive, moved, x)
        ruined = alive & (x < 0)
        ruin_time[ruined] = t
        alive &= ~ruined
        if band.pays:
            pay(t)
        if trace is not None:
            trace[step] = x[: task.trace]
    return _BlockResult(payoff, ruin_time, liquidation_time, payments, trace)


def truncation_bound(
    params: ModelParams, band: DividendBand, horizon: float
) -> float:
    """
    Bound the expected dividends paid after the horizon.

    From any surplus below ``x̂`` the discounted dividends cannot exceed
    ``k (x̂ + K_2/δ)``, the surplus plus the discounted uncontrolled
    drift, so the loss from stopping at ``T`` is at most
    ``exp(-δ T)`` times that.
    """
    if not band.pays:
        return 0.0
    econ = params.econ
    consts = derive_constants(params)
    delta = econ.discount_rate
    return math.exp(-delta * horizon) * econ.tax_retention * (
        band.upper + max(consts.K2, 0.0) / delta
    )


@dataclass(frozen=True)
class SimulationRun:
    """
    The per-path outcome of :func:`run_paths`.

    Attributes:
        payoff (np.ndarray):  Discounted dividends per path.
        ruin_time (np.ndarray):  Ruin time, ``nan`` for paths never
            ruined.
        liquidation_time (np.ndarray):  Time of the liquidating
            payment, ``nan`` for paths never liquidated.
        payments (np.ndarray):  Payments per path.
        times (np.ndarray):  The grid times of :attr:`trace`.
        trace (np.ndarray):  Surplus of the leading paths, one column
            per path; empty unless requested.
    """

    payoff: np.ndarray
    ruin_time: np.ndarray
    liquidation_time: np.ndarray
    payments: np.ndarray
    times: np.ndarray
    trace: np.ndarray


def run_paths(
    params: ModelParams,
    strategy: Strategy,
    x_start: float,
    cfg: SimConfig,
) -> SimulationRun:
    """
    Simulate every path of a run.

    Parameters:
        params:  The problem parameters.
        strategy:  The strategy to follow.
        x_start:  The initial surplus, non-negative.
        cfg:  The run controls.

    Returns:
        The per-path outcomes, in path order.

    Raises:
        InvalidConfigError:  If ``x_start`` is negative.
    """
    if not x_start >= 0:
        message = f"The initial surplus must be non-negative, got {x_start!r}."
        raise InvalidConfigError(message)
    econ = params.econ
    coefficients = path_coefficients(params, strategy, x_start, cfg)
    blocks = math.ceil(cfg.paths / cfg.block_size)
    seeds = np.random.SeedSequence(cfg.seed).spawn(blocks)
    tasks = [
        _BlockTask(
            coefficients=coefficients,
            band=strategy.band,
            x_start=x_start,
            discount_rate=econ.discount_rate,
            tax_retention=econ.tax_retention,
            transaction_cost=econ.transaction_cost,
            cfg=cfg,
            seed=seed,
            paths=min(cfg.block_size, cfg.paths - index * cfg.block_size),
            trace=min(cfg.trace_paths, cfg.paths, cfg.block_size)
            if index == 0
            else 0,
        )
        for index, seed in enumerate(seeds)
    ]
    logger.info(
        "Simulating %d paths of '%s' from x = %g in %d block(s) on %d "
        "worker(s).",
        cfg.paths,
        strategy.name,
        x_start,
        blocks,
        cfg.workers,
    )
    if cfg.workers == 1 or blocks == 1:
        results = [_simulate_block(task) for task in tasks]
    else:
        with ProcessPoolExecutor(max_workers=cfg.workers) as executor:
            results = list(executor.map(_simulate_block, tasks))
    for index, _ in enumerate(results):
        logger.debug("Block %d of %d done.", index + 1, blocks)
    first = results[0].trace
    return SimulationRun(
        payoff=np.concatenate([r.payoff for r in results]),
        ruin_time=np.concatenate([r.ruin_time for r in results]),
        liquidation_time=np.concatenate(
            [r.liquidation_time for r in results]
        ),
        payments=np.concatenate([r.payments for r in results]),
        times=cfg.time_step * np.arange(cfg.steps + 1),
        trace=np.empty((cfg.steps + 1, 0)) if first is None else first,
    )


def _interval(mean: float, error: float) -> tuple[float, float]:
    half = stats.norm.ppf(0.5 + CONFIDENCE / 2.0) * error
    return mean - half, mean + half


def _standard_error(sample: np.ndarray) -> float:
    if sample.size < 2:
        return math.inf
    return float(np.std(sample, ddof=1) / math.sqrt(sample.size))


def estimate(run: SimulationRun, bound: float) -> SimEstimate:
    """
    Summarize a run.

    Parameters:
        run:  The per-path outcomes.
        bound:  The truncation bound to report.

    Returns:
        The :class:`SimEstimate`.
    """
    mean = float(np.mean(run.payoff))
    error = _standard_error(run.payoff)
    ruined = np.isfinite(run.ruin_time)
    return SimEstimate(
        mean=mean,
        standard_error=error,
        interval=_interval(mean, error),
        ruin_fraction=float(np.mean(ruined)),
        mean_ruin_time=(
            float(np.mean(run.ruin_time[ruined]))
            if np.any(ruined)
            else math.nan
        ),
        truncation_bound=bound,
        paths=int(run.payoff.size),
        mean_payments=float(np.mean(run.payments)),
        liquidated_fraction=float(
            np.mean(np.isfinite(run.liquidation_time))
        ),
    )


def simulate(
    params: ModelParams,
    strategy: Strategy,
    x_start: float,
    cfg: SimConfig = SimConfig(),
) -> SimEstimate:
    """
    Estimate the expected discounted dividends of a strategy.

    Parameters:
        params:  The problem parameters.
        strategy:  The strategy to follow.
        x_start:  The initial surplus.
        cfg:  The run controls.

    Returns:
        The :class:`SimEstimate`; identical for a fixed seed whatever
        the number of workers.
    """
    run = run_paths(params, strategy, x_start, cfg)
    bound = truncation_bound(params, strategy.band, cfg.horizon)
    result = estimate(run, bound)
    logger.info(
        "'%s' from x = %g:  %.6g +/- %.3g (ruin %.3f).",
        strategy.name,
        x_start,
        result.mean,
        result.standard_error,
        result.ruin_fraction,
    )
    return result


@dataclass(frozen=True)
class PairwiseDifference:
    """
    The per-path payoff difference of two strategies.

    Attributes:
        first (str):  The minuend strategy.
        second (str):  The subtrahend strategy.
        mean (float):  Mean difference.
        standard_error (float):  Standard error of the difference.
        interval (tuple[float, float]):  The 99% confidence interval.
    """

    first: str
    second: str
    mean: float
    standard_error: float
    interval: tuple[float, float]


@dataclass(frozen=True)
class Comparison:
    """
    Strategies simulated under common random numbers.

    Attributes:
        estimates (dict[str, SimEstimate]):  Estimate per strategy.
        ranking (list[str]):  Strategy names, best mean first.
        differences (list[PairwiseDifference]):  Every ordered pair
            ``(a, b)`` with ``a`` ranked above ``b``.
    """

    estimates: dict
    ranking: list
    differences: list

    def difference(self, first: str, second: str) -> PairwiseDifference:
        """The difference ``first - second``."""
        for item in self.differences:
            if (item.first, item.second) == (first, second):
                return item
            if (item.second, item.first) == (first, second):
                low, high = item.interval
                return PairwiseDifference(
                    first, second, -item.mean, item.standard_error,
                    (-high, -low),
                )
        message = f"No comparison between '{first}' and '{second}'."
        raise KeyError(message)


def compare_strategies(
    params: ModelParams,
    strategies: Sequence[Strategy],
    x_start: float,
    cfg: SimConfig = SimConfig(),
) -> Comparison:
    """
    Rank strategies by their simulated value.

    Every strategy is simulated with the same seed, so path ``i`` sees
    the same normals under each, and differences are estimated from
    the per-path payoff differences.

    Parameters:
        params:  The problem parameters.
        strategies:  At least two strategies with distinct names.
        x_start:  The initial surplus.
        cfg:  The run controls.

    Returns:
        The :class:`Comparison`.

    Raises:
        InvalidConfigError:  With fewer than two strategies or repeated
            names.
    """
    names = [s.name for s in strategies]
    if len(strategies) < 2 or len(set(names)) != len(names):
        message = f"Need two or more distinctly named strategies:  {names}"
        raise InvalidConfigError(message)
    runs, estimates = {}, {}
    for strategy in strategies:
        run = run_paths(params, strategy, x_start, cfg)
        runs[strategy.name] = run
        estimates[strategy.name] = estimate(
            run, truncation_bound(params, strategy.band, cfg.horizon)
        )
    ranking = sorted(names, key=lambda name: -estimates[name].mean)
    differences = []
    for first, second in itertools.combinations(ranking, 2):
        gap = runs[first].payoff - runs[second].payoff
        mean = float(np.mean(gap))
        error = _standard_error(gap)
        differences.append(
            PairwiseDifference(
                first, second, mean, error, _interval(mean, error)
            )
        )
    logger.info("Ranking from x = %g:  %s.", x_start, ", ".join(ranking))
    return Comparison(estimates, ranking, differences)
