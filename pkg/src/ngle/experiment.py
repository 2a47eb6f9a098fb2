"""Multi-trial experiments: error-rate sweeps, convergence-time increments,
memory-cost linearity, and the error-rate threshold scan.

Every run is seeded by a pure function of the plan's base seed, the error
rate, the trial index and the attempt index, so trials can be executed in
any order (or concurrently) and aggregated by index with identical results.
"""

from __future__ import annotations

import dataclasses
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional, Sequence

import numpy as np

from ._rng import RandomStream, derive_seed
from .game import DEFAULT_MAX_ITERATIONS, ErrorMode, GameConfig, RunResult, run
from .lexicon import DEFAULT_VOCAB_SIZE, Vocabulary
from .metrics import TimeSeries, sampling_schedule
from .topology import Graph, NetworkSpec, generate

DEFAULT_SEED = 20160101

STANDARD_ERROR_RATES = (
    (0.0,)
    + tuple(round(0.001 * i, 3) for i in range(1, 10))
    + tuple(round(0.01 * i, 2) for i in range(1, 10))
    + tuple(round(0.1 * i, 1) for i in range(1, 6))
)

INCREMENT_BINS = (-0.2, -0.1, 0.0, 0.1, 0.2)
INCREMENT_BIN_LABELS = ("(-inf,-0.2)", "[-0.2,-0.1)", "[-0.1,0)", "[0,0.1)", "[0.1,0.2)", "[0.2,+inf)")

# stream tags keep graph and game seeds apart
_GRAPH, _GAME = 1, 2


def rate_key(rho: float) -> int:
    """Integer key of an error rate for seed derivation (1e-8 resolution)."""
    return int(round(rho * 1e8))


@dataclass(frozen=True)
class ExperimentPlan:
    network: NetworkSpec
    error_rates: tuple = STANDARD_ERROR_RATES
    trials: int = 20
    error_mode: ErrorMode = ErrorMode.LEARNING
    base_seed: int = DEFAULT_SEED
    max_iterations: int = DEFAULT_MAX_ITERATIONS
    vocab_size: int = DEFAULT_VOCAB_SIZE
    threshold_step: float = 0.0001
    threshold_limit: float = 0.5
    # threshold scan: keep one graph per trial instead of a fresh graph per attempt
    fix_graph: bool = False
    force: bool = False

    def __post_init__(self):
        object.__setattr__(self, "error_mode", ErrorMode(self.error_mode))
        object.__setattr__(self, "error_rates", tuple(float(r) for r in self.error_rates))
        if self.trials < 1:
            raise ValueError("trials must be positive")
        if self.threshold_step <= 0:
            raise ValueError("threshold_step must be positive")

    def config(self, rho: float) -> GameConfig:
        return GameConfig(error_rate=rho, vocab=Vocabulary(self.vocab_size), error_mode=self.error_mode,
                          max_iterations=self.max_iterations, force=self.force)

    def graph_seed(self, trial: int, attempt: int = 0) -> int:
        return derive_seed(self.base_seed, _GRAPH, trial, attempt)

    def game_seed(self, rho: float, trial: int, attempt: int = 0) -> int:
        return derive_seed(self.base_seed, _GAME, rate_key(rho), trial, attempt)


Engine = Callable[[ExperimentPlan, float, int, int], RunResult]


@lru_cache(maxsize=32)
def _graph(network: NetworkSpec, seed: int) -> Graph:
    return generate(network, np.random.default_rng(seed))


def simulate(plan: ExperimentPlan, rho: float, trial: int, attempt: int = 0) -> RunResult:
    """Default engine: one seeded game on a seeded graph instance.

    Sweeps use attempt 0, so every error rate of a trial shares that trial's
    graph. The threshold scan passes its attempt index, which draws a fresh
    graph per attempt unless ``plan.fix_graph`` is set.
    """
    graph_attempt = 0 if plan.fix_graph else attempt
    g = _graph(plan.network, plan.graph_seed(trial, graph_attempt))
    return run(g, plan.config(rho), RandomStream(plan.game_seed(rho, trial, attempt)))


# ---------------------------------------------------------------------------
# trial aggregation


@dataclass
class TrialAggregate:
    error_rate: float
    results: list
    series: Optional[TimeSeries] = None

    @property
    def trials(self) -> int:
        return len(self.results)

    @property
    def converged_trials(self) -> int:
        return sum(r.converged for r in self.results)

    def _times(self) -> np.ndarray:
        return np.array([r.convergence_iteration for r in self.results if r.converged], dtype=float)

    @property
    def mean_convergence_iterations(self) -> Optional[float]:
        t = self._times()
        return float(t.mean()) if t.size else None

    @property
    def std_convergence_iterations(self) -> Optional[float]:
        t = self._times()
        return float(t.std()) if t.size else None

    @property
    def mean_max_distinct_words(self) -> float:
        return float(np.mean([r.max_distinct_words for r in self.results]))

    @property
    def capped_trials(self) -> list:
        return [i for i, r in enumerate(self.results) if not r.converged]


def average_series(results: Sequence[RunResult], n: int, schedule: np.ndarray) -> Optional[TimeSeries]:
    """Pointwise mean of trial trajectories on a shared schedule.

    Trials that converged before a sample point contribute the consensus
    values there (n words, 1 distinct word, success rate 1).
    """
    if not results or any(r.series is None for r in results):
        return None
    end = max(r.iterations for r in results)
    points = schedule[schedule <= end]
    total = np.zeros(points.size)
    distinct = np.zeros(points.size)
    rate = np.zeros(points.size)
    for r in results:
        s = r.series
        idx = np.searchsorted(s.iteration, points)
        idx_c = np.minimum(idx, len(s) - 1)
        have = (idx < len(s)) & (s.iteration[idx_c] == points)
        if not np.all(have | (points > r.iterations)):
            raise ValueError("trial series does not cover the shared schedule")
        total += np.where(have, s.total_words[idx_c], n)
        distinct += np.where(have, s.distinct_words[idx_c], 1)
        rate += np.where(have, s.success_rate[idx_c], 1.0)
    k = len(results)
    return TimeSeries(points.copy(), total / k, distinct / k, rate / k)


def run_trials(plan: ExperimentPlan, rho: float, engine: Engine = simulate,
               order: Optional[Sequence[int]] = None, workers: int = 1) -> TrialAggregate:
    """Run ``plan.trials`` independent games at error rate ``rho``.

    ``order`` permutes execution order; results are always merged by trial
    index. Trials hitting the iteration cap are reported, never dropped.
    """
    order = list(range(plan.trials)) if order is None else list(order)
    if sorted(order) != list(range(plan.trials)):
        raise ValueError("order must be a permutation of the trial indices")
    results: list = [None] * plan.trials
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            for t, res in zip(order, pool.map(lambda t: engine(plan, rho, t, 0), order)):
                results[t] = res
    else:
        for t in order:
            results[t] = engine(plan, rho, t, 0)
    series = average_series(results, plan.network.n, sampling_schedule(plan.max_iterations))
    return TrialAggregate(float(rho), results, series)


@dataclass
class SweepResult:
    plan: ExperimentPlan
    points: list = field(default_factory=list)

    def point(self, rho: float) -> TrialAggregate:
        for p in self.points:
            if math.isclose(p.error_rate, rho, abs_tol=1e-12):
                return p
        raise KeyError(rho)

    @property
    def error_rates(self) -> list:
        return [p.error_rate for p in self.points]


def sweep(plan: ExperimentPlan, engine: Engine = simulate, workers: int = 1) -> SweepResult:
    return SweepResult(plan, [run_trials(plan, rho, engine, workers=workers) for rho in plan.error_rates])


# ---------------------------------------------------------------------------
# convergence-time increments


@dataclass
class IncrementTable:
    error_rates: list
    increments: list  # None marks a censored cell (no trial converged)
    baseline: float

    @property
    def positives(self) -> int:
        return sum(1 for r, x in zip(self.error_rates, self.increments) if r != 0 and x is not None and x > 0)

    @property
    def negatives(self) -> int:
        return sum(1 for r, x in zip(self.error_rates, self.increments) if r != 0 and x is not None and x < 0)

    @property
    def summary(self) -> str:
        return f"{self.positives}+/{self.negatives}-"

    def non_baseline(self) -> list:
        return [x for r, x in zip(self.error_rates, self.increments) if r != 0 and x is not None]


def increment_table(result: SweepResult) -> IncrementTable:
    """Relative change of mean convergence time against the error-free baseline."""
    try:
        base = result.point(0.0).mean_convergence_iterations
    except KeyError:
        raise ValueError("sweep has no error_rate = 0 baseline") from None
    if base is None:
        raise ValueError("baseline (error_rate = 0) never converged; increments are undefined")
    rates, incs = [], []
    for p in result.points:
        t = p.mean_convergence_iterations
        rates.append(p.error_rate)
        incs.append(0.0 if p.error_rate == 0 else (None if t is None else t / base - 1.0))
    return IncrementTable(rates, incs, base)


def interval_histogram(increments: Sequence[float]) -> tuple:
    """Counts over (-inf,-0.2), [-0.2,-0.1), [-0.1,0), [0,0.1), [0.1,0.2), [0.2,+inf)."""
    x = np.asarray(list(increments), dtype=float)
    bins = np.searchsorted(np.asarray(INCREMENT_BINS), x, side="right")
    return tuple(int(c) for c in np.bincount(bins, minlength=len(INCREMENT_BINS) + 1))


# ---------------------------------------------------------------------------
# linearity of the memory cost


@dataclass(frozen=True)
class LinearFit:
    slope: float
    intercept: float
    r_squared: float


def linear_fit(points) -> LinearFit:
    """Ordinary least squares of y on x; r^2 of a constant response is 0."""
    pts = np.asarray(list(points), dtype=float).reshape(-1, 2)
    if len(pts) < 3:
        raise ValueError("linear fit needs at least 3 points")
    x, y = pts[:, 0], pts[:, 1]
    sxx = np.sum((x - x.mean()) ** 2)
    if sxx == 0:
        raise ValueError("degenerate fit: all x values are equal")
    slope = float(np.sum((x - x.mean()) * (y - y.mean())) / sxx)
    intercept = float(y.mean() - slope * x.mean())
    syy = np.sum((y - y.mean()) ** 2)
    if syy == 0:
        return LinearFit(slope, intercept, 0.0)
    ss_res = np.sum((y - (slope * x + intercept)) ** 2)
    return LinearFit(slope, intercept, float(min(1.0, max(0.0, 1.0 - ss_res / syy))))


def memory_linearity(result: SweepResult, min_rate: float = 0.1) -> LinearFit:
    pts = [(p.error_rate, p.mean_max_distinct_words) for p in result.points if p.error_rate >= min_rate - 1e-12]
    return linear_fit(pts)


# ---------------------------------------------------------------------------
# threshold scan


@dataclass(frozen=True)
class BoxSummary:
    median: float
    q1: float
    q3: float
    whisker_low: float
    whisker_high: float
    outliers: tuple

    def as_dict(self) -> dict:
        return dataclasses.asdict(self) | {"outliers": list(self.outliers)}


def box_summary(values: Sequence[float]) -> Optional[BoxSummary]:
    """Median, quartiles, whiskers at the extreme non-outliers, 1.5 IQR outliers."""
    v = np.sort(np.asarray(list(values), dtype=float))
    if v.size == 0:
        return None
    q1, med, q3 = (float(q) for q in np.percentile(v, [25, 50, 75]))
    iqr = q3 - q1
    lo, hi = q1 - 1.5 * iqr, q3 + 1.5 * iqr
    inside = v[(v >= lo) & (v <= hi)]
    outliers = tuple(float(x) for x in v[(v < lo) | (v > hi)])
    return BoxSummary(med, q1, q3, float(inside.min()), float(inside.max()), outliers)


@dataclass
class ThresholdResult:
    thresholds: list  # per trial; None if censored
    step: float
    attempts: list = field(default_factory=list)

    @property
    def censored(self) -> list:
        return [i for i, t in enumerate(self.thresholds) if t is None]

    @property
    def summary(self) -> Optional[BoxSummary]:
        return box_summary([t for t in self.thresholds if t is not None])


def threshold_trial(plan: ExperimentPlan, trial: int, engine: Engine = simulate):
    """Raise the error rate by ``plan.threshold_step`` from 0 until a run fails
    to converge; returns (threshold or None if censored, attempts made)."""
    k = 0
    while True:
        rho = round(k * plan.threshold_step, 10)
        if rho > plan.threshold_limit + 1e-12:
            return None, k
        if not engine(plan, rho, trial, k).converged:
            return rho, k + 1
        k += 1


def find_threshold(plan: ExperimentPlan, engine: Engine = simulate, workers: int = 1) -> ThresholdResult:
    if plan.error_mode is not ErrorMode.PERSISTENT:
        raise ValueError("the threshold scan is defined for persistent error mode")
    trials = range(plan.trials)
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            found = list(pool.map(lambda t: threshold_trial(plan, t, engine), trials))
    else:
        found = [threshold_trial(plan, t, engine) for t in trials]
    return ThresholdResult([f[0] for f in found], plan.threshold_step, [f[1] for f in found])
