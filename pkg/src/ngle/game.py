"""Naming game with learning errors: the per-iteration rule and full runs.

One iteration picks a speaker uniformly, then a hearer uniformly among the
speaker's neighbours. An error-prone hearer receives, with probability
``error_rate``, a word drawn uniformly from the rest of the vocabulary
instead of the spoken one. Error-prone means "never spoken yet" in
learning mode and "always" in persistent mode.

The rule is implemented once, as a numba function (``_step``); the Python
:func:`step` and the batch :func:`run` both call it, so single-step
inspection and production runs follow identical code and random draws.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from numba import njit

from ._rng import RandomStream, next_below, next_double
from .lexicon import Vocabulary, _draw_uniform, _draw_uniform_excluding
from .metrics import (DISTINCT, PEAK, TOTAL, BLOCK, Sampler, TimeSeries, WordCensus,
                      census_add, census_remove, sample_due)
from .topology import Graph

DEFAULT_MAX_ITERATIONS = 10_000_000
MAX_ERROR_RATE = 0.5

# layout of GameState.stats
ITER, MAX_MEM, BLOCK_HITS, LAST_BLOCK_HITS, INEXPERIENCED = range(5)

# kernel exit codes
_CONVERGED, _CAPPED, _GROW = 0, 1, 2


class ErrorMode(str, enum.Enum):
    LEARNING = "learning"
    PERSISTENT = "persistent"


class OutcomeKind(enum.IntEnum):
    FAILURE_NO_ERROR = 0
    CONSENSUS = 1
    FAILURE_WITH_ERROR = 2
    PSEUDO_CONSENSUS = 3

    @property
    def is_success(self) -> bool:
        return self in (OutcomeKind.CONSENSUS, OutcomeKind.PSEUDO_CONSENSUS)

    @property
    def is_error(self) -> bool:
        return self in (OutcomeKind.FAILURE_WITH_ERROR, OutcomeKind.PSEUDO_CONSENSUS)

    @property
    def label(self) -> str:
        return _LABELS[self]


_LABELS = {
    OutcomeKind.FAILURE_NO_ERROR: "FailureNoError",
    OutcomeKind.CONSENSUS: "Consensus",
    OutcomeKind.FAILURE_WITH_ERROR: "FailureWithError",
    OutcomeKind.PSEUDO_CONSENSUS: "PseudoConsensus",
}


@dataclass(frozen=True)
class Outcome:
    kind: OutcomeKind
    speaker: int
    hearer: int
    spoken: int
    received: int


@dataclass(frozen=True)
class Agent:
    memory: tuple
    has_spoken: bool


@dataclass(frozen=True)
class GameConfig:
    """Parameters of one game.

    ``error_rate`` is capped at 0.5 unless ``force`` is set, in which case
    any probability up to 1 is accepted.
    """

    error_rate: float = 0.0
    vocab: Vocabulary = field(default_factory=Vocabulary)
    error_mode: ErrorMode = ErrorMode.LEARNING
    max_iterations: int = DEFAULT_MAX_ITERATIONS
    force: bool = False

    def __post_init__(self):
        if isinstance(self.vocab, int):
            object.__setattr__(self, "vocab", Vocabulary(self.vocab))
        object.__setattr__(self, "error_mode", ErrorMode(self.error_mode))
        upper = 1.0 if self.force else MAX_ERROR_RATE
        if not 0.0 <= self.error_rate <= upper:
            raise ValueError(f"error_rate must be in [0, {upper}], got {self.error_rate}")
        if self.max_iterations < 1:
            raise ValueError(f"max_iterations must be positive, got {self.max_iterations}")


class GameState:
    """Agent memories, experience flags and the incremental word census.

    Memories are rows of ``mem`` (first ``sizes[i]`` entries, insertion
    order); the row capacity grows on demand.
    """

    def __init__(self, n: int, vocab_size: int, capacity: int = 8):
        self.n = int(n)
        self.vocab_size = int(vocab_size)
        self.mem = np.zeros((self.n, capacity), dtype=np.int32)
        self.sizes = np.zeros(self.n, dtype=np.int64)
        self.experienced = np.zeros(self.n, dtype=np.uint8)
        self.stats = np.zeros(5, dtype=np.int64)
        self.stats[INEXPERIENCED] = self.n
        self.census = WordCensus(self.vocab_size)

    @classmethod
    def from_memories(cls, memories: Sequence[Sequence[int]], vocab_size: int,
                      has_spoken: Optional[Sequence[bool]] = None) -> "GameState":
        """State with the given memories, e.g. to replay a hand-built scenario."""
        n = len(memories)
        longest = max((len(m) for m in memories), default=0)
        state = cls(n, vocab_size, capacity=max(8, 2 * longest + 2))
        for i, m in enumerate(memories):
            if len(set(m)) != len(m):
                raise ValueError(f"memory of agent {i} contains duplicates")
            if any(not 0 <= w < vocab_size for w in m):
                raise ValueError(f"memory of agent {i} holds a word outside the vocabulary")
            state.mem[i, :len(m)] = m
            state.sizes[i] = len(m)
        if has_spoken is not None:
            state.experienced[:] = np.asarray(has_spoken, dtype=bool)
        state.stats[MAX_MEM] = longest
        state.stats[INEXPERIENCED] = n - int(state.experienced.sum())
        state.census = WordCensus.recount(memories, vocab_size)
        return state

    @property
    def iteration(self) -> int:
        return int(self.stats[ITER])

    @property
    def capacity(self) -> int:
        return self.mem.shape[1]

    def memory(self, i: int) -> tuple:
        return tuple(int(w) for w in self.mem[i, :self.sizes[i]])

    def memories(self) -> list:
        return [self.memory(i) for i in range(self.n)]

    @property
    def agents(self) -> list:
        return [Agent(self.memory(i), bool(self.experienced[i])) for i in range(self.n)]

    @property
    def total_words(self) -> int:
        return self.census.total

    @property
    def distinct_words(self) -> int:
        return self.census.distinct

    @property
    def success_rate(self) -> float:
        """Success rate of the most recently completed block of 10 iterations."""
        return self.stats[LAST_BLOCK_HITS] / BLOCK

    def ensure_capacity(self) -> None:
        # one step adds at most one word to any single memory
        if self.stats[MAX_MEM] + 1 >= self.capacity:
            grown = np.zeros((self.n, 2 * self.capacity), dtype=self.mem.dtype)
            grown[:, :self.capacity] = self.mem
            self.mem = grown

    def copy(self) -> "GameState":
        other = GameState.__new__(GameState)
        other.n, other.vocab_size = self.n, self.vocab_size
        other.mem = self.mem.copy()
        other.sizes = self.sizes.copy()
        other.experienced = self.experienced.copy()
        other.stats = self.stats.copy()
        other.census = self.census.copy()
        return other


def init_state(g: Graph, vocab_size: int = 10_000) -> GameState:
    """All memories empty, nobody has spoken yet, iteration 0."""
    if isinstance(vocab_size, Vocabulary):
        vocab_size = vocab_size.size
    return GameState(g.n, vocab_size)


def is_converged(state: GameState) -> bool:
    """Every agent holds exactly one word and it is the same word for all."""
    return state.total_words == state.n and state.distinct_words == 1


# ---------------------------------------------------------------------------
# kernels


@njit(inline="always")
def _collapse(mem, sizes, mult, tally, agent, keep):
    for t in range(sizes[agent]):
        w = mem[agent, t]
        if w != keep:
            census_remove(mult, tally, w)
    mem[agent, 0] = keep
    sizes[agent] = 1


@njit(cache=True, nogil=True)
def _step(indptr, indices, mem, sizes, experienced, stats, mult, tally,
          rng, rho, persistent, vocab_size, out):
    n = sizes.shape[0]
    s = next_below(rng, n)
    if sizes[s] == 0:
        w = _draw_uniform(rng, vocab_size)
        mem[s, 0] = w
        sizes[s] = 1
        census_add(mult, tally, w)
    else:
        w = np.int64(mem[s, next_below(rng, sizes[s])])

    lo = indptr[s]
    h = np.int64(indices[lo + next_below(rng, indptr[s + 1] - lo)])

    r = w
    if persistent or experienced[h] == 0:
        if next_double(rng) < rho:
            r = _draw_uniform_excluding(rng, vocab_size, w)

    found = False
    for t in range(sizes[h]):
        if mem[h, t] == r:
            found = True
            break

    if found:
        _collapse(mem, sizes, mult, tally, s, w)
        _collapse(mem, sizes, mult, tally, h, r)
        kind = 1 if r == w else 3
        stats[BLOCK_HITS] += 1
    else:
        k = sizes[h]
        mem[h, k] = r
        sizes[h] = k + 1
        census_add(mult, tally, r)
        if k + 1 > stats[MAX_MEM]:
            stats[MAX_MEM] = k + 1
        kind = 0 if r == w else 2

    if experienced[s] == 0:
        experienced[s] = 1
        stats[INEXPERIENCED] -= 1
    stats[ITER] += 1
    if stats[ITER] % 10 == 0:
        stats[LAST_BLOCK_HITS] = stats[BLOCK_HITS]
        stats[BLOCK_HITS] = 0

    out[0] = s
    out[1] = h
    out[2] = w
    out[3] = r
    return kind


@njit(cache=True, nogil=True)
def _run(indptr, indices, mem, sizes, experienced, stats, mult, tally,
         rng, rho, persistent, vocab_size, max_iter, counts_by_kind,
         schedule, cursor, sample_counts, sample_rates):
    n = sizes.shape[0]
    cap = mem.shape[1]
    out = np.empty(4, np.int64)
    while True:
        sample_due(schedule, cursor, sample_counts, sample_rates, stats[ITER],
                   tally[TOTAL], tally[DISTINCT], stats[LAST_BLOCK_HITS] / 10.0)
        if tally[TOTAL] == n and tally[DISTINCT] == 1:
            return _CONVERGED
        if stats[ITER] >= max_iter:
            return _CAPPED
        if stats[MAX_MEM] + 1 >= cap:
            return _GROW
        kind = _step(indptr, indices, mem, sizes, experienced, stats, mult, tally,
                     rng, rho, persistent, vocab_size, out)
        counts_by_kind[kind] += 1


def _check(state: GameState, g: Graph, cfg: GameConfig) -> None:
    if state.n != g.n:
        raise ValueError(f"state has {state.n} agents but graph has {g.n} nodes")
    if state.vocab_size != cfg.vocab.size:
        raise ValueError("state and config disagree on the vocabulary size")
    if g.n < 2:
        raise ValueError("the game needs at least two agents")


def step(state: GameState, g: Graph, cfg: GameConfig, rng: RandomStream) -> Outcome:
    """Play exactly one iteration in place and report what happened.

    The graph must have no isolated nodes (generated graphs are connected).
    """
    _check(state, g, cfg)
    state.ensure_capacity()
    out = np.empty(4, np.int64)
    kind = _step(g.indptr, g.indices, state.mem, state.sizes, state.experienced, state.stats,
                 state.census.multiplicity, state.census.tally, rng.state,
                 float(cfg.error_rate), cfg.error_mode is ErrorMode.PERSISTENT,
                 np.int64(cfg.vocab.size), out)
    return Outcome(OutcomeKind(kind), int(out[0]), int(out[1]), int(out[2]), int(out[3]))


# ---------------------------------------------------------------------------
# full runs


@dataclass
class RunResult:
    converged: bool
    convergence_iteration: Optional[int]
    iterations: int
    max_distinct_words: int
    final_total_words: int = 0
    final_distinct_words: int = 0
    outcome_counts: dict = field(default_factory=dict)
    series: Optional[TimeSeries] = None

    def summary(self) -> dict:
        return {
            "converged": self.converged,
            "convergence_iteration": self.convergence_iteration,
            "iterations": self.iterations,
            "max_distinct_words": self.max_distinct_words,
            "final_total_words": self.final_total_words,
            "final_distinct_words": self.final_distinct_words,
            "outcome_counts": dict(self.outcome_counts),
        }


def run(g: Graph, cfg: GameConfig, rng: RandomStream, sampler: Optional[Sampler] = None,
        state: Optional[GameState] = None) -> RunResult:
    """Iterate until every agent shares one word or ``cfg.max_iterations`` is hit.

    Non-convergence is a normal result (``converged=False``), not an error.
    """
    if state is None:
        state = init_state(g, cfg.vocab.size)
    _check(state, g, cfg)
    if sampler is None:
        sampler = Sampler.default(cfg.max_iterations)
    counts = np.zeros(4, dtype=np.int64)
    persistent = cfg.error_mode is ErrorMode.PERSISTENT
    while True:
        code = _run(g.indptr, g.indices, state.mem, state.sizes, state.experienced, state.stats,
                    state.census.multiplicity, state.census.tally, rng.state,
                    float(cfg.error_rate), persistent, np.int64(cfg.vocab.size),
                    np.int64(cfg.max_iterations), counts,
                    sampler.schedule, sampler.cursor, sampler.counts, sampler.rates)
        if code != _GROW:
            break
        state.ensure_capacity()

    converged = code == _CONVERGED
    sampler.finish(state.iteration, state.total_words, state.distinct_words, state.success_rate)
    return RunResult(
        converged=converged,
        convergence_iteration=state.iteration if converged else None,
        iterations=state.iteration,
        max_distinct_words=state.census.peak,
        final_total_words=state.total_words,
        final_distinct_words=state.distinct_words,
        outcome_counts={k.label: int(counts[k]) for k in OutcomeKind},
        series=sampler.series(),
    )
