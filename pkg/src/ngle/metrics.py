"""Observables over a running game.

The word census (total words, distinct words, running peak of distinct
words) is updated incrementally by jitted helpers that the game kernel calls
on every memory insertion and deletion; :class:`WordCensus` wraps the same
helpers for use from Python.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from numba import njit

# layout of the census tally array
TOTAL, DISTINCT, PEAK = 0, 1, 2

BLOCK = 10


@njit(inline="always")
def census_add(mult, tally, w):
    if mult[w] == 0:
        tally[DISTINCT] += 1
        if tally[DISTINCT] > tally[PEAK]:
            tally[PEAK] = tally[DISTINCT]
    mult[w] += 1
    tally[TOTAL] += 1


@njit(inline="always")
def census_remove(mult, tally, w):
    mult[w] -= 1
    tally[TOTAL] -= 1
    if mult[w] == 0:
        tally[DISTINCT] -= 1


@njit(cache=True)
def _apply(mult, tally, removed, added):
    for w in removed:
        census_remove(mult, tally, w)
    for w in added:
        census_add(mult, tally, w)


class WordCensus:
    """Multiset of words held across all agents.

    ``multiplicity[w]`` is the number of agents holding ``w``; ``peak`` is the
    largest ``distinct`` ever observed, updated on every insertion.
    """

    def __init__(self, vocab_size: int):
        self.multiplicity = np.zeros(vocab_size, dtype=np.int64)
        self.tally = np.zeros(3, dtype=np.int64)

    @classmethod
    def recount(cls, memories: Iterable[Iterable[int]], vocab_size: int) -> "WordCensus":
        """From-scratch census of a collection of memories."""
        c = cls(vocab_size)
        for mem in memories:
            for w in mem:
                c.multiplicity[w] += 1
        c.tally[TOTAL] = c.multiplicity.sum()
        c.tally[DISTINCT] = np.count_nonzero(c.multiplicity)
        c.tally[PEAK] = c.tally[DISTINCT]
        return c

    @property
    def total(self) -> int:
        return int(self.tally[TOTAL])

    @property
    def distinct(self) -> int:
        return int(self.tally[DISTINCT])

    @property
    def peak(self) -> int:
        return int(self.tally[PEAK])

    def apply(self, removed: Sequence[int] = (), added: Sequence[int] = ()) -> "WordCensus":
        """Apply one step's memory changes: removals first, then additions."""
        _apply(self.multiplicity, self.tally,
               np.asarray(removed, dtype=np.int64), np.asarray(added, dtype=np.int64))
        return self

    def same_counts(self, other: "WordCensus") -> bool:
        return (self.total == other.total and self.distinct == other.distinct
                and np.array_equal(self.multiplicity, other.multiplicity))

    def copy(self) -> "WordCensus":
        c = WordCensus.__new__(WordCensus)
        c.multiplicity = self.multiplicity.copy()
        c.tally = self.tally.copy()
        return c

    def __repr__(self) -> str:
        return f"WordCensus(total={self.total}, distinct={self.distinct}, peak={self.peak})"


def success_rate_block(outcomes: Sequence) -> float:
    """Fraction of (pseudo) consensus outcomes in one block of 10 iterations."""
    if len(outcomes) != BLOCK:
        raise ValueError(f"a success-rate block holds exactly {BLOCK} outcomes, got {len(outcomes)}")
    from .game import Outcome, OutcomeKind

    kinds = [o.kind if isinstance(o, Outcome) else OutcomeKind(o) for o in outcomes]
    return sum(k.is_success for k in kinds) / BLOCK


def max_distinct(run) -> int:
    """Largest number of distinct words held at any iteration of ``run``."""
    return int(run.max_distinct_words)


# ---------------------------------------------------------------------------
# sampling


def sampling_schedule(max_iterations: int, dense: int = 1000, ratio: float = 1.02) -> np.ndarray:
    """Iterations at which the time series is recorded.

    Every iteration from 0 to ``dense``, then a geometric tail with the given
    ratio (rounded up, de-duplicated) up to ``max_iterations``.
    """
    head = np.arange(0, min(dense, max_iterations) + 1, dtype=np.int64)
    tail = []
    x = float(dense)
    last = int(head[-1])
    while last < max_iterations:
        x *= ratio
        nxt = min(int(math.ceil(x)), max_iterations)
        if nxt > last:
            tail.append(nxt)
            last = nxt
    return np.concatenate([head, np.asarray(tail, dtype=np.int64)])


@dataclass
class TimeSeries:
    iteration: np.ndarray
    total_words: np.ndarray
    distinct_words: np.ndarray
    success_rate: np.ndarray

    HEADER = ("iteration", "total_words", "distinct_words", "success_rate")

    def __len__(self) -> int:
        return int(self.iteration.size)

    def rows(self):
        for i, t, d, r in zip(self.iteration, self.total_words, self.distinct_words, self.success_rate):
            yield int(i), t, d, float(r)


class Sampler:
    """Records (iteration, total, distinct, success rate) at scheduled iterations.

    The game kernel writes into the preallocated buffers; ``cursor`` holds
    the next schedule index and the number of rows written.
    """

    def __init__(self, schedule: np.ndarray):
        schedule = np.asarray(schedule, dtype=np.int64)
        if schedule.size and np.any(np.diff(schedule) <= 0):
            raise ValueError("sampling schedule must be strictly increasing")
        self.schedule = schedule
        cap = schedule.size + 1
        self.counts = np.zeros((cap, 3), dtype=np.int64)
        self.rates = np.zeros(cap, dtype=np.float64)
        self.cursor = np.zeros(2, dtype=np.int64)

    @classmethod
    def default(cls, max_iterations: int) -> "Sampler":
        return cls(sampling_schedule(max_iterations))

    def finish(self, iteration: int, total: int, distinct: int, rate: float) -> None:
        """Append the terminal row if it was not on the schedule."""
        k = int(self.cursor[1])
        if k and self.counts[k - 1, 0] == iteration:
            return
        self.counts[k] = (iteration, total, distinct)
        self.rates[k] = rate
        self.cursor[1] = k + 1

    def series(self) -> TimeSeries:
        k = int(self.cursor[1])
        c = self.counts[:k]
        return TimeSeries(c[:, 0].copy(), c[:, 1].copy(), c[:, 2].copy(), self.rates[:k].copy())


@njit(inline="always")
def sample_due(schedule, cursor, counts, rates, iteration, total, distinct, rate):
    i = cursor[0]
    while i < schedule.size and schedule[i] <= iteration:
        if schedule[i] == iteration:
            k = cursor[1]
            counts[k, 0] = iteration
            counts[k, 1] = total
            counts[k, 2] = distinct
            rates[k] = rate
            cursor[1] = k + 1
        i += 1
    cursor[0] = i
