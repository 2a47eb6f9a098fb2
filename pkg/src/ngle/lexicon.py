"""Fixed external vocabulary and uniform word draws."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from ._rng import RandomStream, next_below

DEFAULT_VOCAB_SIZE = 10_000


@dataclass(frozen=True)
class Vocabulary:
    """A vocabulary of ``size`` opaque integer words ``0 .. size-1``.

    ``size >= 2`` is required so that an erroneous word different from the
    transmitted one always exists. ``allow_singleton`` relaxes this for
    callers that only invent words.
    """

    size: int = DEFAULT_VOCAB_SIZE
    allow_singleton: bool = False

    def __post_init__(self):
        if int(self.size) != self.size:
            raise TypeError(f"vocabulary size must be an integer, got {self.size!r}")
        lower = 1 if self.allow_singleton else 2
        if self.size < lower:
            raise ValueError(f"vocabulary size must be >= {lower}, got {self.size}")

    def __contains__(self, word) -> bool:
        return 0 <= word < self.size


@njit(inline="always")
def _draw_uniform(state, size):
    return next_below(state, size)


@njit(inline="always")
def _draw_uniform_excluding(state, size, excluded):
    # one draw on [0, size-1), shifted past the excluded id
    w = next_below(state, size - 1)
    if w >= excluded:
        w += 1
    return w


def draw_uniform(vocab: Vocabulary, rng: RandomStream) -> int:
    """Draw a word uniformly from the whole vocabulary."""
    return int(_draw_uniform(rng.state, np.int64(vocab.size)))


def draw_uniform_excluding(vocab: Vocabulary, excluded: int, rng: RandomStream) -> int:
    """Draw a word uniformly from the vocabulary minus ``excluded``."""
    if vocab.size < 2:
        raise ValueError("no alternative word exists in a vocabulary of size < 2")
    if excluded not in vocab:
        raise ValueError(f"excluded word {excluded} outside vocabulary of size {vocab.size}")
    return int(_draw_uniform_excluding(rng.state, np.int64(vocab.size), np.int64(excluded)))
