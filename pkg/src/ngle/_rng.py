"""Seedable xoshiro256** stream shared by Python code and numba kernels.

The generator state is a length-4 ``uint64`` array so it can be handed to
jitted code directly. Every bounded draw consumes exactly one 64-bit output,
which keeps replays stable regardless of the values involved.
"""

from __future__ import annotations

import numpy as np
from numba import njit

_U11 = np.uint64(11)
_INV53 = 1.0 / 9007199254740992.0


@njit(inline="always")
def _rotl(x, k):
    return (x << np.uint64(k)) | (x >> np.uint64(64 - k))


@njit(inline="always")
def next_u64(s):
    result = _rotl(s[1] * np.uint64(5), 7) * np.uint64(9)
    t = s[1] << np.uint64(17)
    s[2] ^= s[0]
    s[3] ^= s[1]
    s[1] ^= s[2]
    s[0] ^= s[3]
    s[2] ^= t
    s[3] = _rotl(s[3], 45)
    return result


@njit(inline="always")
def next_double(s):
    """Uniform float in [0, 1) with 53 bits of resolution."""
    return np.float64(next_u64(s) >> _U11) * _INV53


@njit(inline="always")
def next_below(s, k):
    """Uniform integer in [0, k) from a single draw (multiply-floor)."""
    return np.int64(next_double(s) * k)


def derive_seed(base_seed: int, *keys: int) -> int:
    """Pure 64-bit seed derivation from a base seed and integer keys."""
    ss = np.random.SeedSequence(int(base_seed), spawn_key=tuple(int(k) for k in keys))
    return int(ss.generate_state(1, np.uint64)[0])


class RandomStream:
    """Explicit random stream; ``state`` is shared by reference with kernels."""

    def __init__(self, seed: int = 0):
        self.seed = int(seed)
        state = np.random.SeedSequence(self.seed).generate_state(4, np.uint64)
        if not state.any():
            state[0] = np.uint64(1)
        self.state = state

    def random(self) -> float:
        return float(next_double(self.state))

    def integers(self, k: int) -> int:
        return int(next_below(self.state, k))

    def copy(self) -> "RandomStream":
        other = RandomStream.__new__(RandomStream)
        other.seed = self.seed
        other.state = self.state.copy()
        return other

    def __repr__(self) -> str:
        return f"RandomStream(seed={self.seed})"
