"""Deterministic random streams shared by the python and numba layers.

One global 64-bit seed is split into independent replica streams with
splitmix64; each stream is a xoshiro256** generator.  The same state
layout (uint64[4]) is consumed by the numba kernels, so a python-side
run and a jitted run with the same (seed, stream) draw identical values.
"""

from __future__ import annotations

import numpy as np
from numba import njit

_U64 = np.uint64
_GOLDEN = _U64(0x9E3779B97F4A7C15)


@njit(cache=True, inline="always")
def _splitmix64(x):
    x = (x + _U64(0x9E3779B97F4A7C15)) & _U64(0xFFFFFFFFFFFFFFFF)
    z = x
    z = ((z ^ (z >> _U64(30))) * _U64(0xBF58476D1CE4E5B9)) & _U64(0xFFFFFFFFFFFFFFFF)
    z = ((z ^ (z >> _U64(27))) * _U64(0x94D049BB133111EB)) & _U64(0xFFFFFFFFFFFFFFFF)
    return z ^ (z >> _U64(31)), x


@njit(cache=True)
def seed_state(seed, stream):
    """xoshiro256** state for replica `stream` of the global `seed`."""
    s = np.empty(4, dtype=np.uint64)
    x = (_U64(seed) ^ (_U64(stream) * _GOLDEN)) & _U64(0xFFFFFFFFFFFFFFFF)
    for i in range(4):
        s[i], x = _splitmix64(x)
    return s


@njit(cache=True, inline="always")
def _rotl(x, k):
    return ((x << _U64(k)) | (x >> _U64(64 - k))) & _U64(0xFFFFFFFFFFFFFFFF)


@njit(cache=True, inline="always")
def next_u64(s):
    result = (_rotl((s[1] * _U64(5)) & _U64(0xFFFFFFFFFFFFFFFF), 7) * _U64(9)) & _U64(
        0xFFFFFFFFFFFFFFFF
    )
    t = (s[1] << _U64(17)) & _U64(0xFFFFFFFFFFFFFFFF)
    s[2] ^= s[0]
    s[3] ^= s[1]
    s[1] ^= s[2]
    s[0] ^= s[3]
    s[2] ^= t
    s[3] = _rotl(s[3], 45)
    return result


@njit(cache=True, inline="always")
def next_float(s):
    """Uniform in [0, 1) with 53 random bits."""
    return (next_u64(s) >> _U64(11)) * (1.0 / 9007199254740992.0)


@njit(cache=True, inline="always")
def next_below(s, n):
    """Uniform integer in [0, n).  Bias is O(n / 2^53), negligible here."""
    return int(next_float(s) * n)


class RandomStream:
    """Python-side view of a seeded stream, for cold paths.

    Hot loops use the jitted helpers on the raw state array directly.
    """

    def __init__(self, seed: int, stream: int = 0):
        self.seed = int(seed)
        self.stream = int(stream)
        self.state = seed_state(self.seed, self.stream)

    def u64(self) -> int:
        return int(next_u64(self.state))

    def random(self) -> float:
        return float(next_float(self.state))

    def below(self, n: int) -> int:
        return int(next_below(self.state, n))

    def spawn(self, k: int) -> "RandomStream":
        """Independent child stream; documented replica splitting rule."""
        return RandomStream(self.seed, self.stream * 0x10001 + 1 + k)
