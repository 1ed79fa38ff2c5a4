"""Seeded xoshiro256** streams.

The generator is the reference xoshiro256** of Blackman and Vigna, seeded by
expanding the 64-bit seed with SplitMix64.  Doubles are built from the top 53
bits, ``(x >> 11) * 2**-53``, so every value lies in [0, 1).  All arithmetic is
on unsigned 64-bit integers, which makes the sequence bit-exact everywhere.

The state lives in a ``uint64[4]`` array so that compiled event loops can
advance the same stream the Python side draws from.
"""

from __future__ import annotations

import numpy as np
from numba import njit

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_INV_2_53 = 1.0 / 9007199254740992.0


def splitmix64(x: int) -> tuple[int, int]:
    """Advance a SplitMix64 counter; return ``(new_counter, output)``."""
    x = (x + _GOLDEN) & _MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x, z ^ (z >> 31)


def seed_state(seed: int) -> np.ndarray:
    if not 0 <= seed <= _MASK64:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
    words = []
    x = seed
    for _ in range(4):
        x, out = splitmix64(x)
        words.append(out)
    if not any(words):
        words[0] = 1
    return np.array(words, dtype=np.uint64)


def derive_seed(seed: int, index: int) -> int:
    """Seed of substream ``index`` of a master ``seed``.

    Two SplitMix64 rounds keyed on the index keep sibling streams
    decorrelated even for consecutive indices.
    """
    if index < 0:
        raise ValueError("substream index must be non-negative")
    _, key = splitmix64(index & _MASK64)
    _, out = splitmix64(seed ^ key)
    return out


@njit(cache=True, inline="always")
def _rotl(x, k):
    return (x << np.uint64(k)) | (x >> np.uint64(64 - k))


@njit(cache=True)
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


@njit(cache=True)
def next_double(s):
    return float(next_u64(s) >> np.uint64(11)) * _INV_2_53


@njit(cache=True)
def _fill(s, n):
    out = np.empty(n)
    for i in range(n):
        out[i] = next_double(s)
    return out


@njit(cache=True)
def _fill_u64(s, n):
    out = np.empty(n, dtype=np.uint64)
    for i in range(n):
        out[i] = next_u64(s)
    return out


class RngStream:
    """A single-owner pseudo-random stream.

    Two streams built from the same seed yield identical sequences.  Parallel
    work must use :meth:`spawn` to obtain independent substreams.
    """

    def __init__(self, seed: int):
        self.seed = int(seed)
        self.state = seed_state(self.seed)

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed})"

    def random(self) -> float:
        return next_double(self.state)

    def uniform(self, low: float, high: float) -> float:
        return low + (high - low) * next_double(self.state)

    def random_array(self, n: int) -> np.ndarray:
        return _fill(self.state, int(n))

    def integers_u64(self, n: int) -> np.ndarray:
        return _fill_u64(self.state, int(n))

    def spawn(self, index: int) -> RngStream:
        return RngStream(derive_seed(self.seed, index))
