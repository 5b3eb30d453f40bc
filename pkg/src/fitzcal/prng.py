"""Pinned deterministic PRNG primitives (splitmix64).

Everything random in this package flows through these routines so that
identical seeds give identical bytes on every platform. The generator is
splitmix64: state advances by the 64-bit golden-ratio constant and each
output is the 30/27/31-shift multiply mix of the new state.
"""

from __future__ import annotations

import math

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


def mix64(z: int) -> int:
    """The splitmix64 output-mixing function."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * _MIX1) & MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & MASK64
    return z ^ (z >> 31)


class SplitMix64:
    """Sequential splitmix64 stream."""

    def __init__(self, seed: int):
        self._state = seed & MASK64

    def next_u64(self) -> int:
        self._state = (self._state + GOLDEN) & MASK64
        return mix64(self._state)

    def next_below(self, bound: int) -> int:
        """Unbiased integer in [0, bound) via rejection sampling."""
        if bound <= 0:
            raise ValueError("bound must be positive")
        limit = (1 << 64) - ((1 << 64) % bound)
        while True:
            r = self.next_u64()
            if r < limit:
                return r % bound

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates, high index down to 1."""
        for i in range(len(items) - 1, 0, -1):
            j = self.next_below(i + 1)
            items[i], items[j] = items[j], items[i]


def stratum_stream(seed: int, stratum_index: int) -> SplitMix64:
    """Per-stratum stream: state seeded with mix64(seed + stratum_index)."""
    return SplitMix64(mix64((seed + stratum_index) & MASK64))


class GaussianStream:
    """Standard normals via Box-Muller over splitmix64 uniforms.

    Each pair of outputs consumes two u64 draws r1, r2; with
    u = ((r >> 11) + 1) * 2**-53 in (0, 1], the pair is
    sqrt(-2 ln u1) * (cos, sin)(2 pi u2). Draws are consumed strictly
    sequentially; ``block`` evaluates the same sequence vectorized.
    """

    def __init__(self, seed: int):
        self._state = seed & MASK64
        self._index = 0  # u64 draws consumed so far

    def block(self, n: int) -> np.ndarray:
        """The next n normals from the stream."""
        pairs = (n + 1) // 2
        idx = np.arange(self._index + 1, self._index + 2 * pairs + 1, dtype=np.uint64)
        self._index += 2 * pairs
        with np.errstate(over="ignore"):
            z = np.uint64(self._state) + idx * np.uint64(GOLDEN)
            z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
            z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
            r = z ^ (z >> np.uint64(31))
        u = ((r >> np.uint64(11)).astype(np.float64) + 1.0) * 2.0 ** -53
        u1, u2 = u[0::2], u[1::2]
        radius = np.sqrt(-2.0 * np.log(u1))
        angle = 2.0 * math.pi * u2
        out = np.empty(2 * pairs, dtype=np.float64)
        out[0::2] = radius * np.cos(angle)
        out[1::2] = radius * np.sin(angle)
        return out[:n]
