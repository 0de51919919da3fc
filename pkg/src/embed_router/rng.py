"""Deterministic pseudorandom number generation.

Every stochastic step in the package (weight init, epoch shuffles, synthetic
data) draws from the xoshiro256** generator seeded through SplitMix64, so a
64-bit seed fully determines the bit pattern of every run on every platform.
The integer streams are implemented with explicitly masked 64-bit arithmetic
and do not depend on any interpreter or library RNG.
"""

from __future__ import annotations

import math

import numpy as np

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & _MASK64


def _splitmix64(state: int) -> tuple[int, int]:
    """Advance a SplitMix64 state once; returns (new_state, output)."""
    state = (state + _GOLDEN) & _MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return state, z ^ (z >> 31)


def derive_seed(seed: int, *parts: int) -> int:
    """Fold integer labels into a seed, giving independent sub-streams.

    Used to hand out distinct deterministic seeds per (role, dataset, ...) so
    that changing one label never correlates two streams.
    """
    state = seed & _MASK64
    for part in parts:
        state ^= part & _MASK64
        state, out = _splitmix64(state)
        state = out
    _, out = _splitmix64(state)
    return out


class Rng:
    """xoshiro256** stream; 256-bit state expanded from a 64-bit seed.

    Identical seeds produce bit-identical output streams.
    """

    def __init__(self, seed: int):
        self.seed = seed & _MASK64
        state = self.seed
        s = []
        for _ in range(4):
            state, out = _splitmix64(state)
            s.append(out)
        self._s = s
        self._spare_normal: float | None = None

    def next_u64(self) -> int:
        s0, s1, s2, s3 = self._s
        result = (_rotl((s1 * 5) & _MASK64, 7) * 9) & _MASK64
        t = (s1 << 17) & _MASK64
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = _rotl(s3, 45)
        self._s = [s0, s1, s2, s3]
        return result

    def random(self) -> float:
        """Uniform double in [0, 1) from the top 53 bits of one draw."""
        return (self.next_u64() >> 11) * 2.0**-53

    def uniform(self, low: float, high: float) -> float:
        return low + (high - low) * self.random()

    def uniform_array(self, n: int, low: float = 0.0, high: float = 1.0) -> np.ndarray:
        out = np.empty(n, dtype=np.float64)
        for i in range(n):
            out[i] = low + (high - low) * self.random()
        return out

    def normal(self, mu: float = 0.0, sigma: float = 1.0) -> float:
        """Gaussian draw via Box-Muller; consumes two uniforms per pair."""
        if self._spare_normal is not None:
            z = self._spare_normal
            self._spare_normal = None
        else:
            # u1 in (0, 1] so the log is finite
            u1 = ((self.next_u64() >> 11) + 1) * 2.0**-53
            u2 = (self.next_u64() >> 11) * 2.0**-53
            r = math.sqrt(-2.0 * math.log(u1))
            z = r * math.cos(2.0 * math.pi * u2)
            self._spare_normal = r * math.sin(2.0 * math.pi * u2)
        return mu + sigma * z

    def randbelow(self, n: int) -> int:
        """Unbiased integer in [0, n) by rejection sampling."""
        if n <= 0:
            raise ValueError("randbelow needs n >= 1")
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            x = self.next_u64()
            if x < limit:
                return x % n

    def shuffle(self, values) -> None:
        """In-place Fisher-Yates shuffle (accepts lists and 1-d arrays)."""
        for i in range(len(values) - 1, 0, -1):
            j = self.randbelow(i + 1)
            values[i], values[j] = values[j], values[i]


def splitmix64_block(seed: int, n: int, offset: int = 0) -> np.ndarray:
    """The first n outputs of SplitMix64(seed), computed vectorized.

    SplitMix64 advances its state by a fixed increment, so output i depends
    only on seed + (i+1) * increment; that makes the whole stream one
    elementwise pass over a counter array. Matches the sequential stream
    bit for bit.
    """
    idx = np.arange(offset + 1, offset + n + 1, dtype=np.uint64)
    z = np.uint64(seed & _MASK64) + idx * np.uint64(_GOLDEN)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


def uniform_block(seed: int, n: int, low: float = 0.0, high: float = 1.0) -> np.ndarray:
    """n uniform doubles in [low, high) from the SplitMix64 counter stream."""
    bits = splitmix64_block(seed, n)
    u = (bits >> np.uint64(11)).astype(np.float64) * 2.0**-53
    return low + (high - low) * u


def normal_block(seed: int, n: int, mu: float = 0.0, sigma: float = 1.0) -> np.ndarray:
    """n Gaussian doubles via Box-Muller on the SplitMix64 counter stream."""
    half = (n + 1) // 2
    bits = splitmix64_block(seed, 2 * half)
    u1 = ((bits[:half] >> np.uint64(11)).astype(np.float64) + 1.0) * 2.0**-53
    u2 = (bits[half:] >> np.uint64(11)).astype(np.float64) * 2.0**-53
    r = np.sqrt(-2.0 * np.log(u1))
    z = np.concatenate([r * np.cos(2.0 * np.pi * u2), r * np.sin(2.0 * np.pi * u2)])
    return mu + sigma * z[:n]
