"""Counter-based SplitMix64 streams and seed derivation.

Every random draw in the package goes through :class:`Stream` so that runs are
reproducible bit-for-bit and the streams can be regenerated in any language:

    mix(z):  z ^= z >> 30; z *= 0xBF58476D1CE4E5B9
             z ^= z >> 27; z *= 0x94D049BB133111EB
             z ^= z >> 31                                   (all mod 2**64)

    draw k (k = 1, 2, ...) of a stream with seed s = mix(s + k * 0x9E3779B97F4A7C15)
    uniform float in [0, 1)                          = (draw >> 11) * 2**-53

    derive_seed(s, k1, k2, ...): s <- mix(s + (k_j + 1) * 0x9E3779B97F4A7C15) for each key
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB


def mix64(z: int) -> int:
    z &= MASK64
    z = ((z ^ (z >> 30)) * _M1) & MASK64
    z = ((z ^ (z >> 27)) * _M2) & MASK64
    return z ^ (z >> 31)


def _mix64_array(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_M1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_M2)
    return z ^ (z >> np.uint64(31))


def derive_seed(master: int, *keys: int) -> int:
    """Substream seed for the key path ``keys`` under ``master``."""
    s = int(master) & MASK64
    for k in keys:
        s = mix64(s + ((int(k) + 1) * GOLDEN))
    return s


class Stream:
    """A SplitMix64 stream; draws advance an internal counter."""

    def __init__(self, seed: int):
        self.seed = int(seed) & MASK64
        self.counter = 0

    def spawn(self, *keys: int) -> "Stream":
        return Stream(derive_seed(self.seed, *keys))

    def bits(self, n: int) -> np.ndarray:
        idx = np.arange(self.counter + 1, self.counter + n + 1, dtype=np.uint64)
        self.counter += n
        return _mix64_array(np.uint64(self.seed) + idx * np.uint64(GOLDEN))

    def random(self, size=None):
        shape = () if size is None else np.atleast_1d(size)
        n = int(np.prod(shape)) if size is not None else 1
        u = (self.bits(n) >> np.uint64(11)).astype(np.float64) * 2.0**-53
        return float(u[0]) if size is None else u.reshape(tuple(shape))

    def uniform(self, low: float, high: float, size=None):
        return low + (high - low) * self.random(size)

    def integers(self, high: int, size=None):
        """Integers in [0, high) as floor(u * high)."""
        u = self.random(size)
        if size is None:
            return min(int(u * high), high - 1)
        return np.minimum((u * high).astype(np.int64), high - 1)

    def permutation(self, n: int) -> np.ndarray:
        return np.argsort(self.random(n), kind="stable")

    def categorical(self, probs, size: int) -> np.ndarray:
        """Inverse-CDF draws of indices distributed as ``probs``."""
        cdf = np.cumsum(np.asarray(probs, dtype=float))
        idx = np.searchsorted(cdf, self.random(size) * cdf[-1], side="right")
        return np.minimum(idx, len(cdf) - 1)
