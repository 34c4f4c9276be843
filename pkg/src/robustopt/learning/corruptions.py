"""Black-box image corruptions and the four corruption sets.

Images are float arrays in [0, 1] of shape ``(H, W)`` or batches ``(N, H, W)``.
Background corruptions composite as ``max(pixel, pattern)`` so the digit
stays on top of the new background.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ..rng import Stream


class Corruption:
    randomized = False

    def apply(self, images: np.ndarray, stream: Stream | None = None) -> np.ndarray:
        raise NotImplementedError


def _as_batch(images):
    images = np.asarray(images, dtype=float)
    return (images[None], True) if images.ndim == 2 else (images, False)


def _check_level(level):
    if not 0 <= level <= 1:
        raise ValueError(f"background level {level} outside [0, 1]")


@dataclass(frozen=True)
class Identity(Corruption):
    def apply(self, images, stream=None):
        return np.array(images, dtype=float)


class _Background(Corruption):
    def pattern(self, h: int, w: int) -> np.ndarray:
        raise NotImplementedError

    def apply(self, images, stream=None):
        batch, single = _as_batch(images)
        out = np.maximum(batch, self.pattern(*batch.shape[1:]))
        return out[0] if single else out


@dataclass(frozen=True)
class TintBackground(_Background):
    level: float = 0.25

    def __post_init__(self):
        _check_level(self.level)

    def pattern(self, h, w):
        return np.full((h, w), self.level)


@dataclass(frozen=True)
class GradientBackground(_Background):
    """Linear ramp from 0 at the left edge to ``max_level`` at the right edge."""

    max_level: float = 0.5

    def __post_init__(self):
        _check_level(self.max_level)

    def pattern(self, h, w):
        ramp = np.linspace(0.0, self.max_level, w)
        return np.tile(ramp, (h, 1))


@dataclass(frozen=True)
class CheckerboardBackground(_Background):
    """Alternating ``block x block`` squares at 0 and ``level``; the top-left block is 0."""

    level: float = 0.5
    block: int = 4

    def __post_init__(self):
        _check_level(self.level)

    def pattern(self, h, w):
        r = np.arange(h)[:, None] // self.block
        c = np.arange(w)[None, :] // self.block
        return self.level * ((r + c) % 2)


@lru_cache(maxsize=None)
def area_resample_matrix(old: int, new: int) -> np.ndarray:
    """``(new, old)`` matrix averaging input pixels by their overlap with each output pixel."""
    scale = old / new
    m = np.zeros((new, old))
    for a in range(new):
        lo, hi = a * scale, (a + 1) * scale
        for b in range(int(math.floor(lo)), min(int(math.ceil(hi)), old)):
            m[a, b] = max(0.0, min(hi, b + 1) - max(lo, b))
    return m / scale


@dataclass(frozen=True)
class Shrink(Corruption):
    """Area-weighted downsampling to ``ceil(factor * dim)`` along the chosen axes, centered on a zero canvas."""

    factor: float = 0.75
    horizontal: bool = True
    vertical: bool = True

    def __post_init__(self):
        if not 0 < self.factor <= 1:
            raise ValueError("shrink factor must lie in (0, 1]")

    def apply(self, images, stream=None):
        batch, single = _as_batch(images)
        _, h, w = batch.shape
        nh = math.ceil(self.factor * h) if self.vertical else h
        nw = math.ceil(self.factor * w) if self.horizontal else w
        small = np.einsum("ij,njk,lk->nil", area_resample_matrix(h, nh), batch, area_resample_matrix(w, nw))
        out = np.zeros_like(batch)
        top, left = (h - nh) // 2, (w - nw) // 2
        out[:, top:top + nh, left:left + nw] = small
        out = np.clip(out, 0.0, 1.0)
        return out[0] if single else out


def ShrinkH(factor=0.75):
    return Shrink(factor, horizontal=True, vertical=False)


def ShrinkV(factor=0.75):
    return Shrink(factor, horizontal=False, vertical=True)


def ShrinkBoth(factor=0.75):
    return Shrink(factor, horizontal=True, vertical=True)


@dataclass(frozen=True)
class PixelNoise(Corruption):
    """I.i.d. ``Uniform[lo, hi]`` added to every pixel, then clamped to [0, 1]."""

    lo: float
    hi: float
    randomized = True

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError("need lo <= hi")

    def apply(self, images, stream=None):
        if stream is None:
            raise ValueError("PixelNoise needs a random stream")
        batch = np.asarray(images, dtype=float)
        noise = stream.uniform(self.lo, self.hi, batch.shape)
        return np.clip(batch + noise, 0.0, 1.0)


def apply_corruption(img, spec: Corruption, seed: int = 0) -> np.ndarray:
    return spec.apply(img, Stream(seed))


CORRUPTION_SETS = {
    "background": (Identity(), TintBackground(), GradientBackground(), CheckerboardBackground()),
    "shrink": (Identity(), ShrinkH(), ShrinkV(), ShrinkBoth()),
    "pixel": (Identity(), PixelNoise(-0.15, -0.05), PixelNoise(-0.05, 0.05), PixelNoise(0.05, 0.15)),
    "mixed": (Identity(), CheckerboardBackground(), ShrinkBoth(), PixelNoise(-0.15, -0.05)),
}


@dataclass(frozen=True)
class CorruptionSet:
    name: str
    specs: tuple

    def __post_init__(self):
        if len(self.specs) < 1:
            raise ValueError("corruption set must be nonempty")

    @property
    def m(self) -> int:
        return len(self.specs)

    @classmethod
    def named(cls, name: str) -> "CorruptionSet":
        try:
            return cls(name, CORRUPTION_SETS[name])
        except KeyError:
            raise ValueError(f"unknown corruption set {name!r}; choose from {sorted(CORRUPTION_SETS)}") from None
