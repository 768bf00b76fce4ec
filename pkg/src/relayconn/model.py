"""Obstacle field model: grain-size laws and reproducible Poisson sampling.

Obstacle centroids form a homogeneous Poisson point process and each obstacle
carries independent width and length marks drawn from finite, strictly
positive laws.  Sampling is confined to a window dilated just enough that no
obstacle able to touch the strip is ever missed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .geometry import AxisRect, Point, Strip, point_in_rect

__all__ = [
    "GrainDistribution",
    "BlockageModelParams",
    "LinkGeometry",
    "ObstacleField",
    "sampling_window",
    "sample_field",
    "is_indoor",
    "derive_seed",
]

_PROB_TOL = 1e-12
_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class GrainDistribution:
    """Law of one grain dimension, in meters.

    Three kinds are supported: a deterministic value, a uniform interval
    [lo, hi], and a finite pmf over positive values.  The support is always
    finite and strictly positive.
    """

    kind: str
    value: Optional[float] = None
    lo: Optional[float] = None
    hi: Optional[float] = None
    values: Optional[Tuple[float, ...]] = None
    probs: Optional[Tuple[float, ...]] = None

    def __post_init__(self):
        if self.kind == "deterministic":
            if self.value is None or not self.value > 0.0:
                raise ValueError("deterministic grain value must be positive")
        elif self.kind == "uniform":
            if self.lo is None or self.hi is None:
                raise ValueError("uniform grain law needs lo and hi")
            if not 0.0 < self.lo <= self.hi:
                raise ValueError("uniform grain law requires 0 < lo <= hi")
        elif self.kind == "pmf":
            if not self.values or self.probs is None or len(self.values) != len(self.probs):
                raise ValueError("pmf grain law needs matching values and probs")
            if min(self.values) <= 0.0:
                raise ValueError("pmf grain values must be positive")
            if min(self.probs) < 0.0:
                raise ValueError("pmf probabilities must be nonnegative")
            if abs(sum(self.probs) - 1.0) > _PROB_TOL:
                raise ValueError("pmf probabilities must sum to 1 within 1e-12")
        else:
            raise ValueError(f"unknown grain law kind {self.kind!r}")

    @classmethod
    def deterministic(cls, value: float) -> "GrainDistribution":
        return cls("deterministic", value=float(value))

    @classmethod
    def uniform(cls, lo: float, hi: float) -> "GrainDistribution":
        return cls("uniform", lo=float(lo), hi=float(hi))

    @classmethod
    def pmf(cls, values, probs) -> "GrainDistribution":
        return cls("pmf", values=tuple(float(v) for v in values),
                   probs=tuple(float(p) for p in probs))

    @property
    def support_min(self) -> float:
        if self.kind == "deterministic":
            return self.value
        if self.kind == "uniform":
            return self.lo
        return min(self.values)

    @property
    def support_max(self) -> float:
        if self.kind == "deterministic":
            return self.value
        if self.kind == "uniform":
            return self.hi
        return max(self.values)

    @property
    def mean(self) -> float:
        if self.kind == "deterministic":
            return self.value
        if self.kind == "uniform":
            return 0.5 * (self.lo + self.hi)
        return float(np.dot(self.values, self.probs))

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.kind == "deterministic":
            return np.full(size, self.value)
        if self.kind == "uniform":
            return rng.uniform(self.lo, self.hi, size)
        return rng.choice(np.array(self.values), size=size, p=np.array(self.probs))


@dataclass(frozen=True)
class BlockageModelParams:
    """Obstacle intensity (per m^2) plus the independent width/length laws."""

    lambda_o: float
    width_dist: GrainDistribution
    length_dist: GrainDistribution

    def __post_init__(self):
        if self.lambda_o < 0.0:
            raise ValueError("lambda_o must be nonnegative")


@dataclass(frozen=True)
class LinkGeometry:
    """Source-destination separation d and relaying route window kappa."""

    d: float
    kappa: float

    def __post_init__(self):
        if not self.d > 0.0:
            raise ValueError("d must be positive")
        if self.kappa < 0.0:
            raise ValueError("kappa must be nonnegative")

    def strip(self) -> Strip:
        return Strip(self.d, self.kappa)

    @property
    def source(self) -> Point:
        return Point(0.0, 0.0)

    @property
    def destination(self) -> Point:
        return Point(self.d, 0.0)


@dataclass(frozen=True)
class ObstacleField:
    """One realization of the obstacle field, reproducible from its seed."""

    obstacles: Tuple[AxisRect, ...]
    window: Tuple[float, float, float, float]
    seed: int


def sampling_window(link: LinkGeometry, params: BlockageModelParams):
    """Centroid window (x_lo, x_hi, y_lo, y_hi) that cannot miss the strip.

    The strip dilated by the largest possible half extents: an obstacle whose
    centroid falls outside this window cannot touch the closed strip, whatever
    its grain draw.
    """
    half_w = 0.5 * params.width_dist.support_max
    half_span = 0.5 * (link.kappa + params.length_dist.support_max)
    return (-half_w, link.d + half_w, -half_span, half_span)


def sample_field(params: BlockageModelParams, link: LinkGeometry, seed: int) -> ObstacleField:
    """Draw one obstacle field; identical (params, link, seed) give identical fields.

    The draw order is fixed (count, centroid x, centroid y, widths, lengths)
    so the realization is bit-reproducible.
    """
    window = sampling_window(link, params)
    x_lo, x_hi, y_lo, y_hi = window
    area = (x_hi - x_lo) * (y_hi - y_lo)
    rng = np.random.default_rng(seed)
    count = int(rng.poisson(params.lambda_o * area))
    cx = rng.uniform(x_lo, x_hi, count)
    cy = rng.uniform(y_lo, y_hi, count)
    widths = params.width_dist.sample(rng, count)
    lengths = params.length_dist.sample(rng, count)
    obstacles = tuple(
        AxisRect(float(x), float(y), 0.5 * float(w), 0.5 * float(l))
        for x, y, w, l in zip(cx, cy, widths, lengths))
    return ObstacleField(obstacles=obstacles, window=window, seed=seed)


def is_indoor(p: Point, field: ObstacleField) -> bool:
    """True when the point is covered by at least one (closed) obstacle."""
    return any(point_in_rect(p, r) for r in field.obstacles)


def derive_seed(seed: int, index: int) -> int:
    """Stable 64-bit stream seed for trial ``index`` (splitmix64 finalizer).

    Depends only on (seed, index), never on how trials are partitioned across
    workers, which keeps parallel Monte Carlo runs bit-reproducible.
    """
    z = (seed + (index + 1) * 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64
