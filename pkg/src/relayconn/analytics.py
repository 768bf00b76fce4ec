"""Closed-form and quadrature evaluation of the connectivity upper bounds.

All bounds share one ingredient: the mean, over the grain laws, of the area
of centroid positions at which a single obstacle suffices to disconnect the
link.  Finite laws are summed exactly; uniform laws are integrated by an
adaptive trapezoid rule split at the kernel seams (w = d, l = kappa), where
the kernel is bilinear and the rule converges immediately.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

from .model import BlockageModelParams, GrainDistribution, LinkGeometry

__all__ = [
    "BoundResult",
    "QuadratureSpec",
    "QuadratureError",
    "area_kernel",
    "connectivity_upper_bound",
    "p_los",
    "fixed_size_upper_bound",
    "optimal_window_bound",
    "conditional_upper_bound",
    "CONDITIONS",
]

CONDITIONS = ("unconditional", "src_outdoor", "both_outdoor")


@dataclass(frozen=True)
class QuadratureSpec:
    """Absolute tolerance on the mean-area integral and a refinement cap."""

    abs_tol: float = 1e-10
    max_refinements: int = 30

    def __post_init__(self):
        if not self.abs_tol > 0.0:
            raise ValueError("abs_tol must be positive")
        if self.max_refinements < 0:
            raise ValueError("max_refinements must be nonnegative")


class QuadratureError(RuntimeError):
    """Adaptive quadrature failed to converge; carries the last two iterates."""

    def __init__(self, message: str, previous: Optional[float], last: Optional[float]):
        super().__init__(message)
        self.previous = previous
        self.last = last


@dataclass(frozen=True)
class BoundResult:
    """A probability bound value tagged with which bound produced it.

    ``clamped`` records that the raw expression exceeded 1 and was clamped;
    any value >= 1 is a vacuous upper bound, so clamping preserves meaning.
    """

    value: float
    kind: str
    clamped: bool = False

    def __post_init__(self):
        if not 0.0 <= self.value <= 1.0:
            raise ValueError("bound value must lie in [0, 1]")


def area_kernel(w: float, l: float, d: float, kappa: float) -> float:
    """Area of centroid positions where one w-by-l obstacle disconnects the link.

    Piecewise in (w, l): an obstacle at least as wide as the link (w >= d)
    blocks exactly when it covers an endpoint; a narrower one either covers
    an endpoint or, when l >= kappa, cuts the strip crosswise.
    """
    if w <= 0.0 or l <= 0.0 or d <= 0.0:
        raise ValueError("w, l, d must be positive")
    if kappa < 0.0:
        raise ValueError("kappa must be nonnegative")
    if w >= d:
        return (w + d) * l
    if l < kappa:
        return 2.0 * w * l
    return (l - kappa) * (d - w) + 2.0 * w * l


def _refine_trapezoid(g: Callable[[float], float], lo: float, hi: float,
                      abs_tol: float, max_refinements: int) -> float:
    """Trapezoid rule on one smooth panel, refined until successive halvings agree."""
    width = hi - lo
    estimate = 0.5 * width * (g(lo) + g(hi))
    previous = None
    intervals = 1
    for _ in range(max_refinements):
        intervals *= 2
        step = width / intervals
        midpoints = lo + step * np.arange(1, intervals, 2)
        previous = estimate
        estimate = 0.5 * estimate + step * sum(g(float(x)) for x in midpoints)
        if abs(estimate - previous) <= abs_tol:
            return estimate
    raise QuadratureError(
        f"quadrature did not converge to {abs_tol:g} within "
        f"{max_refinements} refinements", previous, estimate)


def _integrate(g: Callable[[float], float], lo: float, hi: float,
               seams: Sequence[float], abs_tol: float, max_refinements: int) -> float:
    """Integral of g over [lo, hi], split at interior seams so panels are smooth."""
    cuts = sorted({lo, hi} | {s for s in seams if lo < s < hi})
    panels = list(zip(cuts[:-1], cuts[1:]))
    tol = abs_tol / len(panels)
    return sum(_refine_trapezoid(g, a, b, tol, max_refinements) for a, b in panels)


def _expect(dist: GrainDistribution, g: Callable[[float], float],
            seams: Sequence[float], abs_tol: float, max_refinements: int) -> float:
    """E[g(X)] for a grain law; finite laws exactly, uniform by quadrature."""
    if dist.kind == "deterministic":
        return g(dist.value)
    if dist.kind == "pmf":
        return sum(p * g(v) for v, p in zip(dist.values, dist.probs))
    if dist.lo == dist.hi:
        return g(dist.lo)
    span = dist.hi - dist.lo
    return _integrate(g, dist.lo, dist.hi, seams, abs_tol * span, max_refinements) / span


def _mean_area(params: BlockageModelParams, d: float, kappa: float,
               kernel: Callable[[float, float], float], quad: QuadratureSpec) -> float:
    """Mean of kernel(w, l) over the independent width/length laws."""
    half = 0.5 * quad.abs_tol

    def by_width(w: float) -> float:
        return _expect(params.length_dist, lambda l: kernel(w, l),
                       seams=(kappa,), abs_tol=half,
                       max_refinements=quad.max_refinements)

    return _expect(params.width_dist, by_width, seams=(d,), abs_tol=half,
                   max_refinements=quad.max_refinements)


def _clamp_unit(raw: float) -> Tuple[float, bool]:
    if raw > 1.0:
        return 1.0, True
    return raw, False


def connectivity_upper_bound(params: BlockageModelParams, link: LinkGeometry,
                             quad: Optional[QuadratureSpec] = None) -> BoundResult:
    """Upper bound on the connection probability from single-obstacle blockage.

    exp(-lambda_o * E[area_kernel(W, L)]); exact at kappa == 0, where it
    coincides with the line-of-sight probability.
    """
    quad = quad or QuadratureSpec()
    mean_area = _mean_area(
        params, link.d, link.kappa,
        lambda w, l: area_kernel(w, l, link.d, link.kappa), quad)
    return BoundResult(math.exp(-params.lambda_o * mean_area), "unconditional")


def p_los(params: BlockageModelParams, d: float) -> BoundResult:
    """Probability that the direct source-destination segment meets no obstacle.

    Closed form in the grain means: exp(-lambda_o * E[L] * (d + E[W])).
    """
    if d <= 0.0:
        raise ValueError("d must be positive")
    value = math.exp(-params.lambda_o * params.length_dist.mean
                     * (d + params.width_dist.mean))
    return BoundResult(value, "p_los")


def fixed_size_upper_bound(lambda_o: float, w: float, l: float,
                           d: float, kappa: float) -> BoundResult:
    """Connectivity upper bound for obstacles of fixed width w and length l."""
    if lambda_o < 0.0:
        raise ValueError("lambda_o must be nonnegative")
    return BoundResult(math.exp(-lambda_o * area_kernel(w, l, d, kappa)),
                       "unconditional")


def optimal_window_bound(params: BlockageModelParams, d: float,
                         quad: Optional[QuadratureSpec] = None
                         ) -> Tuple[float, BoundResult]:
    """The window width maximizing the upper bound, with the attained bound.

    Widening the window helps until it reaches the largest possible obstacle
    length; beyond that the bound is constant.  Returns (kappa_star, bound)
    with kappa_star = length support max.
    """
    if d <= 0.0:
        raise ValueError("d must be positive")
    quad = quad or QuadratureSpec()
    kappa_star = params.length_dist.support_max
    half = 0.5 * quad.abs_tol

    def coverage(w: float) -> float:
        return (w + d) if w >= d else 2.0 * w

    mean_coverage = _expect(params.width_dist, coverage, seams=(d,),
                            abs_tol=half, max_refinements=quad.max_refinements)
    mean_area = _expect(params.length_dist, lambda l: l * mean_coverage,
                        seams=(), abs_tol=half,
                        max_refinements=quad.max_refinements)
    value = math.exp(-params.lambda_o * mean_area)
    return kappa_star, BoundResult(value, "optimal_window")


def conditional_upper_bound(params: BlockageModelParams, link: LinkGeometry,
                            condition: str,
                            quad: Optional[QuadratureSpec] = None) -> BoundResult:
    """Upper bound conditioned on the source (or both endpoints) being outdoor.

    Conditioning multiplies the unconditional bound by exp(lambda_o*E[W]*E[L])
    per outdoor endpoint; for both endpoints the kernel additionally drops the
    overlap term (w - d)*l when w >= d.  Values above 1 are clamped (flagged
    via BoundResult.clamped).
    """
    if condition not in CONDITIONS:
        raise ValueError(f"condition must be one of {CONDITIONS}")
    quad = quad or QuadratureSpec()
    d, kappa = link.d, link.kappa
    if condition == "unconditional":
        return connectivity_upper_bound(params, link, quad)
    grain_mean_area = params.width_dist.mean * params.length_dist.mean
    if condition == "src_outdoor":
        mean_area = _mean_area(params, d, kappa,
                               lambda w, l: area_kernel(w, l, d, kappa), quad)
        raw = math.exp(params.lambda_o * (grain_mean_area - mean_area))
    else:
        def kernel(w: float, l: float) -> float:
            a = area_kernel(w, l, d, kappa)
            return a + (w - d) * l if w >= d else a

        mean_area = _mean_area(params, d, kappa, kernel, quad)
        raw = math.exp(params.lambda_o * (2.0 * grain_mean_area - mean_area))
    value, clamped = _clamp_unit(raw)
    return BoundResult(value, condition, clamped)
