"""Monte Carlo estimation of the true connectivity probability.

Each trial samples an obstacle field from a per-trial derived seed and runs
the exact free-space connectivity test.  Results are aggregated as integer
counts, so an estimate is bit-identical no matter how trials are partitioned
across worker processes.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

from scipy import stats

from .analytics import CONDITIONS
from .geometry import Point, Strip, _connected_edges, _rect_edges
from .model import (BlockageModelParams, LinkGeometry, derive_seed,
                    is_indoor, sample_field)

__all__ = [
    "MCEstimate",
    "NoAcceptedTrials",
    "wilson_interval",
    "estimate_connectivity",
    "estimate_p_los",
    "paired_kappa_comparison",
]


class NoAcceptedTrials(RuntimeError):
    """Every generated trial was rejected by the conditioning event."""


@dataclass(frozen=True)
class MCEstimate:
    """Binomial estimate with Wilson confidence interval.

    ``n_effective`` counts trials accepted by the conditioning event;
    ``n_total`` counts all generated trials.
    """

    mean: float
    std_err: float
    n_effective: int
    n_total: int
    ci_low: float
    ci_high: float
    seed: int

    def __post_init__(self):
        if not 0.0 <= self.ci_low <= self.mean <= self.ci_high <= 1.0:
            raise ValueError("interval must satisfy 0 <= ci_low <= mean <= ci_high <= 1")
        if self.std_err < 0.0 or self.n_effective > self.n_total:
            raise ValueError("inconsistent estimate fields")


def wilson_interval(successes: int, trials: int,
                    confidence: float = 0.95) -> Tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if trials <= 0:
        raise ValueError("trials must be positive")
    z = float(stats.norm.ppf(0.5 + 0.5 * confidence))
    phat = successes / trials
    z2 = z * z
    denom = 1.0 + z2 / trials
    center = (phat + z2 / (2.0 * trials)) / denom
    half = z * math.sqrt(phat * (1.0 - phat) / trials
                         + z2 / (4.0 * trials * trials)) / denom
    return max(0.0, center - half), min(1.0, center + half)


def _count_trials(params: BlockageModelParams, link_sample: LinkGeometry,
                  condition: str, kappas: Tuple[float, ...], seed: int,
                  start: int, stop: int) -> Tuple[int, Tuple[int, ...]]:
    """Accepted-trial and per-kappa success counts for trials [start, stop).

    Fields are sampled in the window of link_sample (whose kappa must be
    max(kappas) so no relevant obstacle is missed); each strip is then tested
    against the same field.  kappas must be ascending: a trial connected at
    some kappa is connected at every larger one, so the remaining tests are
    skipped.
    """
    d = link_sample.d
    src = Point(0.0, 0.0)
    dst = Point(d, 0.0)
    strips = [Strip(d, k) for k in kappas]
    accepted = 0
    successes = [0] * len(kappas)
    for i in range(start, stop):
        field = sample_field(params, link_sample, derive_seed(seed, i))
        if condition != "unconditional":
            if is_indoor(src, field):
                continue
            if condition == "both_outdoor" and is_indoor(dst, field):
                continue
        accepted += 1
        edges = _rect_edges(field.obstacles)
        connected = False
        for k, strip in enumerate(strips):
            if not connected:
                connected, _ = _connected_edges(strip, edges, src, dst)
            if connected:
                successes[k] += 1
    return accepted, tuple(successes)


def _aggregate_counts(params, link_sample, condition, kappas, n, seed,
                      workers) -> Tuple[int, List[int]]:
    if workers <= 1:
        accepted, successes = _count_trials(params, link_sample, condition,
                                            kappas, seed, 0, n)
        return accepted, list(successes)
    bounds = [(n * w) // workers for w in range(workers + 1)]
    jobs = [(params, link_sample, condition, kappas, seed, lo, hi)
            for lo, hi in zip(bounds[:-1], bounds[1:]) if lo < hi]
    accepted = 0
    successes = [0] * len(kappas)
    with ProcessPoolExecutor(max_workers=workers) as pool:
        for acc, succ in pool.map(_count_trials_star, jobs):
            accepted += acc
            successes = [a + b for a, b in zip(successes, succ)]
    return accepted, successes


def _count_trials_star(job):
    return _count_trials(*job)


def _make_estimate(successes: int, accepted: int, n_total: int, seed: int) -> MCEstimate:
    mean = successes / accepted
    std_err = math.sqrt(mean * (1.0 - mean) / accepted)
    ci_low, ci_high = wilson_interval(successes, accepted)
    return MCEstimate(mean=mean, std_err=std_err, n_effective=accepted,
                      n_total=n_total, ci_low=ci_low, ci_high=ci_high, seed=seed)


def estimate_connectivity(params: BlockageModelParams, link: LinkGeometry,
                          condition: str, n: int, seed: int,
                          workers: int = 1) -> MCEstimate:
    """Estimate the probability that source and destination are connected.

    Trial i samples its field from derive_seed(seed, i).  Under the outdoor
    conditions, trials whose field violates the condition are rejected (they
    count toward n_total only); raises NoAcceptedTrials when every trial is
    rejected, which is distinct from an estimate of zero.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if condition not in CONDITIONS:
        raise ValueError(f"condition must be one of {CONDITIONS}")
    accepted, successes = _aggregate_counts(params, link, condition,
                                            (link.kappa,), n, seed, workers)
    if accepted == 0:
        raise NoAcceptedTrials(
            f"no trial satisfied condition {condition!r} in {n} trials; "
            "increase n")
    return _make_estimate(successes[0], accepted, n, seed)


def estimate_p_los(params: BlockageModelParams, d: float, n: int, seed: int,
                   workers: int = 1) -> MCEstimate:
    """Estimate the line-of-sight probability over the direct segment.

    Identical, trial for trial, to estimate_connectivity on a zero-width
    window: a trial succeeds iff no sampled obstacle meets the closed
    source-destination segment.
    """
    return estimate_connectivity(params, LinkGeometry(d, 0.0),
                                 "unconditional", n, seed, workers)


def paired_kappa_comparison(params: BlockageModelParams, link_base: LinkGeometry,
                            kappa_list: Sequence[float], n: int, seed: int,
                            condition: str = "unconditional",
                            coupled: bool = True,
                            workers: int = 1) -> List[MCEstimate]:
    """Connectivity estimates for several window widths on common fields.

    With coupled=True (the default) each trial samples one field in the
    window of the largest kappa and tests every strip against it, so the
    per-trial indicators are monotone in kappa and differences between the
    estimates have low variance.  coupled=False runs an independent stream
    per kappa instead, as a variance sanity check.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if condition not in CONDITIONS:
        raise ValueError(f"condition must be one of {CONDITIONS}")
    kappas = [float(k) for k in kappa_list]
    if not kappas:
        raise ValueError("kappa_list must be nonempty")
    if any(b <= a for a, b in zip(kappas, kappas[1:])) or min(kappas) < 0.0:
        raise ValueError("kappa_list must be ascending and nonnegative")
    if not coupled:
        return [estimate_connectivity(params, LinkGeometry(link_base.d, k),
                                      condition, n, derive_seed(seed, idx),
                                      workers)
                for idx, k in enumerate(kappas)]
    link_sample = LinkGeometry(link_base.d, kappas[-1])
    accepted, successes = _aggregate_counts(params, link_sample, condition,
                                            tuple(kappas), n, seed, workers)
    if accepted == 0:
        raise NoAcceptedTrials(
            f"no trial satisfied condition {condition!r} in {n} trials; "
            "increase n")
    return [_make_estimate(s, accepted, n, seed) for s in successes]
