"""Pool normalization, the V_AI summation, [0,100] scaling, and ranking.

The index formula raw = 100 * sum_j (x_j - L_j)/(1 - mu_j) presumes
unit-range metrics, so each metric is min-max normalized over the pooled
image set of the run first; L_j and mu_j are the minimum and mean of the
normalized values. A cohort's raw score is the mean of its members' raw
scores, and the final [0,100] score is min-max over the run's cohorts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegeneratePoolError, DegenerateScalingError, EmptyInputError
from .metrics import METRIC_FIELDS, MetricVector
from .stats import pop_mean

_N_METRICS = len(METRIC_FIELDS)


@dataclass(frozen=True)
class Cohort:
    """Named image group: one generator's outputs, or the real set."""

    name: str
    members: tuple  # of (image_id, MetricVector)

    def __post_init__(self):
        members = tuple(self.members)
        if not members:
            raise ValueError(f"cohort {self.name!r} has no members")
        ids = [m[0] for m in members]
        if len(set(ids)) != len(ids):
            dupes = sorted({i for i in ids if ids.count(i) > 1})
            raise ValueError(f"duplicate image ids in cohort {self.name!r}: {dupes}")
        object.__setattr__(self, "members", members)


@dataclass(frozen=True)
class CohortStats:
    """Per-metric pool stats on the normalized scale: L_j, max, mu_j."""

    pool_min: tuple
    pool_max: tuple
    pool_mean: tuple

    def __post_init__(self):
        for name in ("pool_min", "pool_max", "pool_mean"):
            t = tuple(float(x) for x in getattr(self, name))
            if len(t) != _N_METRICS:
                raise ValueError(f"{name} must have {_N_METRICS} entries")
            object.__setattr__(self, name, t)
        for mn, mu, mx in zip(self.pool_min, self.pool_mean, self.pool_max):
            if not (mn <= mu <= mx):
                raise ValueError(f"need pool_min <= pool_mean <= pool_max, got "
                                 f"{mn} / {mu} / {mx}")


@dataclass(frozen=True)
class VaiScore:
    cohort: str
    raw: float
    scaled: float | None  # None when scaling was degenerate
    rank: int
    tied: bool = False

    def __post_init__(self):
        if self.scaled is not None and not 0.0 <= self.scaled <= 100.0:
            raise ValueError(f"scaled score out of [0, 100]: {self.scaled!r}")


def pool_normalize(cohorts, lbp_bins: int = 256):
    """Min-max normalize each metric over the pooled image set.

    Texture entropy is divided by log2(lbp_bins) first (the only metric not
    already in unit range). A metric that is constant across the pool maps
    to 0.5 everywhere. Returns (normalized cohorts, CohortStats), with the
    stats computed on the normalized values.
    """
    cohorts = list(cohorts)
    if not cohorts or not any(c.members for c in cohorts):
        raise EmptyInputError("empty cohort pool")

    log_bins = math.log2(lbp_bins)
    pooled = np.array(
        [m[1].as_tuple() for c in cohorts for m in c.members], dtype=np.float64
    )
    pooled[:, 0] /= log_bins

    mins = pooled.min(axis=0)
    maxs = pooled.max(axis=0)
    norm = np.empty_like(pooled)
    for j in range(_N_METRICS):
        if mins[j] == maxs[j]:
            norm[:, j] = 0.5
        else:
            norm[:, j] = (pooled[:, j] - mins[j]) / (maxs[j] - mins[j])

    stats = CohortStats(
        pool_min=tuple(norm[:, j].min() for j in range(_N_METRICS)),
        pool_max=tuple(norm[:, j].max() for j in range(_N_METRICS)),
        pool_mean=tuple(pop_mean(norm[:, j]) for j in range(_N_METRICS)),
    )

    out = []
    row = 0
    for c in cohorts:
        members = []
        for image_id, _ in c.members:
            members.append((image_id, MetricVector(*(float(x) for x in norm[row]))))
            row += 1
        out.append(Cohort(name=c.name, members=tuple(members)))
    return out, stats


def vai_raw(v: MetricVector, stats: CohortStats, weights=None) -> float:
    """100 * sum_j w_j * (x_j - L_j) / (1 - mu_j) on normalized metrics."""
    if weights is None:
        weights = (1.0,) * _N_METRICS
    weights = tuple(float(w) for w in weights)
    if len(weights) != _N_METRICS:
        raise ValueError(f"need {_N_METRICS} weights, got {len(weights)}")
    x = v.as_tuple()
    terms = []
    for j, name in enumerate(METRIC_FIELDS):
        mu = stats.pool_mean[j]
        if mu >= 1.0 - 1e-9:
            raise DegeneratePoolError(
                f"pool mean of {name} is {mu}; the V_AI denominator 1 - mu "
                f"degenerates"
            )
        terms.append(weights[j] * (x[j] - stats.pool_min[j]) / (1.0 - mu))
    return 100.0 * math.fsum(terms)


def cohort_raw(cohort: Cohort, stats: CohortStats, weights=None) -> float:
    """Mean of member raw scores, reduced in sorted-image-id order.

    fsum makes the reduction exact, so member order cannot leak into the
    result; sorting pins the id->score pairing deterministically anyway.
    """
    members = sorted(cohort.members, key=lambda m: m[0])
    raws = [vai_raw(v, stats, weights) for _, v in members]
    return math.fsum(raws) / len(raws)


def scale_scores(raws: dict) -> list:
    """Min-max raw cohort scores to [0,100] and rank them descending.

    Ties share the lower (better) rank and are flagged; display order is
    descending score with name as the tiebreak. Fewer than two cohorts or
    all-equal raws leave min-max undefined and raise DegenerateScalingError.
    """
    if len(raws) < 2:
        raise DegenerateScalingError(
            f"scaling needs >= 2 cohorts, got {len(raws)}"
        )
    lo = min(raws.values())
    hi = max(raws.values())
    if lo == hi:
        raise DegenerateScalingError(f"all cohort raw scores equal ({lo})")

    span = hi - lo
    # divide before multiplying: (r - lo) / span is exactly 1.0 at the max
    # and exactly 0.0 at the min, so the endpoints land on 100 and 0
    scaled = {name: 100.0 * ((r - lo) / span) for name, r in raws.items()}
    out = []
    values = list(scaled.values())
    for name in sorted(scaled, key=lambda n: (-scaled[n], n)):
        s = scaled[name]
        rank = 1 + sum(1 for v in values if v > s)
        tied = values.count(s) > 1
        out.append(
            VaiScore(cohort=name, raw=raws[name], scaled=s, rank=rank, tied=tied)
        )
    return out
