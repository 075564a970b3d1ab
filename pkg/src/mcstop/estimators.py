"""Point estimates, asymptotic-variance estimates, and interval half-widths."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .model import BatchSchedule, ScalarTrace, TourSet, cbm_schedule, fixed_schedule
from .quantiles import normal_quantile, student_t_quantile


@dataclass(frozen=True)
class VarianceEstimate:
    """A point estimate with its asymptotic-variance estimate.

    df is the t degrees of freedom for interval construction, or None when
    the matching limit law is standard normal.  sample_count is the number
    of consumed points (batch means) or tours (regenerative).
    """

    point: float
    sigma2: float
    df: Optional[int]
    sample_count: int

    def __post_init__(self):
        if self.sigma2 < 0:
            raise ValueError("variance estimate must be nonnegative")
        if self.sample_count < 2:
            raise ValueError("sample count must be at least 2")


def batch_means(trace: ScalarTrace, schedule: BatchSchedule) -> VarianceEstimate:
    """Batch-means variance estimate over the first a*b points of the trace."""
    a, b = schedule.a, schedule.b
    if a < 2:
        raise ValueError("insufficient batches")
    m = a * b
    if m > trace.n:
        raise ValueError("insufficient sample for the batch schedule")
    # the estimator consumes the first a*b observations; any remainder is ignored
    seg = trace.values[:m].reshape(a, b)
    means = seg.mean(axis=1)
    point = float(seg.mean())
    sigma2 = float(b / (a - 1) * np.sum((means - point) ** 2))
    return VarianceEstimate(point=point, sigma2=sigma2, df=a - 1, sample_count=m)


def rs_variance(tours: TourSet) -> VarianceEstimate:
    """Regenerative variance estimate from completed tours."""
    R = tours.R
    if R < 2:
        raise ValueError("insufficient tours")
    lengths = tours.lengths.astype(float)
    sums = tours.sums
    total_length = float(lengths.sum())
    point = float(sums.sum()) / total_length
    n_bar = total_length / R
    resid = sums - point * lengths
    sigma2 = float(np.dot(resid, resid)) / (R * n_bar * n_bar)
    return VarianceEstimate(point=point, sigma2=sigma2, df=None, sample_count=R)


def half_width(est: VarianceEstimate, delta: float, run_length: int) -> float:
    """Half-width of the 1-delta confidence interval at the given sample size."""
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    if run_length < 1:
        raise ValueError("run length must be positive")
    p = 1.0 - delta / 2.0
    q = normal_quantile(p) if est.df is None else student_t_quantile(est.df, p)
    return q * math.sqrt(est.sigma2 / run_length)


@dataclass(frozen=True)
class FixedBatchMeans:
    """Width-rule estimator choice: batch means with a fixed batch count."""

    a: int = 30

    def __post_init__(self):
        if self.a < 2:
            raise ValueError("batch count must be at least 2")

    @property
    def tag(self) -> str:
        return f"bm{self.a}"

    def evaluate(self, trace: ScalarTrace) -> VarianceEstimate:
        return batch_means(trace, fixed_schedule(trace.n, self.a))


@dataclass(frozen=True)
class ConsistentBatchMeans:
    """Width-rule estimator choice: batch means with batch size floor(n**theta)."""

    theta: float = 0.5

    def __post_init__(self):
        if not 0.0 < self.theta < 1.0:
            raise ValueError("theta must lie in (0, 1)")

    @property
    def tag(self) -> str:
        return f"cbm({self.theta:g})"

    def evaluate(self, trace: ScalarTrace) -> VarianceEstimate:
        return batch_means(trace, cbm_schedule(trace.n, self.theta))


@dataclass(frozen=True)
class Regenerative:
    """Width-rule estimator choice: tour-based variance with a normal interval."""

    @property
    def tag(self) -> str:
        return "rs"

    def evaluate(self, tours: TourSet) -> VarianceEstimate:
        return rs_variance(tours)
