"""Core value types shared by the estimators, samplers, and study harness."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional, Tuple

import numpy as np


def _as_float_array(values) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1:
        raise ValueError("trace values must be one-dimensional")
    if arr.size and not np.all(np.isfinite(arr)):
        raise ValueError("trace values must be finite")
    return arr


@dataclass(frozen=True)
class ScalarTrace:
    """Ordered scalar functional values g(X_0), g(X_1), ... from one chain run."""

    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _as_float_array(self.values))

    @property
    def n(self) -> int:
        return int(self.values.size)

    def __len__(self) -> int:
        return self.n


@dataclass(frozen=True)
class Tour:
    """One regeneration tour: number of steps and functional sum over them."""

    length: int
    sum: float

    def __post_init__(self):
        if self.length < 1:
            raise ValueError("tour length must be at least 1")
        if not math.isfinite(self.sum):
            raise ValueError("tour sum must be finite")


@dataclass(frozen=True)
class TourSet:
    """A sequence of completed tours stored as parallel arrays."""

    lengths: np.ndarray
    sums: np.ndarray

    def __post_init__(self):
        lengths = np.asarray(self.lengths, dtype=np.int64)
        sums = np.asarray(self.sums, dtype=float)
        if lengths.ndim != 1 or sums.ndim != 1 or lengths.size != sums.size:
            raise ValueError("lengths and sums must be 1-d arrays of equal size")
        if lengths.size and lengths.min() < 1:
            raise ValueError("tour length must be at least 1")
        if sums.size and not np.all(np.isfinite(sums)):
            raise ValueError("tour sums must be finite")
        object.__setattr__(self, "lengths", lengths)
        object.__setattr__(self, "sums", sums)

    @classmethod
    def from_tours(cls, tours: Iterable[Tour]) -> "TourSet":
        items = list(tours)
        return cls(
            lengths=np.array([t.length for t in items], dtype=np.int64),
            sums=np.array([t.sum for t in items], dtype=float),
        )

    @property
    def tours(self) -> Tuple[Tour, ...]:
        return tuple(Tour(int(n), float(s)) for n, s in zip(self.lengths, self.sums))

    @property
    def R(self) -> int:
        return int(self.lengths.size)

    @property
    def total_length(self) -> int:
        return int(self.lengths.sum())


@dataclass(frozen=True)
class BatchSchedule:
    """Batch count and size used to split a run of n = a*b points."""

    a: int
    b: int
    theta: Optional[float] = None

    def __post_init__(self):
        if self.a < 2:
            raise ValueError("batch count must be at least 2")
        if self.b < 1:
            raise ValueError("batch size must be at least 1")


def _floor_power(n: int, theta: float) -> int:
    x = n**theta
    b = int(x)
    # counteract float underestimates such as 1000**(1/3) = 9.999999999999998
    if (b + 1) - x < 1e-9 * (b + 1):
        b += 1
    return b


def cbm_schedule(n: int, theta: float) -> BatchSchedule:
    """Batch schedule with batch size growing as floor(n**theta)."""
    if not 0.0 < theta < 1.0:
        raise ValueError("theta must lie in (0, 1)")
    if n < 4:
        raise ValueError("insufficient sample for a batch schedule")
    b = _floor_power(n, theta)
    if b < 1:
        raise ValueError("insufficient sample for a batch schedule")
    a = n // b
    if a < 2:
        raise ValueError("insufficient sample for a batch schedule")
    return BatchSchedule(a=a, b=b, theta=theta)


def fixed_schedule(n: int, a: int) -> BatchSchedule:
    """Batch schedule with a fixed number of batches a and size floor(n/a)."""
    if a < 2:
        raise ValueError("batch count must be at least 2")
    if n < 2 * a:
        raise ValueError("insufficient sample for a batch schedule")
    return BatchSchedule(a=a, b=n // a)


@dataclass(frozen=True)
class StoppingConfig:
    """Target half-width, confidence level, and penalty settings for stopping."""

    epsilon: float
    delta: float
    n_star: int
    penalty_c: float = 0.0
    penalty_k: float = 1.0

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if not 0.0 < self.delta < 1.0:
            raise ValueError("delta must lie in (0, 1)")
        if self.n_star < 1:
            raise ValueError("minimum run length must be at least 1")
        if self.penalty_c < 0:
            raise ValueError("penalty coefficient must be nonnegative")
        if self.penalty_k <= 0.5:
            raise ValueError("penalty exponent must exceed 1/2")


@dataclass(frozen=True)
class FixedWidthReport:
    """Terminal state of one width-controlled run.

    run_length counts iterations of the underlying chain; for tour-based
    runs this is the total length of the completed tours and ``tours``
    holds their count.  sample_count is the denominator the interval used
    (consumed points a*b for batch means, tour count for tour-based runs).
    df is the t degrees of freedom, or None when the interval used a
    standard normal quantile.
    """

    estimate: float
    variance_estimate: float
    half_width: float
    run_length: int
    sample_count: int
    method: str
    stop_reason: str = "width"
    tours: Optional[int] = None
    df: Optional[int] = None
    seed: Optional[int] = None

    @property
    def converged(self) -> bool:
        return self.stop_reason == "width"
