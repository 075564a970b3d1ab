"""Fixed-width sequential stopping: penalty rule, checkpoints, controllers.

The simulation stops at the first checkpoint where interval half-width
plus a penalty term drops to the target width or below.  The penalty
keeps very short runs alive (epsilon while n has not reached the minimum
run length) and may add an optional c * n**-k decay term.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Optional, Union

import numpy as np

from .estimators import (
    ConsistentBatchMeans,
    FixedBatchMeans,
    Regenerative,
    VarianceEstimate,
    half_width,
)
from .model import FixedWidthReport, ScalarTrace, Tour
from .quantiles import normal_quantile

BatchEstimator = Union[FixedBatchMeans, ConsistentBatchMeans]


@dataclass(frozen=True)
class PenaltySpec:
    """Parameters of the stopping penalty p(n) = eps*I(n <= n_star) + c*n**-k."""

    epsilon: float
    n_star: int
    c: float = 0.0
    k: float = 1.0

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.n_star < 1:
            raise ValueError("minimum run length must be at least 1")
        if self.c < 0:
            raise ValueError("penalty coefficient must be nonnegative")
        if self.k <= 0.5:
            raise ValueError("penalty exponent must exceed 1/2")


def penalty(n: int, spec: PenaltySpec) -> float:
    """Penalty added to the half-width before comparing against epsilon."""
    if n < 1:
        raise ValueError("n must be positive")
    value = spec.epsilon if n <= spec.n_star else 0.0
    if spec.c:
        value += spec.c * n ** -spec.k
    return value


def should_stop(half_width_value: float, n: int, spec: PenaltySpec) -> bool:
    """True when half-width plus penalty has dropped to epsilon or below."""
    if half_width_value < 0:
        raise ValueError("half-width must be nonnegative")
    return half_width_value + penalty(n, spec) <= spec.epsilon


@dataclass(frozen=True)
class CheckpointPolicy:
    """Where the stopping rule is evaluated along the run.

    kind "interval" checks every ``interval`` samples, "tour" checks after
    every completed tour, "geometric" multiplies the checkpoint by
    ``growth`` each time starting from ``interval``.
    """

    kind: str = "interval"
    interval: int = 100
    growth: float = 1.5

    def __post_init__(self):
        if self.kind not in ("interval", "tour", "geometric"):
            raise ValueError("unknown checkpoint kind")
        if self.interval < 1:
            raise ValueError("checkpoint interval must be at least 1")
        if self.kind == "geometric" and self.growth <= 1.0:
            raise ValueError("growth factor must exceed 1")

    @classmethod
    def every(cls, k: int) -> "CheckpointPolicy":
        return cls(kind="interval", interval=k)

    @classmethod
    def per_tour(cls) -> "CheckpointPolicy":
        return cls(kind="tour", interval=1)

    @classmethod
    def geometric(cls, first: int, growth: float) -> "CheckpointPolicy":
        return cls(kind="geometric", interval=first, growth=growth)

    def checkpoints(self) -> Iterator[int]:
        if self.kind == "geometric":
            n = self.interval
            while True:
                yield n
                n = max(n + 1, int(n * self.growth))
        else:
            step = 1 if self.kind == "tour" else self.interval
            n = step
            while True:
                yield n
                n += step


class WidthTracker:
    """Resumable batch-means stopping rule over a growing sample prefix.

    offer() scans any checkpoints newly covered by the prefix and returns
    the terminal report at the first checkpoint where the rule fires,
    or None while the run must continue.  Checkpoints where the estimator
    cannot be formed yet are skipped.
    """

    def __init__(
        self,
        estimator: BatchEstimator,
        spec: PenaltySpec,
        delta: float,
        policy: Optional[CheckpointPolicy] = None,
        cap: int = 10_000_000,
        method: Optional[str] = None,
        seed: Optional[int] = None,
    ):
        if not 0.0 < delta < 1.0:
            raise ValueError("delta must lie in (0, 1)")
        if policy is not None and policy.kind == "tour":
            raise ValueError("per-tour checkpoints need a tour source")
        if cap < spec.n_star:
            raise ValueError("cap must be at least the minimum run length")
        self.estimator = estimator
        self.spec = spec
        self.delta = delta
        self.cap = cap
        self.method = method if method is not None else estimator.tag
        self.seed = seed
        self._checkpoints = (policy or CheckpointPolicy.every(100)).checkpoints()
        self._next = next(self._checkpoints)
        self.report: Optional[FixedWidthReport] = None

    def _evaluate(self, values: np.ndarray, n: int) -> Optional[VarianceEstimate]:
        try:
            return self.estimator.evaluate(ScalarTrace(values[:n]))
        except ValueError:
            return None

    def _report_at(
        self, est: VarianceEstimate, hw: float, n: int, reason: str
    ) -> FixedWidthReport:
        return FixedWidthReport(
            estimate=est.point,
            variance_estimate=est.sigma2,
            half_width=hw,
            run_length=n,
            sample_count=est.sample_count,
            method=self.method,
            stop_reason=reason,
            df=est.df,
            seed=self.seed,
        )

    def offer(self, values: np.ndarray) -> Optional[FixedWidthReport]:
        if self.report is not None:
            return self.report
        n_have = min(len(values), self.cap)
        while self._next <= n_have:
            n = self._next
            self._next = next(self._checkpoints)
            est = self._evaluate(values, n)
            if est is None:
                continue
            hw = half_width(est, self.delta, est.sample_count)
            if should_stop(hw, n, self.spec):
                self.report = self._report_at(est, hw, n, "width")
                return self.report
        if n_have >= self.cap:
            est = self._evaluate(values, self.cap)
            if est is None:
                self.report = FixedWidthReport(
                    estimate=float(np.mean(values[: self.cap])),
                    variance_estimate=math.nan,
                    half_width=math.nan,
                    run_length=self.cap,
                    sample_count=self.cap,
                    method=self.method,
                    stop_reason="cap",
                    df=None,
                    seed=self.seed,
                )
            else:
                hw = half_width(est, self.delta, est.sample_count)
                self.report = self._report_at(est, hw, self.cap, "cap")
        return self.report


class TourTracker:
    """Resumable tour-based stopping rule fed by completed tours.

    Keeps running accumulators so each checkpoint costs O(1); the closed
    form matches rs_variance exactly and the equivalence is pinned by a
    unit test.
    """

    def __init__(
        self,
        spec: PenaltySpec,
        delta: float,
        policy: Optional[CheckpointPolicy] = None,
        cap: int = 10_000_000,
        method: str = "rs",
        seed: Optional[int] = None,
    ):
        if not 0.0 < delta < 1.0:
            raise ValueError("delta must lie in (0, 1)")
        self.spec = spec
        self.delta = delta
        self.cap = cap
        self.method = method
        self.seed = seed
        self._z = normal_quantile(1.0 - delta / 2.0)
        policy = policy or CheckpointPolicy.per_tour()
        self._checkpoints = policy.checkpoints()
        self._next = next(self._checkpoints)
        self._R = 0
        self._tau = 0
        self._sum_n = 0.0
        self._sum_s = 0.0
        self._sum_ss = 0.0
        self._sum_sn = 0.0
        self._sum_nn = 0.0
        self.report: Optional[FixedWidthReport] = None

    def _current(self) -> tuple:
        R = self._R
        point = self._sum_s / self._sum_n
        n_bar = self._sum_n / R
        ssq = self._sum_ss - 2.0 * point * self._sum_sn + point * point * self._sum_nn
        sigma2 = max(ssq, 0.0) / (R * n_bar * n_bar)
        hw = self._z * math.sqrt(sigma2 / R)
        return point, sigma2, hw

    def _report_at(self, reason: str) -> FixedWidthReport:
        point, sigma2, hw = self._current()
        return FixedWidthReport(
            estimate=point,
            variance_estimate=sigma2,
            half_width=hw,
            run_length=self._tau,
            sample_count=self._R,
            method=self.method,
            stop_reason=reason,
            tours=self._R,
            df=None,
            seed=self.seed,
        )

    def offer(self, tour: Tour) -> Optional[FixedWidthReport]:
        if self.report is not None:
            return self.report
        n = float(tour.length)
        s = float(tour.sum)
        self._R += 1
        self._tau += tour.length
        self._sum_n += n
        self._sum_s += s
        self._sum_ss += s * s
        self._sum_sn += s * n
        self._sum_nn += n * n
        if self._R >= self._next:
            while self._next <= self._R:
                self._next = next(self._checkpoints)
            if self._R >= 2:
                _, _, hw = self._current()
                if should_stop(hw, self._R, self.spec):
                    self.report = self._report_at("width")
                    return self.report
        if self._tau >= self.cap:
            self.finish()
        return self.report

    @property
    def tours_seen(self) -> int:
        return self._R

    def finish(self) -> FixedWidthReport:
        """Terminal cap report from the tours completed so far."""
        if self.report is not None:
            return self.report
        if self._R == 0:
            raise RuntimeError("no regenerations observed")
        if self._R >= 2:
            self.report = self._report_at("cap")
        else:
            self.report = FixedWidthReport(
                estimate=self._sum_s / self._sum_n,
                variance_estimate=math.nan,
                half_width=math.nan,
                run_length=self._tau,
                sample_count=self._R,
                method=self.method,
                stop_reason="cap",
                tours=self._R,
                df=None,
                seed=self.seed,
            )
        return self.report


def run_until_width(
    source,
    estimator: Union[BatchEstimator, Regenerative],
    spec: PenaltySpec,
    delta: float,
    policy: Optional[CheckpointPolicy] = None,
    cap: int = 10_000_000,
    method: Optional[str] = None,
    seed: Optional[int] = None,
) -> FixedWidthReport:
    """Drive a sample source until the fixed-width rule fires or cap is hit.

    The source yields one scalar per step for batch-means estimators, or
    one Tour per step for the regenerative estimator.  Raises RuntimeError
    if the source is exhausted before the rule fires.
    """
    if isinstance(estimator, Regenerative):
        tracker = TourTracker(
            spec, delta, policy=policy, cap=cap,
            method=method or estimator.tag, seed=seed,
        )
        for tour in source:
            report = tracker.offer(tour)
            if report is not None:
                return report
        raise RuntimeError("source exhausted")

    tracker = WidthTracker(
        estimator, spec, delta, policy=policy, cap=cap, method=method, seed=seed,
    )
    buf = np.empty(4096)
    n = 0
    it = iter(source)
    target = tracker._next
    while True:
        while n < min(target, cap):
            try:
                value = next(it)
            except StopIteration:
                raise RuntimeError("source exhausted") from None
            if n == len(buf):
                grown = np.empty(2 * len(buf))
                grown[: n] = buf
                buf = grown
            buf[n] = value
            n += 1
        report = tracker.offer(buf[:n])
        if report is not None:
            return report
        target = tracker._next
