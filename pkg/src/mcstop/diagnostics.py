"""Convergence-diagnostic stopping baseline.

Stops when a two-window mean-comparison z score stops rejecting: the
first tenth of the trace is compared against the last half, each window's
variance coming from batch means, and sampling ends once the two-sided
p-value clears a threshold.  Serves as the control arm against the
fixed-width rules, which keep sampling until a precision target instead.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Optional, Tuple, Union

import numpy as np

from .estimators import batch_means
from .model import ScalarTrace, cbm_schedule


@dataclass(frozen=True)
class GewekeConfig:
    """Window fractions, minimum length, and the decision threshold."""

    frac_a: float = 0.1
    frac_b: float = 0.5
    min_n: int = 120
    p_threshold: float = 0.05

    def __post_init__(self):
        if not (0.0 < self.frac_a < 1.0 and 0.0 < self.frac_b < 1.0):
            raise ValueError("window fractions must lie in (0, 1)")
        if self.frac_a + self.frac_b > 1.0:
            raise ValueError("window fractions must sum to at most 1")
        if not 0.0 < self.p_threshold < 1.0:
            raise ValueError("p_threshold must lie in (0, 1)")
        if self.min_n < 20:
            raise ValueError("min_n must be at least 20")


@dataclass(frozen=True)
class GDReport:
    """Outcome of diagnostic-based stopping."""

    estimate: float
    z: float
    p_value: float
    run_length: int
    converged: bool
    stop_reason: str = "diagnostic"
    seed: Optional[int] = None


def _window_variance(window: np.ndarray) -> float:
    try:
        est = batch_means(ScalarTrace(window), cbm_schedule(window.size, 0.5))
    except ValueError:
        raise ValueError("insufficient window") from None
    return est.sigma2


def geweke_z(
    trace: Union[ScalarTrace, np.ndarray], cfg: GewekeConfig = GewekeConfig()
) -> Tuple[float, float]:
    """Two-window mean-comparison score and its two-sided normal p-value.

    The windows are the first frac_a fraction and the last frac_b
    fraction of the trace; each window's variance is a batch-means
    estimate with square-root batch growth, so autocorrelation within
    the windows enters the scale of the comparison.
    """
    values = trace.values if isinstance(trace, ScalarTrace) else np.asarray(trace, dtype=float)
    n = values.size
    n_a = int(cfg.frac_a * n)
    n_b = int(cfg.frac_b * n)
    if n_a < 2 or n_b < 2:
        raise ValueError("insufficient window")
    window_a = values[:n_a]
    window_b = values[n - n_b :]
    num = float(window_a.mean() - window_b.mean())
    denom = math.sqrt(
        _window_variance(window_a) / n_a + _window_variance(window_b) / n_b
    )
    if denom == 0.0:
        if num == 0.0:
            return 0.0, 1.0
        return math.copysign(math.inf, num), 0.0
    z = num / denom
    p = math.erfc(abs(z) / math.sqrt(2.0))
    return z, p


class GDTracker:
    """Resumable diagnostic stopping over a growing sample prefix.

    offer(values) scans any checkpoints newly covered by the prefix and
    returns a GDReport at the first one whose p-value clears the
    threshold, or None while sampling should continue.  Reaching the cap
    forces a report with the diagnostic state at the cap.
    """

    def __init__(
        self,
        cfg: GewekeConfig = GewekeConfig(),
        every: int = 10,
        cap: int = 10_000_000,
        method: str = "gd",
        seed: Optional[int] = None,
    ):
        if every < 1:
            raise ValueError("checkpoint interval must be at least 1")
        if cap < cfg.min_n:
            raise ValueError("cap must be at least min_n")
        self.cfg = cfg
        self.every = every
        self.cap = cap
        self.method = method
        self.seed = seed
        self._next = cfg.min_n
        self.report: Optional[GDReport] = None

    def _report_at(self, values: np.ndarray, n: int) -> GDReport:
        prefix = values[:n]
        z, p = geweke_z(prefix, self.cfg)
        converged = p > self.cfg.p_threshold
        return GDReport(
            estimate=float(prefix.mean()),
            z=z,
            p_value=p,
            run_length=n,
            converged=converged,
            stop_reason="diagnostic" if converged else "cap",
            seed=self.seed,
        )

    def offer(self, values: np.ndarray) -> Optional[GDReport]:
        if self.report is not None:
            return self.report
        n_have = min(len(values), self.cap)
        while self._next <= n_have:
            n = self._next
            self._next += self.every
            candidate = self._report_at(values, n)
            if candidate.converged:
                self.report = candidate
                return self.report
        if n_have >= self.cap:
            self.report = self._report_at(values, self.cap)
        return self.report


def gd_stopping(
    source: Iterator[float],
    cfg: GewekeConfig = GewekeConfig(),
    every: int = 10,
    cap: int = 10_000_000,
    seed: Optional[int] = None,
) -> GDReport:
    """Drive a scalar source until the diagnostic stops or the cap hits."""
    tracker = GDTracker(cfg, every, cap, seed=seed)
    buf = np.empty(4096)
    n = 0
    while True:
        grow = min(max(256, n), cap - n)
        if n + grow > buf.size:
            bigger = np.empty(2 * buf.size)
            bigger[:n] = buf[:n]
            buf = bigger
        for i in range(n, n + grow):
            try:
                buf[i] = next(source)
            except StopIteration:
                raise RuntimeError("source exhausted before stopping") from None
        n += grow
        report = tracker.offer(buf[:n])
        if report is not None:
            return report
