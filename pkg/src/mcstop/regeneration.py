"""Split-chain machinery: regeneration probabilities and tour extraction.

A transition kernel admitting a bound P(x, A) >= s(x) Q(A) can be run as
a split chain: after each transition the regeneration indicator delta_i
is drawn retrospectively, and the run breaks into independent tours at
the indices where delta fired.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .model import ScalarTrace, TourSet

# probabilities may poke above 1 by floating error; anything worse than
# this is recorded as a diagnostic before clamping
CLAMP_TOLERANCE = 1e-9


@dataclass
class ClampDiagnostics:
    """Counts regeneration probabilities that exceeded 1 beyond tolerance."""

    count: int = 0
    worst_excess: float = 0.0

    def record(self, excess: float) -> None:
        self.count += 1
        if excess > self.worst_excess:
            self.worst_excess = excess

    def reset(self) -> None:
        self.count = 0
        self.worst_excess = 0.0


CLAMP_DIAGNOSTICS = ClampDiagnostics()


def _clamp_probability(p: float, diagnostics: Optional[ClampDiagnostics]) -> float:
    if p > 1.0:
        if p > 1.0 + CLAMP_TOLERANCE:
            (diagnostics or CLAMP_DIAGNOSTICS).record(p - 1.0)
        return 1.0
    if p < 0.0:
        return 0.0
    return p


@dataclass(frozen=True)
class MinorizationSpec:
    """A minorization bound P(x, A) >= s(x) Q(A) described by densities.

    q_density must carry the same normalization as the transition density
    k_density so that s(x) q(y) / k(y | x) is the regeneration probability.
    """

    s: Callable[[object], float]
    q_density: Callable[[object], float]
    k_density: Callable[[object, object], float]


def regen_prob_general(
    x,
    y,
    spec: MinorizationSpec,
    diagnostics: Optional[ClampDiagnostics] = None,
) -> float:
    """Retrospective regeneration probability s(x) q(y) / k(y | x)."""
    k = spec.k_density(x, y)
    if k <= 0:
        raise ValueError("zero transition density")
    p = spec.s(x) * spec.q_density(y) / k
    return _clamp_probability(p, diagnostics)


@dataclass(frozen=True)
class IndepMHRegenSpec:
    """Regeneration rule for an independence sampler with target/proposal ratio.

    ratio returns pi(x)/nu(x), possibly up to a common constant; c is the
    split constant and must live on the same scale as the ratio.
    """

    c: float
    ratio: Callable[[float], float]

    def __post_init__(self):
        if self.c <= 0:
            raise ValueError("split constant must be positive")


def regen_prob_indep_mh(
    x: float,
    y: float,
    accepted: bool,
    spec: IndepMHRegenSpec,
    diagnostics: Optional[ClampDiagnostics] = None,
) -> float:
    """Regeneration probability on one independence-sampler transition.

    A rejected proposal can never be a regeneration; conditional on an
    acceptance the probability depends on where the ratio sits relative
    to the split constant.
    """
    if not accepted:
        return 0.0
    r_x = spec.ratio(x)
    r_y = spec.ratio(y)
    if not (r_x > 0 and r_y > 0 and math.isfinite(r_x) and math.isfinite(r_y)):
        raise ValueError("ratio must be finite and positive")
    c = spec.c
    lo, hi = (r_x, r_y) if r_x < r_y else (r_y, r_x)
    if lo > c:
        p = c / lo
    elif hi < c:
        p = hi / c
    else:
        p = 1.0
    return _clamp_probability(p, diagnostics)


def atom_regen(next_state, atom) -> bool:
    """Atom rule for discrete chains: regeneration whenever the chain lands on the atom."""
    return next_state == atom


def _log_ig_density(lam: float, shape: float, rate: float) -> float:
    return (
        shape * math.log(rate)
        - math.lgamma(shape)
        - (shape + 1.0) * math.log(lam)
        - rate / lam
    )


@dataclass(frozen=True)
class GibbsRegenSpec:
    """Regeneration rule data for the hierarchical-model Gibbs sampler.

    theta_tilde is the fixed reference point; [d1, d2] x [d3, d4] is the
    box D supporting the regeneration measure in (lambda, mu); a, b and
    c_model are the model constants.
    """

    theta_tilde: np.ndarray
    d1: float
    d2: float
    d3: float
    d4: float
    a: float
    b: float
    c_model: float

    def __post_init__(self):
        theta = np.asarray(self.theta_tilde, dtype=float)
        if theta.ndim != 1 or theta.size < 2:
            raise ValueError("theta_tilde must be a vector of length at least 2")
        if not np.all(np.isfinite(theta)):
            raise ValueError("theta_tilde must be finite")
        if not 0.0 < self.d1 < self.d2:
            raise ValueError("need 0 < d1 < d2")
        if not self.d3 < self.d4:
            raise ValueError("need d3 < d4")
        object.__setattr__(self, "theta_tilde", theta)

    @property
    def K(self) -> int:
        return int(self.theta_tilde.size)


def _v_sum(theta: np.ndarray, mu: float) -> float:
    d = theta - mu
    return float(np.dot(d, d))


def gibbs_regen_prob(
    theta_prev: Sequence[float],
    lam: float,
    mu: float,
    theta: Sequence[float],
    spec: GibbsRegenSpec,
    diagnostics: Optional[ClampDiagnostics] = None,
) -> float:
    """Regeneration probability for one Gibbs sweep.

    Evaluated retrospectively from the pre-sweep theta and the freshly
    drawn (lambda, mu); the new theta block drops out of the ratio and is
    accepted only for interface symmetry.
    """
    if lam <= 0:
        raise ValueError("lambda must be positive")
    if not (spec.d1 <= lam <= spec.d2 and spec.d3 <= mu <= spec.d4):
        return 0.0
    theta_prev = np.asarray(theta_prev, dtype=float)
    tilde = spec.theta_tilde
    K = spec.K
    if theta_prev.size != K:
        raise ValueError("theta_prev has the wrong length")

    bar_prev = float(theta_prev.mean())
    bar_tilde = float(tilde.mean())
    mu_hat = spec.d4 if bar_prev <= bar_tilde else spec.d3
    v_tilde = _v_sum(tilde, mu_hat)
    v_prev = _v_sum(theta_prev, mu_hat)
    lam_hat = spec.d2 if v_prev <= v_tilde else spec.d1

    shape = spec.b + (K - 1) / 2.0
    rate_tilde = spec.c_model + 0.5 * _v_sum(tilde, bar_tilde)
    rate_prev = spec.c_model + 0.5 * _v_sum(theta_prev, bar_prev)

    log_p = (v_tilde - v_prev) / (2.0 * lam_hat)
    log_p += _log_ig_density(lam, shape, rate_tilde) - _log_ig_density(
        lam, shape, rate_prev
    )
    # normal factors share the variance lam/K, so only the exponents differ
    log_p += (K / (2.0 * lam)) * ((mu - bar_prev) ** 2 - (mu - bar_tilde) ** 2)
    return _clamp_probability(math.exp(log_p), diagnostics)


def tours_from_run(trace: ScalarTrace, regen_flags: Sequence[bool]) -> TourSet:
    """Split a run into completed tours at the flagged transitions.

    regen_flags[i] marks a regeneration on the transition out of step i;
    the segment after the last flag is an incomplete tour and is dropped.
    """
    values = trace.values if isinstance(trace, ScalarTrace) else np.asarray(trace, dtype=float)
    flags = np.asarray(regen_flags, dtype=bool)
    if flags.ndim != 1 or flags.size != values.size:
        raise ValueError("flags must align with the trace")
    boundaries = np.flatnonzero(flags) + 1
    if boundaries.size == 0:
        raise ValueError("no regenerations observed")
    starts = np.concatenate([[0], boundaries[:-1]])
    lengths = np.diff(np.concatenate([[0], boundaries]))
    sums = np.add.reduceat(values[: boundaries[-1]], starts)
    return TourSet(lengths=lengths, sums=np.atleast_1d(sums))
