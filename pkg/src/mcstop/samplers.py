"""Example chains: a Pareto independence sampler, a hierarchical-model
Gibbs sampler with its exact accept-reject companion, and a two-state
oracle chain with closed-form asymptotic variance for validating the
estimators."""
from __future__ import annotations

import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Optional, Tuple

import numpy as np

from .regeneration import (
    GibbsRegenSpec,
    IndepMHRegenSpec,
    gibbs_regen_prob,
    regen_prob_indep_mh,
)

State = Tuple[float, float, np.ndarray]


def pareto_draw(alpha: float, shape: float, u: float) -> float:
    """Inverse-CDF draw from a Pareto(alpha, shape) given a uniform variate."""
    if shape <= 0:
        raise ValueError("shape must be positive")
    if not 0.0 < u <= 1.0:
        raise ValueError("u must lie in (0, 1]")
    return alpha * u ** (-1.0 / shape)


@dataclass
class ParetoIndepMH:
    """Independence sampler with a Pareto(alpha, beta) target and a
    Pareto(alpha, lambda_prop) proposal; requires lambda_prop <= beta so
    the proposal tail dominates the target."""

    alpha: float = 1.0
    beta: float = 10.0
    lambda_prop: float = 9.0
    c: float = 1.5
    state: float = 0.0

    def __post_init__(self):
        if self.alpha <= 0 or self.beta <= 1 or self.lambda_prop <= 0:
            raise ValueError("need alpha > 0, beta > 1, lambda_prop > 0")
        if self.lambda_prop > self.beta:
            raise ValueError("need lambda_prop <= beta")
        if self.state == 0.0:
            self.state = self.alpha
        if self.state < self.alpha:
            raise ValueError("state must be at least alpha")

    @property
    def mean(self) -> float:
        return self.alpha * self.beta / (self.beta - 1.0)

    def ratio(self, x: float) -> float:
        """Target over proposal density ratio, exactly normalized."""
        d = self.beta - self.lambda_prop
        return (self.beta / self.lambda_prop) * self.alpha**d * x**-d

    def regen_spec(self) -> IndepMHRegenSpec:
        return IndepMHRegenSpec(c=self.c, ratio=self.ratio)


def pareto_q_start(sampler: ParetoIndepMH, rng, max_tries: int = 1_000_000) -> float:
    """Draw the initial state from the regeneration measure.

    The regeneration measure has density proportional to
    nu(y) * min(1, ratio(y)/c), sampled here by rejection from nu.
    """
    for _ in range(max_tries):
        y = pareto_draw(sampler.alpha, sampler.lambda_prop, 1.0 - rng.random())
        if rng.random() < min(1.0, sampler.ratio(y) / sampler.c):
            sampler.state = y
            return y
    raise RuntimeError("rejection sampling for the start state did not accept")


def pareto_mh_step(sampler: ParetoIndepMH, rng) -> Tuple[float, bool, float]:
    """One independence-sampler transition.

    Returns the new state, the acceptance flag, and the regeneration
    probability of the transition.  Consumes exactly two uniforms so a
    blocked driver can reproduce the stream.
    """
    x = sampler.state
    u_prop = rng.random()
    u_acc = rng.random()
    y = pareto_draw(sampler.alpha, sampler.lambda_prop, 1.0 - u_prop)
    d = sampler.beta - sampler.lambda_prop
    accepted = math.log(u_acc) < d * (math.log(x) - math.log(y))
    p = regen_prob_indep_mh(x, y, accepted, sampler.regen_spec())
    if accepted:
        sampler.state = y
    return sampler.state, accepted, p


def run_pareto_chain(
    sampler: ParetoIndepMH, n: int, rng
) -> Tuple[np.ndarray, np.ndarray]:
    """Advance the sampler n steps; returns (values, regen_flags).

    values[i] is the state before transition i and regen_flags[i] is the
    regeneration indicator drawn for that transition, so the pair feeds
    tours_from_run directly.  Uniform consumption is three per step in
    the same order as pareto_mh_step plus one flag draw.
    """
    u = rng.random((n, 3))
    u0 = u[:, 0].tolist()
    u1 = u[:, 1].tolist()
    u2 = u[:, 2].tolist()
    # the per-step arithmetic below uses scalar math so the results are
    # bit-identical to a loop over pareto_mh_step on the same generator
    alpha = sampler.alpha
    inv_shape = -1.0 / sampler.lambda_prop
    d = sampler.beta - sampler.lambda_prop
    ratio_const = (sampler.beta / sampler.lambda_prop) * alpha**d
    c = sampler.c
    log = math.log

    values = np.empty(n)
    flags = np.zeros(n, dtype=bool)
    x = sampler.state
    log_x = log(x)
    r_x = ratio_const * x**-d
    for i in range(n):
        values[i] = x
        y = alpha * (1.0 - u0[i]) ** inv_shape
        log_y = log(y)
        if log(u1[i]) < d * (log_x - log_y):
            r_y = ratio_const * y**-d
            lo, hi = (r_x, r_y) if r_x < r_y else (r_y, r_x)
            if lo > c:
                p = c / lo
            elif hi < c:
                p = hi / c
            else:
                p = 1.0
            flags[i] = u2[i] < p
            x = y
            log_x = log_y
            r_x = r_y
    sampler.state = x
    return values, flags


@dataclass(frozen=True)
class HierModel:
    """Normal observations y_i with conjugate location/scale structure.

    y_i are modeled as N(theta_i, a), theta_i as N(mu, lambda), lambda as
    inverse gamma with shape b and rate c_model, and a flat prior on mu.
    """

    y: np.ndarray
    a: float = 1.0
    b: float = 2.0
    c_model: float = 2.0

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float)
        if y.ndim != 1 or y.size < 2:
            raise ValueError("y must be a vector of length at least 2")
        if not np.all(np.isfinite(y)):
            raise ValueError("y must be finite")
        if self.a <= 0 or self.b <= 0 or self.c_model <= 0:
            raise ValueError("a, b, c_model must be positive")
        object.__setattr__(self, "y", y)

    @property
    def K(self) -> int:
        return int(self.y.size)

    @property
    def ybar(self) -> float:
        return float(self.y.mean())

    @property
    def s2(self) -> float:
        return float(np.sum((self.y - self.y.mean()) ** 2))


def _draw_inverse_gamma(shape: float, rate: float, rng) -> float:
    return 1.0 / rng.gamma(shape, 1.0 / rate)


def _draw_theta(model: HierModel, lam: float, mu: float, rng) -> np.ndarray:
    loc = (lam * model.y + model.a * mu) / (lam + model.a)
    scale = math.sqrt(model.a * lam / (lam + model.a))
    return rng.normal(loc, scale)


def gibbs_sweep(model: HierModel, state: State, rng) -> State:
    """One block sweep drawing lambda, then mu, then the theta block."""
    _, _, theta = state
    k = model.K
    theta_bar = theta.mean()
    rate = model.c_model + 0.5 * float(np.sum((theta - theta_bar) ** 2))
    lam = _draw_inverse_gamma(model.b + (k - 1) / 2.0, rate, rng)
    mu = rng.normal(theta_bar, math.sqrt(lam / k))
    theta_new = _draw_theta(model, lam, mu, rng)
    if not (math.isfinite(lam) and math.isfinite(mu) and np.all(np.isfinite(theta_new))):
        raise RuntimeError("non-finite draw in a sweep")
    return lam, mu, theta_new


def h_peak(model: HierModel) -> Tuple[float, float]:
    """Argmax and log-maximum of the accept-reject acceptance factor h."""
    lam_hat = max(0.0, model.s2 / (model.K - 1) - model.a)
    return lam_hat, _log_h(model, lam_hat)


def _log_h(model: HierModel, lam) -> float:
    return (1 - model.K) / 2.0 * np.log(lam + model.a) - model.s2 / (
        2.0 * (lam + model.a)
    )


def iid_posterior_draw(model: HierModel, rng, max_tries: int = 1_000_000) -> State:
    """One exact posterior draw via accept-reject on lambda.

    Candidates come from the lambda prior; the acceptance factor is
    h(lambda)/M with M its maximum, checked on every candidate.
    """
    _, log_m = h_peak(model)
    lam = None
    for _ in range(max_tries):
        cand = _draw_inverse_gamma(model.b, model.c_model, rng)
        log_h = float(_log_h(model, cand))
        if log_h > log_m + 1e-12:
            raise RuntimeError("accept-reject bound violated")
        if math.log(rng.random()) < log_h - log_m:
            lam = cand
            break
    if lam is None:
        raise RuntimeError("accept-reject exceeded the proposal budget")
    mu = rng.normal(model.ybar, math.sqrt((lam + model.a) / model.K))
    theta = _draw_theta(model, lam, mu, rng)
    return lam, mu, theta


def iid_posterior_sample(
    model: HierModel,
    n: int,
    rng,
    theta_coord: Optional[int] = None,
    block: int = 65536,
) -> Tuple[np.ndarray, np.ndarray, Optional[np.ndarray]]:
    """n exact posterior draws, vectorized.

    Returns (lambda, mu, theta) arrays; theta holds only the requested
    coordinate (or None when theta_coord is None) to keep memory flat.
    """
    _, log_m = h_peak(model)
    out = np.empty(n)
    have = 0
    while have < n:
        cand = 1.0 / rng.gamma(model.b, 1.0 / model.c_model, size=block)
        log_h = _log_h(model, cand)
        if np.any(log_h > log_m + 1e-12):
            raise RuntimeError("accept-reject bound violated")
        keep = cand[np.log(rng.random(block)) < log_h - log_m]
        take = min(n - have, keep.size)
        out[have : have + take] = keep[:take]
        have += take
    lam = out
    mu = rng.normal(model.ybar, np.sqrt((lam + model.a) / model.K))
    if theta_coord is None:
        return lam, mu, None
    y_i = float(model.y[theta_coord])
    loc = (lam * y_i + model.a * mu) / (lam + model.a)
    scale = np.sqrt(model.a * lam / (lam + model.a))
    theta = rng.normal(loc, scale)
    return lam, mu, theta


def calibrate_gibbs_regen(
    model: HierModel, rng, sweeps: int = 1000
) -> GibbsRegenSpec:
    """Fix the regeneration box D and reference point from a pilot run.

    The box spans the pilot mean of lambda plus or minus half its spread
    (floored at .01) and the pilot mean of mu plus or minus one spread.
    """
    if sweeps < 10:
        raise ValueError("pilot needs at least 10 sweeps")
    state: State = (1.0, model.ybar, model.y.copy())
    lams = np.empty(sweeps)
    mus = np.empty(sweeps)
    theta_sum = np.zeros(model.K)
    for i in range(sweeps):
        state = gibbs_sweep(model, state, rng)
        lams[i] = state[0]
        mus[i] = state[1]
        theta_sum += state[2]
    lam_center = float(lams.mean())
    lam_spread = float(lams.std(ddof=1))
    mu_center = float(mus.mean())
    mu_spread = float(mus.std(ddof=1))
    return GibbsRegenSpec(
        theta_tilde=theta_sum / sweeps,
        d1=max(0.01, lam_center - 0.5 * lam_spread),
        d2=lam_center + 0.5 * lam_spread,
        d3=mu_center - mu_spread,
        d4=mu_center + mu_spread,
        a=model.a,
        b=model.b,
        c_model=model.c_model,
    )


def gibbs_q_start(
    model: HierModel, spec: GibbsRegenSpec, rng, max_tries: int = 100_000
) -> State:
    """Start state drawn from the regeneration measure.

    (lambda, mu) comes from the joint conditional at the reference point
    restricted to the box D, by rejection; theta follows its conditional.
    """
    tilde = spec.theta_tilde
    bar = float(tilde.mean())
    rate = model.c_model + 0.5 * float(np.sum((tilde - bar) ** 2))
    shape = model.b + (model.K - 1) / 2.0
    for _ in range(max_tries):
        lam = _draw_inverse_gamma(shape, rate, rng)
        mu = rng.normal(bar, math.sqrt(lam / model.K))
        if spec.d1 <= lam <= spec.d2 and spec.d3 <= mu <= spec.d4:
            theta = _draw_theta(model, lam, mu, rng)
            return lam, mu, theta
    raise RuntimeError("rejection sampling for the start state did not accept")


def run_hier_chain(
    model: HierModel,
    spec: GibbsRegenSpec,
    n: int,
    rng,
    state: State,
    coord: int = 8,
) -> Tuple[np.ndarray, np.ndarray, State]:
    """Advance the Gibbs sampler n sweeps from state.

    Returns (values, regen_flags, end_state) where values[i] is the coord
    entry of theta before sweep i and regen_flags[i] is the retrospective
    regeneration indicator of that sweep.
    """
    values = np.empty(n)
    flags = np.zeros(n, dtype=bool)
    for i in range(n):
        theta_prev = state[2]
        values[i] = theta_prev[coord]
        state = gibbs_sweep(model, state, rng)
        lam, mu, theta = state
        p = gibbs_regen_prob(theta_prev, lam, mu, theta, spec)
        flags[i] = rng.random() < p
    return values, flags, state


@dataclass(frozen=True)
class TwoStateChain:
    """Markov chain on {0, 1} with flip probabilities p (0 to 1) and q (1 to 0).

    Solvable oracle: stationary mean, asymptotic variance of the identity
    functional, and lag autocorrelations all have closed forms.
    """

    p: float
    q: float

    def __post_init__(self):
        if not (0.0 < self.p < 1.0 and 0.0 < self.q < 1.0):
            raise ValueError("p and q must lie strictly inside (0, 1)")

    @property
    def stationary_mean(self) -> float:
        return self.p / (self.p + self.q)

    @property
    def sigma2_identity(self) -> float:
        p, q = self.p, self.q
        return p * q * (2.0 - p - q) / (p + q) ** 3

    def autocorr(self, k: int) -> float:
        return (1.0 - self.p - self.q) ** k


def two_state_step(chain: TwoStateChain, state: int, rng) -> int:
    """One transition of the two-state chain."""
    if state not in (0, 1):
        raise ValueError("state must be 0 or 1")
    u = rng.random()
    if state == 0:
        return 1 if u < chain.p else 0
    return 0 if u < chain.q else 1


class TwoStateStream:
    """Incremental two-state path generator using runs of constant state.

    Sojourn lengths are geometric, so the path is produced by np.repeat
    over sojourn blocks instead of one transition at a time.  take(m)
    emits the next m states after the current one.  Randomness is always
    consumed in the same fixed-size blocks, so the path depends only on
    the generator and the total number of states taken, not on how the
    takes are chunked.
    """

    _PAIRS = 256

    def __init__(self, chain: TwoStateChain, rng, start: int = 0):
        if start not in (0, 1):
            raise ValueError("start must be 0 or 1")
        self.chain = chain
        self.rng = rng
        self.start = start
        self.last = start
        self._pending = np.empty(0, dtype=np.int8)
        self._next_state: Optional[int] = None

    def _leave_rate(self, state: int) -> float:
        return self.chain.p if state == 0 else self.chain.q

    def _generate(self, need: int) -> None:
        chunks = []
        total = 0
        if self._next_state is None:
            # remaining occupancy of the start state is geometric less one
            head = int(self.rng.geometric(self._leave_rate(self.start))) - 1
            if head:
                chunks.append(np.full(head, self.start, dtype=np.int8))
                total += head
            self._next_state = 1 - self.start
        cur = self._next_state
        m = self._PAIRS
        while total < need:
            first = self.rng.geometric(self._leave_rate(cur), size=m)
            second = self.rng.geometric(self._leave_rate(1 - cur), size=m)
            lens = np.empty(2 * m, dtype=np.int64)
            lens[0::2] = first
            lens[1::2] = second
            states = np.empty(2 * m, dtype=np.int8)
            states[0::2] = cur
            states[1::2] = 1 - cur
            seg = np.repeat(states, lens)
            chunks.append(seg)
            total += seg.size
        self._pending = np.concatenate([self._pending, *chunks])

    def take(self, m: int) -> np.ndarray:
        if m < 0:
            raise ValueError("m must be nonnegative")
        if self._pending.size < m:
            self._generate(m - self._pending.size)
        out = self._pending[:m]
        self._pending = self._pending[m:]
        if m:
            self.last = int(out[-1])
        return out


def synthetic_hier_data(
    k: int = 18, seed: int = 31, a: float = 1.0, b: float = 2.0, c_model: float = 2.0
) -> np.ndarray:
    """Synthetic data vector drawn from the hierarchical model itself.

    lambda comes from its inverse-gamma prior, the location is fixed at
    zero standing in for the flat prior, theta_i are N(0, lambda), and
    y_i are N(theta_i, a).  The shipped default dataset is this function
    at its default arguments.
    """
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, 0])))
    lam = 1.0 / rng.gamma(b, 1.0 / c_model)
    theta = rng.normal(0.0, math.sqrt(lam), size=k)
    return rng.normal(theta, math.sqrt(a))


def default_hier_data_path() -> Path:
    """Path of the packaged synthetic dataset."""
    return Path(str(resources.files("mcstop").joinpath("data/hier_synthetic.csv")))


def load_data_csv(path) -> np.ndarray:
    """Load a data vector from a CSV file with one real number per line."""
    arr = np.loadtxt(path, dtype=float, ndmin=1)
    if arr.ndim != 1:
        raise ValueError("expected one value per line")
    return arr
