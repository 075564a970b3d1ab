"""Replication-study driver.

Runs many independent replications of (example chain x stopping method),
writes one row per (replication, method) to rows.csv, echoes the resolved
configuration to manifest.txt, and aggregates a per-method summary.csv.
Every method within a replication consumes the identical chain
realization, and each replication's stream depends only on
(base_seed, rep), so results are byte-stable under any worker count.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from . import __version__
from .diagnostics import GDTracker, GewekeConfig
from .estimators import ConsistentBatchMeans, FixedBatchMeans
from .model import Tour
from .regeneration import GibbsRegenSpec
from .rng import seed_fingerprint, stream
from .samplers import (
    HierModel,
    ParetoIndepMH,
    TwoStateChain,
    TwoStateStream,
    calibrate_gibbs_regen,
    default_hier_data_path,
    gibbs_q_start,
    iid_posterior_sample,
    load_data_csv,
    pareto_q_start,
    run_hier_chain,
    run_pareto_chain,
)
from .stopping import CheckpointPolicy, PenaltySpec, TourTracker, WidthTracker

# stream indices reserved for study-level draws, far above any rep index
TRUTH_STREAM = 2**33
PILOT_STREAM = 2**33 + 1

_FIRST_BLOCK = 4096

NA = "NA"


@dataclass(frozen=True)
class MethodSpec:
    """One stopping method with its literal config tag."""

    tag: str
    kind: str  # bm | cbm | rs | gd
    a: Optional[int] = None
    theta: Optional[float] = None
    threshold: Optional[float] = None


def parse_method(tag: str) -> MethodSpec:
    """Parse a method tag: bm<a>, cbm(theta), rs, or gd(threshold)."""
    tag = tag.strip().replace(" ", "")
    if tag == "rs":
        return MethodSpec(tag=tag, kind="rs")
    if tag.startswith("bm"):
        try:
            a = int(tag[2:])
        except ValueError:
            raise ValueError(f"bad method tag: {tag!r}") from None
        if a < 2:
            raise ValueError("fixed batch count must be at least 2")
        return MethodSpec(tag=tag, kind="bm", a=a)
    if tag.startswith("cbm(") and tag.endswith(")"):
        theta = _parse_real(tag[4:-1])
        if not 0.0 < theta < 1.0:
            raise ValueError("batch exponent must lie in (0, 1)")
        return MethodSpec(tag=tag, kind="cbm", theta=theta)
    if tag.startswith("gd(") and tag.endswith(")"):
        threshold = _parse_real(tag[3:-1])
        if not 0.0 < threshold < 1.0:
            raise ValueError("diagnostic threshold must lie in (0, 1)")
        return MethodSpec(tag=tag, kind="gd", threshold=threshold)
    raise ValueError(f"bad method tag: {tag!r}")


def _parse_real(text: str) -> float:
    """Parse a float literal, allowing simple fractions like 1/3."""
    text = text.strip()
    if "/" in text:
        return float(Fraction(text))
    return float(text)


@dataclass(frozen=True)
class StudyConfig:
    """Full study protocol; defaults follow the worked replication setups."""

    example: str = "pareto"
    methods: Tuple[str, ...] = ("cbm(1/2)", "cbm(1/3)", "bm30", "rs")
    epsilon: float = 0.005
    delta: float = 0.05
    n_star: int = 45
    r_star: int = 30
    penalty_c: float = 0.0
    penalty_k: float = 1.0
    reps: int = 100
    base_seed: int = 0
    cap: int = 10_000_000
    checkpoint: int = 1
    truth: str = "analytic"
    output_dir: str = "results"
    figures: bool = False
    # pareto chain
    alpha: float = 1.0
    beta: float = 10.0
    lambda_prop: float = 9.0
    regen_c: float = 1.5
    # two-state chain
    p: float = 0.1
    q: float = 0.2
    # hierarchical model
    data_path: str = ""
    a_obs: float = 1.0
    b_prior: float = 2.0
    c_prior: float = 2.0
    g_coord: int = 9
    pilot_sweeps: int = 1000
    truth_draws: int = 1_000_000
    # diagnostic baseline
    gd_frac_a: float = 0.1
    gd_frac_b: float = 0.5
    gd_min_n: int = 120
    gd_checkpoint: int = 10

    def __post_init__(self):
        if self.example not in ("pareto", "hier", "twostate"):
            raise ValueError(f"unknown example: {self.example!r}")
        if not self.methods:
            raise ValueError("methods must be nonempty")
        if self.reps < 1:
            raise ValueError("reps must be at least 1")
        if self.base_seed < 0:
            raise ValueError("base_seed must be nonnegative")
        if self.cap < 1:
            raise ValueError("cap must be positive")
        for tag in self.methods:
            parse_method(tag)

    @property
    def method_specs(self) -> List[MethodSpec]:
        return [parse_method(tag) for tag in self.methods]


_BOOL = {"true": True, "false": False, "yes": True, "no": False, "1": True, "0": False}

_PARSERS = {
    "example": str,
    "methods": lambda s: tuple(part.strip() for part in s.split(",") if part.strip()),
    "epsilon": _parse_real,
    "delta": _parse_real,
    "n_star": int,
    "r_star": int,
    "penalty_c": _parse_real,
    "penalty_k": _parse_real,
    "reps": int,
    "base_seed": int,
    "cap": int,
    "checkpoint": int,
    "truth": str,
    "output_dir": str,
    "figures": lambda s: _BOOL[s.lower()],
    "alpha": _parse_real,
    "beta": _parse_real,
    "lambda_prop": _parse_real,
    "regen_c": _parse_real,
    "p": _parse_real,
    "q": _parse_real,
    "data_path": str,
    "a_obs": _parse_real,
    "b_prior": _parse_real,
    "c_prior": _parse_real,
    "g_coord": int,
    "pilot_sweeps": int,
    "truth_draws": int,
    "gd_frac_a": _parse_real,
    "gd_frac_b": _parse_real,
    "gd_min_n": int,
    "gd_checkpoint": int,
}


def parse_config(path) -> StudyConfig:
    """Read a study config from plain key = value lines with # comments."""
    values: Dict[str, object] = {}
    text = Path(path).read_text()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key = value, got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        if key not in _PARSERS:
            raise ValueError(f"line {lineno}: unknown config key: {key!r}")
        if key in values:
            raise ValueError(f"line {lineno}: duplicate config key: {key!r}")
        try:
            values[key] = _PARSERS[key](value.strip())
        except ValueError as exc:
            raise ValueError(f"line {lineno}: bad value for {key!r}: {exc}") from None
    return StudyConfig(**values)


@dataclass
class Row:
    """One (replication, method) outcome as written to rows.csv."""

    rep: int
    method: str
    n_final: Optional[int]
    r_final: Optional[int]
    estimate: Optional[float]
    half_width: Optional[float]
    covered: Optional[int]
    seed: int

    def fields(self) -> List[str]:
        return [
            str(self.rep),
            self.method,
            NA if self.n_final is None else str(self.n_final),
            NA if self.r_final is None else str(self.r_final),
            NA if self.estimate is None else repr(self.estimate),
            NA if self.half_width is None else repr(self.half_width),
            NA if self.covered is None else str(self.covered),
            str(self.seed),
        ]


ROWS_HEADER = "rep,method,n_final,r_final,estimate,half_width,covered,seed"
SUMMARY_HEADER = (
    "method,reps,failed,coverage,coverage_se,mean_half_width,half_width_se,"
    "mean_n,n_se,mean_r,r_se,mse"
)


def resolve_truth(cfg: StudyConfig) -> float:
    """Resolve the target expectation the intervals are judged against.

    "analytic" uses the closed form for the pareto and two-state chains
    and a large exact-sampler run for the hierarchical model; any other
    value must parse as a number.
    """
    if cfg.truth != "analytic":
        return _parse_real(cfg.truth)
    if cfg.example == "pareto":
        return cfg.alpha * cfg.beta / (cfg.beta - 1.0)
    if cfg.example == "twostate":
        return cfg.p / (cfg.p + cfg.q)
    model = _hier_model(cfg)
    rng = stream(cfg.base_seed, TRUTH_STREAM)
    _, _, theta = iid_posterior_sample(
        model, cfg.truth_draws, rng, theta_coord=cfg.g_coord - 1
    )
    return float(theta.mean())


def _hier_model(cfg: StudyConfig) -> HierModel:
    path = cfg.data_path or default_hier_data_path()
    y = load_data_csv(path)
    if not 1 <= cfg.g_coord <= y.size:
        raise ValueError("g_coord out of range for the data vector")
    return HierModel(y=y, a=cfg.a_obs, b=cfg.b_prior, c_model=cfg.c_prior)


def _trackers(cfg: StudyConfig, seed: int):
    """Fresh per-replication trackers in config method order."""
    width_policy = CheckpointPolicy(kind="interval", interval=cfg.checkpoint)
    pen_n = PenaltySpec(cfg.epsilon, cfg.n_star, cfg.penalty_c, cfg.penalty_k)
    pen_r = PenaltySpec(cfg.epsilon, cfg.r_star, cfg.penalty_c, cfg.penalty_k)
    out = []
    for m in cfg.method_specs:
        if m.kind == "bm":
            tracker = WidthTracker(
                FixedBatchMeans(a=m.a), pen_n, cfg.delta, width_policy,
                cap=cfg.cap, method=m.tag, seed=seed,
            )
        elif m.kind == "cbm":
            tracker = WidthTracker(
                ConsistentBatchMeans(theta=m.theta), pen_n, cfg.delta, width_policy,
                cap=cfg.cap, method=m.tag, seed=seed,
            )
        elif m.kind == "rs":
            tracker = TourTracker(
                pen_r, cfg.delta, cap=cfg.cap, method=m.tag, seed=seed
            )
        else:
            gd_cfg = GewekeConfig(
                frac_a=cfg.gd_frac_a, frac_b=cfg.gd_frac_b,
                min_n=cfg.gd_min_n, p_threshold=m.threshold,
            )
            tracker = GDTracker(
                gd_cfg, every=cfg.gd_checkpoint, cap=cfg.cap,
                method=m.tag, seed=seed,
            )
        out.append((m, tracker))
    return out


class _RepChain:
    """Block-growing shared realization (values and regen flags) of one rep."""

    def __init__(self, cfg: StudyConfig, shared, rng):
        self.cfg = cfg
        self.rng = rng
        self.values = np.empty(0)
        self.flags = np.empty(0, dtype=bool)
        self._block = _FIRST_BLOCK
        example = cfg.example
        if example == "pareto":
            self._sampler = ParetoIndepMH(
                alpha=cfg.alpha, beta=cfg.beta,
                lambda_prop=cfg.lambda_prop, c=cfg.regen_c,
            )
            pareto_q_start(self._sampler, rng)
        elif example == "hier":
            self._model, self._regen = shared
            self._state = gibbs_q_start(self._model, self._regen, rng)
        else:
            chain = TwoStateChain(p=cfg.p, q=cfg.q)
            self._twostate = TwoStateStream(chain, rng, start=0)
            self._cur = 0

    @property
    def n(self) -> int:
        return self.values.size

    def grow(self) -> None:
        m = min(self._block, self.cfg.cap - self.n)
        if m <= 0:
            return
        self._block *= 2
        cfg = self.cfg
        if cfg.example == "pareto":
            vals, flags = run_pareto_chain(self._sampler, m, self.rng)
        elif cfg.example == "hier":
            vals, flags, self._state = run_hier_chain(
                self._model, self._regen, m, self.rng, self._state,
                coord=cfg.g_coord - 1,
            )
        else:
            nxt = self._twostate.take(m)
            vals = np.empty(m)
            vals[0] = self._cur
            vals[1:] = nxt[:-1]
            flags = nxt == 0
            self._cur = int(nxt[-1])
        self.values = np.concatenate([self.values, vals])
        self.flags = np.concatenate([self.flags, flags])


def _run_rep(cfg: StudyConfig, shared, rep: int) -> List[Row]:
    seed = seed_fingerprint(cfg.base_seed, rep)
    try:
        return _run_rep_inner(cfg, shared, rep, seed)
    except RuntimeError:
        return [
            Row(rep, m.tag, None, None, None, None, None, seed)
            for m in cfg.method_specs
        ]


def _run_rep_inner(cfg: StudyConfig, shared, rep: int, seed: int) -> List[Row]:
    rng = stream(cfg.base_seed, rep)
    chain = _RepChain(cfg, shared, rng)
    pairs = _trackers(cfg, seed)
    reports = {}
    tours_seen = 0
    while len(reports) < len(pairs):
        chain.grow()
        boundaries = np.flatnonzero(chain.flags) + 1
        for m, tracker in pairs:
            if m.tag in reports:
                continue
            if m.kind == "rs":
                report = tracker.report
                while report is None and tours_seen < boundaries.size:
                    start = 0 if tours_seen == 0 else int(boundaries[tours_seen - 1])
                    end = int(boundaries[tours_seen])
                    tour = Tour(
                        length=end - start,
                        sum=float(chain.values[start:end].sum()),
                    )
                    tours_seen += 1
                    report = tracker.offer(tour)
                if report is None and chain.n >= cfg.cap:
                    try:
                        report = tracker.finish()
                    except RuntimeError:
                        reports[m.tag] = None
                        continue
            else:
                report = tracker.offer(chain.values)
            if report is not None:
                reports[m.tag] = report
    return [_to_row(cfg, rep, m, reports[m.tag], seed) for m, _ in pairs]


def _to_row(cfg: StudyConfig, rep: int, m: MethodSpec, report, seed: int) -> Row:
    if report is None:
        return Row(rep, m.tag, None, None, None, None, None, seed)
    if m.kind == "gd":
        return Row(
            rep=rep, method=m.tag, n_final=report.run_length, r_final=None,
            estimate=report.estimate, half_width=None, covered=None, seed=seed,
        )
    r_final = report.tours if m.kind == "rs" else None
    return Row(
        rep=rep, method=m.tag, n_final=report.run_length, r_final=r_final,
        estimate=report.estimate,
        half_width=None if math.isnan(report.half_width) else report.half_width,
        covered=None, seed=seed,
    )


def _fill_covered(rows: List[Row], truth: float) -> None:
    for row in rows:
        if row.estimate is None or row.half_width is None:
            continue
        row.covered = int(abs(row.estimate - truth) <= row.half_width)


def run_study(
    cfg: StudyConfig, out_dir=None, workers: int = 1
) -> Path:
    """Execute the full study and write manifest, rows, and summary files.

    Returns the output directory.  Replication r depends only on
    (base_seed, r); the worker count changes scheduling, never content.
    """
    if workers < 1:
        raise ValueError("workers must be at least 1")
    out = Path(out_dir) if out_dir is not None else Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)

    shared = None
    if cfg.example == "hier":
        model = _hier_model(cfg)
        pilot_rng = stream(cfg.base_seed, PILOT_STREAM)
        shared = (model, calibrate_gibbs_regen(model, pilot_rng, cfg.pilot_sweeps))
    truth = resolve_truth(cfg)

    reps = range(1, cfg.reps + 1)
    if workers == 1:
        per_rep = [_run_rep(cfg, shared, rep) for rep in reps]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            per_rep = list(
                pool.map(_run_rep, *zip(*[(cfg, shared, rep) for rep in reps]))
            )
    rows = [row for chunk in sorted(per_rep, key=lambda c: c[0].rep) for row in chunk]
    _fill_covered(rows, truth)

    _write_manifest(out / "manifest.txt", cfg, truth)
    _write_rows(out / "rows.csv", rows)
    _write_summary(out / "summary.csv", cfg.methods, rows, truth, cfg.reps)
    if cfg.figures:
        from .figures import render_study_figures

        render_study_figures(out)
    return out


def _write_manifest(path: Path, cfg: StudyConfig, truth: float) -> None:
    lines = [f"version = {__version__}"]
    for key in _PARSERS:
        value = getattr(cfg, key)
        if key == "methods":
            value = ",".join(value)
        elif isinstance(value, bool):
            value = "true" if value else "false"
        elif isinstance(value, float):
            value = repr(value)
        lines.append(f"{key} = {value}")
    lines.append(f"truth_value = {truth!r}")
    path.write_text("\n".join(lines) + "\n")


def _write_rows(path: Path, rows: Sequence[Row]) -> None:
    lines = [ROWS_HEADER]
    lines.extend(",".join(row.fields()) for row in rows)
    path.write_text("\n".join(lines) + "\n")


def _mean_se(values: List[float], reps: int) -> Tuple[str, str]:
    if not values:
        return NA, NA
    arr = np.asarray(values)
    mean = repr(float(arr.mean()))
    if reps < 2 or arr.size < 2:
        return mean, NA
    return mean, repr(float(arr.std(ddof=1) / math.sqrt(arr.size)))


def _write_summary(
    path: Path,
    methods: Sequence[str],
    rows: Sequence[Row],
    truth: float,
    reps: int,
) -> None:
    lines = [SUMMARY_HEADER]
    for tag in methods:
        mine = [r for r in rows if r.method == tag]
        ok = [r for r in mine if r.estimate is not None]
        failed = len(mine) - len(ok)
        cells = [tag, str(len(mine)), str(failed)]

        covered = [r.covered for r in ok if r.covered is not None]
        if covered:
            phat = sum(covered) / len(covered)
            cells.append(repr(phat))
            if reps < 2 or len(covered) < 2:
                cells.append(NA)
            else:
                cells.append(
                    repr(math.sqrt(phat * (1.0 - phat) / (len(covered) - 1)))
                )
        else:
            cells.extend([NA, NA])

        cells.extend(
            _mean_se([r.half_width for r in ok if r.half_width is not None], reps)
        )
        cells.extend(_mean_se([float(r.n_final) for r in ok], reps))
        cells.extend(
            _mean_se([float(r.r_final) for r in ok if r.r_final is not None], reps)
        )

        if ok:
            mse = float(np.mean([(r.estimate - truth) ** 2 for r in ok]))
            cells.append(repr(mse))
        else:
            cells.append(NA)
        lines.append(",".join(cells))
    path.write_text("\n".join(lines) + "\n")


def read_manifest(path) -> Dict[str, str]:
    out = {}
    for line in Path(path).read_text().splitlines():
        if not line.strip():
            continue
        key, _, value = line.partition("=")
        out[key.strip()] = value.strip()
    return out


def summarize(results_dir) -> str:
    """Recompute summary.csv from rows.csv and return its text.

    Deterministic: re-running on the same directory reproduces the file
    byte-for-byte.
    """
    results = Path(results_dir)
    rows_path = results / "rows.csv"
    manifest_path = results / "manifest.txt"
    if not rows_path.exists() or not manifest_path.exists():
        raise ValueError("no results")
    manifest = read_manifest(manifest_path)
    truth = float(manifest["truth_value"])
    reps = int(manifest["reps"])
    methods = tuple(manifest["methods"].split(","))
    rows = _read_rows(rows_path)
    _write_summary(results / "summary.csv", methods, rows, truth, reps)
    return (results / "summary.csv").read_text()


def _read_rows(path: Path) -> List[Row]:
    lines = path.read_text().splitlines()
    if not lines or lines[0] != ROWS_HEADER:
        raise ValueError("rows.csv has an unexpected header")
    out = []
    for line in lines[1:]:
        parts = line.split(",")
        if len(parts) != 8:
            raise ValueError("rows.csv has a malformed line")
        rep, method, n_final, r_final, estimate, half_width, covered, seed = parts
        out.append(
            Row(
                rep=int(rep),
                method=method,
                n_final=None if n_final == NA else int(n_final),
                r_final=None if r_final == NA else int(r_final),
                estimate=None if estimate == NA else float(estimate),
                half_width=None if half_width == NA else float(half_width),
                covered=None if covered == NA else int(covered),
                seed=int(seed),
            )
        )
    return out
