"""Command-line interface.

Subcommands: `study run` executes a replication study from a config
file, `study summarize` re-aggregates an existing results directory,
`sample` emits one raw chain realization as CSV, `estimate` computes a
one-shot variance estimate from a trace file, and `quantile` evaluates
the packaged quantile functions.
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .estimators import ConsistentBatchMeans, FixedBatchMeans, half_width, rs_variance
from .harness import parse_config, run_study, summarize
from .model import ScalarTrace
from .quantiles import normal_quantile, student_t_quantile
from .regeneration import tours_from_run
from .rng import stream
from .samplers import (
    HierModel,
    ParetoIndepMH,
    TwoStateChain,
    TwoStateStream,
    calibrate_gibbs_regen,
    default_hier_data_path,
    gibbs_q_start,
    load_data_csv,
    pareto_q_start,
    run_hier_chain,
    run_pareto_chain,
)

PILOT_STREAM_SAMPLE = 2**33 + 1


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mcstop",
        description="Fixed-width stopping rules for Markov chain Monte Carlo.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    study = sub.add_parser("study", help="replication studies")
    study_sub = study.add_subparsers(dest="study_command", required=True)

    run_p = study_sub.add_parser("run", help="run a study from a config file")
    run_p.add_argument("--config", required=True, help="path to a key = value config file")
    run_p.add_argument("--workers", type=int, default=1, help="parallel replication workers")
    run_p.add_argument("--out", default=None, help="output directory (default from config)")
    run_p.add_argument(
        "--figures", action="store_true", help="also render report figures as PNG"
    )

    sum_p = study_sub.add_parser("summarize", help="re-aggregate an existing results directory")
    sum_p.add_argument("--in", dest="results_dir", required=True, help="results directory")

    sample_p = sub.add_parser("sample", help="emit one raw chain realization as CSV")
    sample_p.add_argument(
        "--example", required=True, choices=("pareto", "hier", "twostate")
    )
    sample_p.add_argument("--n", type=int, required=True, help="number of steps")
    sample_p.add_argument("--seed", type=int, required=True, help="base seed")
    sample_p.add_argument("--out", default=None, help="output file (default stdout)")

    est_p = sub.add_parser("estimate", help="one-shot variance estimate from a trace file")
    est_p.add_argument("--method", required=True, choices=("cbm", "bm", "rs"))
    est_p.add_argument("--theta", type=float, default=0.5, help="batch exponent for cbm")
    est_p.add_argument("--a", type=int, default=30, help="batch count for bm")
    est_p.add_argument("--delta", type=float, default=0.05, help="interval miss probability")
    est_p.add_argument("--in", dest="trace_path", required=True, help="trace CSV")

    quant_p = sub.add_parser("quantile", help="evaluate the packaged quantile functions")
    group = quant_p.add_mutually_exclusive_group(required=True)
    group.add_argument("--t", action="store_true", help="Student t quantile")
    group.add_argument("--normal", action="store_true", help="standard normal quantile")
    quant_p.add_argument("--df", type=int, default=None, help="degrees of freedom for --t")
    quant_p.add_argument("--p", type=float, required=True, help="probability in (0, 1)")

    return parser


def _cmd_study_run(args) -> int:
    cfg = parse_config(args.config)
    if args.figures:
        cfg = replace(cfg, figures=True)
    out = run_study(cfg, out_dir=args.out, workers=args.workers)
    sys.stdout.write((out / "summary.csv").read_text())
    return 0


def _cmd_study_summarize(args) -> int:
    sys.stdout.write(summarize(args.results_dir))
    return 0


def _cmd_sample(args) -> int:
    rng = stream(args.seed, 0)
    if args.example == "pareto":
        sampler = ParetoIndepMH()
        pareto_q_start(sampler, rng)
        values, flags = run_pareto_chain(sampler, args.n, rng)
    elif args.example == "hier":
        model = HierModel(y=load_data_csv(default_hier_data_path()))
        spec = calibrate_gibbs_regen(model, stream(args.seed, PILOT_STREAM_SAMPLE))
        state = gibbs_q_start(model, spec, rng)
        values, flags, _ = run_hier_chain(model, spec, args.n, rng, state)
    else:
        chain = TwoStateChain(p=0.1, q=0.2)
        src = TwoStateStream(chain, rng, start=0)
        nxt = src.take(args.n)
        values = np.empty(args.n)
        values[0] = 0.0
        values[1:] = nxt[:-1]
        flags = nxt == 0
    lines = ["value,regen"]
    lines.extend(f"{v!r},{int(f)}" for v, f in zip(values.tolist(), flags.tolist()))
    text = "\n".join(lines) + "\n"
    if args.out is None:
        sys.stdout.write(text)
    else:
        Path(args.out).write_text(text)
    return 0


def _read_trace(path) -> tuple:
    lines = Path(path).read_text().splitlines()
    if not lines:
        raise ValueError("empty trace file")
    start = 0
    has_flags = False
    header = lines[0].strip().lower()
    if header in ("value,regen", "value"):
        start = 1
        has_flags = header == "value,regen"
    elif "," in lines[0]:
        has_flags = True
    values, flags = [], []
    for line in lines[start:]:
        line = line.strip()
        if not line:
            continue
        if has_flags:
            v, _, f = line.partition(",")
            values.append(float(v))
            flags.append(bool(int(f)))
        else:
            values.append(float(line))
    return np.asarray(values), (np.asarray(flags, dtype=bool) if has_flags else None)


def _cmd_estimate(args) -> int:
    values, flags = _read_trace(args.trace_path)
    trace = ScalarTrace(values)
    if args.method == "rs":
        if flags is None:
            raise SystemExit("estimate: rs needs a value,regen trace")
        tours = tours_from_run(trace, flags)
        est = rs_variance(tours)
        run_length = int(tours.total_length)
        extra = {"tours": tours.R}
    else:
        estimator = (
            ConsistentBatchMeans(theta=args.theta)
            if args.method == "cbm"
            else FixedBatchMeans(a=args.a)
        )
        est = estimator.evaluate(trace)
        run_length = est.sample_count
        extra = {}
    # the half-width scales by tour count for rs and by sample count for
    # batch means; both live in est.sample_count
    hw = half_width(est, args.delta, est.sample_count)
    print(f"method = {args.method}")
    print(f"point = {est.point!r}")
    print(f"sigma2 = {est.sigma2!r}")
    print(f"half_width = {hw!r}")
    print(f"n = {run_length}")
    print(f"df = {est.df if est.df is not None else 'NA'}")
    for key, value in extra.items():
        print(f"{key} = {value}")
    return 0


def _cmd_quantile(args) -> int:
    if args.t:
        if args.df is None:
            raise SystemExit("quantile: --t requires --df")
        print(repr(student_t_quantile(args.df, args.p)))
    else:
        print(repr(normal_quantile(args.p)))
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "study":
            if args.study_command == "run":
                return _cmd_study_run(args)
            return _cmd_study_summarize(args)
        if args.command == "sample":
            return _cmd_sample(args)
        if args.command == "estimate":
            return _cmd_estimate(args)
        return _cmd_quantile(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
