"""Study report figures rendered alongside the delimited output.

Reads rows.csv and manifest.txt from a results directory and writes
three PNGs next to them: run-length distributions, estimate
distributions against the truth, and per-method coverage with error
bars.  Rendering is optional; the CSV outputs never depend on it.
"""
from __future__ import annotations

import math
from pathlib import Path
from typing import List

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .harness import _read_rows, read_manifest  # noqa: E402


def render_study_figures(results_dir) -> List[Path]:
    """Render the three report figures; returns the written paths."""
    results = Path(results_dir)
    rows = _read_rows(results / "rows.csv")
    manifest = read_manifest(results / "manifest.txt")
    truth = float(manifest["truth_value"])
    delta = float(manifest["delta"])
    methods = manifest["methods"].split(",")

    by_method = {m: [r for r in rows if r.method == m and r.estimate is not None] for m in methods}
    written = []

    fig, ax = plt.subplots(figsize=(7, 4.5))
    data = [[r.n_final for r in by_method[m]] for m in methods]
    ax.boxplot(data, tick_labels=methods, showfliers=False)
    ax.set_ylabel("run length at stop")
    ax.set_title("Run length by stopping method")
    fig.tight_layout()
    path = results / "fig_run_length.png"
    fig.savefig(path, dpi=110)
    plt.close(fig)
    written.append(path)

    fig, ax = plt.subplots(figsize=(7, 4.5))
    data = [[r.estimate for r in by_method[m]] for m in methods]
    ax.violinplot(data, showmeans=True, showextrema=False)
    ax.axhline(truth, color="crimson", linestyle="--", linewidth=1, label="truth")
    ax.set_xticks(range(1, len(methods) + 1), methods)
    ax.set_ylabel("estimate at stop")
    ax.set_title("Estimates by stopping method")
    ax.legend(loc="upper right")
    fig.tight_layout()
    path = results / "fig_estimates.png"
    fig.savefig(path, dpi=110)
    plt.close(fig)
    written.append(path)

    fig, ax = plt.subplots(figsize=(7, 4.5))
    xs, phats, errs, labels = [], [], [], []
    for i, m in enumerate(methods):
        covered = [r.covered for r in by_method[m] if r.covered is not None]
        if not covered:
            continue
        phat = sum(covered) / len(covered)
        se = (
            math.sqrt(phat * (1 - phat) / (len(covered) - 1))
            if len(covered) > 1
            else 0.0
        )
        xs.append(i)
        phats.append(phat)
        errs.append(se)
        labels.append(m)
    if xs:
        ax.errorbar(xs, phats, yerr=errs, fmt="o", capsize=4)
        ax.set_xticks(xs, labels)
    ax.axhline(1 - delta, color="crimson", linestyle="--", linewidth=1, label="nominal")
    ax.set_ylabel("coverage")
    ax.set_title("Interval coverage by stopping method")
    ax.legend(loc="lower right")
    fig.tight_layout()
    path = results / "fig_coverage.png"
    fig.savefig(path, dpi=110)
    plt.close(fig)
    written.append(path)

    return written
