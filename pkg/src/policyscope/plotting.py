"""Convergence and weight-trajectory plots from a directory of run CSVs."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .core import CRITERIA  # noqa: E402
from .errors import ResultsFileError  # noqa: E402
from .harness import read_run_csv, summarize_best  # noqa: E402


def run_csvs(directory) -> list[Path]:
    directory = Path(directory)
    if not directory.is_dir():
        raise ResultsFileError(f"{directory} is not a directory")
    paths = sorted(p for p in directory.glob("*.csv") if p.name != "summary.csv")
    if not paths:
        raise ResultsFileError(f"no run CSVs in {directory}")
    return paths


def emit_plots(directory, out_dir=None) -> list[Path]:
    """One convergence plot for all runs, plus a stacked weight plot per policy run.

    Returns the written SVG paths.
    """
    paths = run_csvs(directory)
    out_dir = Path(out_dir or directory)
    out_dir.mkdir(parents=True, exist_ok=True)
    runs = {p: read_run_csv(p) for p in paths}
    written = []

    budget = min(len(cols["best_so_far"]) for cols in runs.values())
    rows = summarize_best([cols["best_so_far"][:budget] for cols in runs.values()], budget)
    it = np.array([r["iteration"] for r in rows])
    fig, ax = plt.subplots(figsize=(6, 4))
    for cols in runs.values():
        ax.plot(cols["iteration"][:budget], cols["best_so_far"][:budget], color="0.75", lw=0.8)
    ax.fill_between(it, [r["q25"] for r in rows], [r["q75"] for r in rows], alpha=0.3, label="interquartile range")
    ax.plot(it, [r["median"] for r in rows], lw=2, label=f"median of {len(runs)} runs")
    ax.set_xlabel("iteration")
    ax.set_ylabel("best so far")
    ax.set_title("Performance evaluation")
    ax.legend()
    fig.tight_layout()
    path = out_dir / "convergence.svg"
    fig.savefig(path)
    plt.close(fig)
    written.append(path)

    for p, cols in runs.items():
        rows_with_w = [i for i, v in enumerate(cols["w_exploitation"]) if v is not None]
        if not rows_with_w:
            continue
        x = [cols["iteration"][i] for i in rows_with_w]
        ys = [[cols[f"w_{c}"][i] for i in rows_with_w] for c in CRITERIA]
        fig, ax = plt.subplots(figsize=(6, 4))
        ax.stackplot(x, ys, labels=CRITERIA, alpha=0.85)
        ax.set_ylim(0, 1)
        ax.set_xlabel("iteration")
        ax.set_ylabel("weight")
        ax.set_title("Metric weights")
        ax.legend(loc="upper left", fontsize="small")
        fig.tight_layout()
        path = out_dir / f"weights_{p.stem}.svg"
        fig.savefig(path)
        plt.close(fig)
        written.append(path)
    return written
