"""Random search against the two GP baselines on the 2-d Rosenbrock valley.

Ten seeds each, budget 30. Prints the median final best-so-far per optimizer
and writes per-run CSVs plus a convergence plot under ``demo_out/baselines``.
"""

import dataclasses
from pathlib import Path

import numpy as np

from policyscope import RunConfig, run_suite
from policyscope.plotting import emit_plots

out = Path("demo_out/baselines")
base = RunConfig(benchmark="rosenbrock", budget=30, repetitions=10, record_timing=False)

for optimizer in ("random", "gp_ei", "gp_ucb"):
    cfg = dataclasses.replace(base, optimizer=optimizer, output_dir=str(out / optimizer))
    summary = run_suite(cfg)
    finals = [r.best_value for r in summary.results]
    print(f"{optimizer:8s} median final best {np.median(finals):.4f}  (IQR {np.percentile(finals, 25):.4f}"
          f" .. {np.percentile(finals, 75):.4f})")
    emit_plots(out / optimizer)

print(f"plots and CSVs under {out}/")
