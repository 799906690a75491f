"""Exploitation paired with one exploration criterion at a time.

Uses the uniform schedule, so each run splits weight evenly between
exploitation and its partner. The CSV weight columns of the inactive
criteria stay at zero throughout.
"""

import dataclasses

import numpy as np

from policyscope import RunConfig, run_optimization

base = RunConfig(benchmark="rosenbrock", budget=30, optimizer="multi_agent_scripted:uniform", record_timing=False)

for partner in ("informativeness", "diversity", "representativeness"):
    cfg = dataclasses.replace(base, criteria=("exploitation", partner))
    finals = [run_optimization(dataclasses.replace(cfg, seed=s)).best_value for s in range(5)]
    print(f"exploitation + {partner:18s} median best {np.median(finals):.4f}")
