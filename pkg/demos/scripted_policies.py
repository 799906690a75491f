"""The decomposed loop with fixed weight schedules instead of a model.

Each schedule drives the pool-based generation agent. Pure exploitation tends
to lock onto the first basin it finds, pure informativeness fills space, and
epsilon decay moves from one to the other over the budget.
"""

import dataclasses
from itertools import combinations

import numpy as np

from policyscope import RunConfig, run_optimization

base = RunConfig(benchmark="rosenbrock", budget=30, record_timing=False)

for schedule in ("pure_exploit", "pure_explore_informativeness", "uniform", "epsilon_decay"):
    finals, spread = [], []
    for seed in range(5):
        res = run_optimization(dataclasses.replace(base, optimizer=f"multi_agent_scripted:{schedule}", seed=seed))
        pts = np.array([r.point for r in res.records])
        finals.append(res.best_value)
        spread.append(min(np.linalg.norm(a - b) for a, b in combinations(pts, 2)))
    print(f"{schedule:30s} median best {np.median(finals):8.4f}   median min spacing {np.median(spread):.3f}")

# weights chosen by epsilon decay at a few iterations
res = run_optimization(dataclasses.replace(base, optimizer="multi_agent_scripted:epsilon_decay"))
for r in res.records[3::6]:
    w = r.weights.full()
    print(f"iter {r.iteration:2d}: exploitation={w['exploitation']:.2f} informativeness={w['informativeness']:.2f}")
