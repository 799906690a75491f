"""A full two-agent run against a scripted client, then an offline replay.

The mock client stands in for a chat endpoint: it serves canned strategy and
generation answers in order. One answer per agent is malformed so the
corrective re-ask shows up in the transcript. The recorded transcript is then
replayed, which must reproduce the CSV byte for byte.
"""

from pathlib import Path

import numpy as np

from policyscope import MockClient, RunConfig, replay, run_optimization

rng = np.random.default_rng(0)
script = []
for t in range(27):
    w = rng.integers(1, 5, size=4)
    strategy = (
        "** weights **\n"
        f"exploitation: {w[0]}\ninformativeness: {w[1]}\ndiversity: {w[2]}\nrepresentativeness: {w[3]}\n"
        "** weights **"
    )
    x = rng.uniform(-2, 2, size=2)
    generation = f"## parameters ## x1={x[0]:.3f}, x2={x[1]:.3f} ## parameters ##"
    if t == 5:
        script.append("I would lean towards exploration here.")  # no markers: triggers a re-ask
    if t == 9:
        script.append("## parameters ## 0.5 ## parameters ##")  # wrong arity: triggers a re-ask
    script += [strategy, generation]

out = Path("demo_out/mock")
cfg = RunConfig(optimizer="multi_agent", budget=30, seed=1, record_timing=False, output_dir=str(out / "recorded"))
res = run_optimization(cfg, MockClient(script), run_name="run")
print(f"best y={res.best_value:.4f} after {res.n_evaluations} evaluations, {len(res.transcripts)} model calls")
print("outcomes:", [r.parse_outcome for r in res.records if r.parse_outcome != "ok" and r.parse_outcome])

again = replay(res.transcript_path, cfg, out / "replayed", "run")
same = again.csv_path.read_bytes() == res.csv_path.read_bytes()
print(f"replay reproduces the CSV: {same}")
