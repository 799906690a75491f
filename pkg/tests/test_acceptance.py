"""Acceptance gate: one test per criterion, each reporting a PASS/FAIL line."""

import dataclasses
import time

import numpy as np
import pytest

from policyscope.agents import PoolGeneration
from policyscope.core import CRITERIA, ProblemSpec, WeightVector
from policyscope.errors import ParseError, ReplayError
from policyscope.harness import RunConfig, read_run_csv, replay, replay_suite, run_optimization, run_suite
from policyscope.llm_client import MockClient
from policyscope.metrics import criteria_matrix, fit_clusters
from policyscope.prompts import parse_parameters, parse_weights
from policyscope.surrogate import ei_from_moments, gp_fit, gp_predict_many, unclamped_variance

from conftest import make_history, report
from corpus import fuzz_corpus
from oracles import dense_gp, exhaustive_wcss, min_pairwise_distance
from scripts import multi_agent_script

pytestmark = pytest.mark.acceptance


def test_01_gp_oracle_equivalence():
    rng = np.random.default_rng(2024)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(20):
        d = int(rng.integers(1, 4))
        n = int(rng.integers(2, 11))
        spec = ProblemSpec("g", d, tuple((-3.0, 1.0 + j) for j in range(d)))
        X = rng.uniform(spec.lower, spec.upper, (n, d))
        y = rng.normal(size=n) * rng.uniform(0.1, 50)
        h = make_history(spec, X, y)
        m = gp_fit(h)
        probes = rng.uniform(spec.lower, spec.upper, (7, d))
        U = (probes - spec.lower) / (spec.upper - spec.lower)
        Xn = (X - spec.lower) / (spec.upper - spec.lower)
        mu_o, var_o = dense_gp(Xn, (y - y.mean()) / y.std(), U, m.lengthscale, m.jitter)
        mu, _ = gp_predict_many(m, probes)
        worst = max(
            worst,
            np.max(np.abs((mu - y.mean()) / y.std() - mu_o)),
            np.max(np.abs(unclamped_variance(m, U) - var_o)),
        )
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-8 and elapsed < 5.0
    report(1, "GP oracle equivalence", ok, f"max |diff| = {worst:.2e} (tol 1e-8), {elapsed:.2f}s (< 5s)")
    assert ok


def test_02_acquisition_sanity():
    rng = np.random.default_rng(7)
    mu = rng.normal(0, 10, 10_000)
    sigma = np.abs(rng.normal(0, 5, 10_000))
    sigma[::10] = 0.0
    best = rng.normal(0, 10, 10_000)
    ei = ei_from_moments(mu, sigma, best)
    nonneg = bool(np.all(ei >= 0))
    zero_sigma = bool(np.all(ei_from_moments(mu, 0.0, best) == np.maximum(0.0, mu - best)))
    at_zero = ei_from_moments(1.5, 1.0, 1.5)
    ok = nonneg and zero_sigma and abs(at_zero - 0.3989) <= 1e-4
    report(2, "acquisition sanity", ok, f"EI>=0: {nonneg}; sigma=0 exact: {zero_sigma}; EI(z=0)={at_zero:.6f}")
    assert ok


def test_03_gp_ei_beats_random():
    t0 = time.perf_counter()
    base = RunConfig(benchmark="rosenbrock", budget=30, record_timing=False)
    rand, ei = [], []
    for seed in range(10):
        rand.append(run_optimization(dataclasses.replace(base, optimizer="random", seed=seed)).best_value)
    for seed in range(10):
        ei.append(run_optimization(dataclasses.replace(base, optimizer="gp_ei", seed=seed)).best_value)
    elapsed = time.perf_counter() - t0
    wins = sum(e < r for e, r in zip(ei, rand))
    ok = np.median(ei) < np.median(rand) and wins >= 8 and elapsed < 60
    report(
        3, "gp_ei beats random", ok,
        f"median {np.median(ei):.4g} vs {np.median(rand):.4g}, wins {wins}/10 (>= 8), {elapsed:.1f}s (< 60s)",
    )
    assert ok


def test_04_metric_range_and_argmax_invariance():
    rng = np.random.default_rng(11)
    out_of_range = 0
    for i in range(10_000):
        d = int(rng.integers(1, 5))
        n = int(rng.integers(1, 16))
        spec = ProblemSpec("f", d, tuple((-1.0, float(rng.integers(1, 5))) for _ in range(d)))
        pts = rng.uniform(spec.lower, spec.upper, (n, d))
        if i % 5 == 0:
            pts[rng.integers(n)] = pts[0]
        h = make_history(spec, pts, rng.normal(size=n) * 10.0 ** rng.integers(-3, 4))
        x = pts[0] if i % 7 == 0 else rng.uniform(spec.lower, spec.upper)
        scores = criteria_matrix([x], h, CRITERIA, fit_clusters(h, 3, i, restarts=1))
        out_of_range += sum(not 0.0 <= v[0] <= 1.0 for v in scores.values())
    changed = 0
    for i in range(100):
        spec = ProblemSpec("f", 2, ((-2.0, 2.0), (-2.0, 2.0)))
        n = int(rng.integers(1, 12))
        h = make_history(spec, rng.uniform(-2, 2, (n, 2)), rng.normal(size=n))
        raw = {c: float(v) for c, v in zip(CRITERIA, rng.exponential(size=4))}
        gen = PoolGeneration(128)
        ref = gen.propose_candidate(h, WeightVector.from_raw(raw, CRITERIA), spec, i)
        for c in (0.1, 3.0, 100.0):
            scaled = WeightVector.from_raw({k: v * c for k, v in raw.items()}, CRITERIA)
            changed += not np.array_equal(gen.propose_candidate(h, scaled, spec, i), ref)
    ok = out_of_range == 0 and changed == 0
    report(4, "metric range + argmax invariance", ok,
           f"{out_of_range} out-of-range scores in 10^4 cases; {changed} argmax changes in 300 scalings")
    assert ok


def test_05_informativeness_spreads_points():
    base = RunConfig(benchmark="rosenbrock", budget=30, record_timing=False)
    wins = 0
    pairs = []
    for seed in range(10):
        # random oracle first
        rand = run_optimization(dataclasses.replace(base, optimizer="random", seed=seed))
        info = run_optimization(
            dataclasses.replace(base, optimizer="multi_agent_scripted:pure_explore_informativeness", seed=seed)
        )
        a = min_pairwise_distance([r.point for r in info.records])
        b = min_pairwise_distance([r.point for r in rand.records])
        pairs.append((a, b))
        wins += a > b
    ok = wins >= 8
    med = np.median([p[0] for p in pairs]), np.median([p[1] for p in pairs])
    report(5, "exploration behavior", ok,
           f"min pairwise distance larger on {wins}/10 seeds (>= 8); medians {med[0]:.3f} vs {med[1]:.3f}")
    assert ok


def test_06_deterministic_end_to_end(tmp_path):
    script = multi_agent_script(27, seed=6)
    assert len(script) == 54
    cfg = RunConfig(optimizer="multi_agent", benchmark="rosenbrock", budget=30, seed=12, record_timing=False)
    runs = []
    for tag in ("a", "b"):
        client = MockClient(script)
        runs.append(run_optimization(dataclasses.replace(cfg, output_dir=str(tmp_path / tag)), client, run_name="e2e"))
    a, b = runs
    same_csv = a.csv_path.read_bytes() == b.csv_path.read_bytes()
    same_tr = a.transcript_path.read_bytes() == b.transcript_path.read_bytes()
    ok = same_csv and same_tr and a.n_evaluations == b.n_evaluations == 30 and len(a.transcripts) == 54
    report(6, "deterministic end-to-end", ok,
           f"CSV identical: {same_csv}; transcripts identical: {same_tr}; evaluations {a.n_evaluations}")
    assert ok


def test_07_parser_robustness():
    spec = ProblemSpec("p", 2, ((-2.0, 2.0), (3.0, 9.0)), kinds=("continuous", "integer"))
    crashes, parsed, errors = 0, 0, 0
    for wtext, ptext in fuzz_corpus(1000, seed=0):
        for fn, text, arg in ((parse_weights, wtext, CRITERIA), (parse_parameters, ptext, spec)):
            try:
                fn(text, arg)
                parsed += 1
            except ParseError as err:
                errors += 1
                crashes += not (isinstance(err.description, str) and err.description)
            except Exception:
                crashes += 1
    box = ProblemSpec("b", 2, ((-2.0, 2.0), (-2.0, 2.0)))
    good = [
        parse_weights('** weights ** {"exploitation": 1, "diversity": 1} ** weights **', CRITERIA).values
        == (0.5, 0.0, 0.5, 0.0),
        parse_weights('Plan: ** weights ** {"exploitation": 1, "diversity": 1} ** weights ** done', CRITERIA).values
        == (0.5, 0.0, 0.5, 0.0),
        parse_weights("** weights ** exploitation: -1, diversity: 1 ** weights **", ("exploitation", "diversity")).values
        == (0.0, 1.0),
        tuple(parse_parameters("## parameters ## 0.1, 0.2 ## parameters ##", box)) == (0.1, 0.2),
        tuple(parse_parameters("## parameters ## x2=5, x1=1.5 ## parameters ##", spec)) == (1.5, 5.0),
    ]
    try:
        parse_parameters("## parameters ## 1, 2, 3 ## parameters ##", box)
        arity = False
    except ParseError as err:
        arity = "expected 2 values, found 3" in err.description
    ok = crashes == 0 and all(good) and arity
    report(7, "parser robustness", ok,
           f"2000 fuzz parses: {parsed} ok, {errors} structured errors, {crashes} crashes; good-path {sum(good)}/5")
    assert ok


def test_08_paired_metric_mode(tmp_path):
    cfg = RunConfig(optimizer="multi_agent", criteria="exploitation,diversity", seed=1, record_timing=False,
                    output_dir=str(tmp_path))
    client = MockClient(multi_agent_script(27, seed=8))
    res = run_optimization(cfg, client, run_name="paired")
    cols = read_run_csv(res.csv_path)
    adaptive = slice(cfg.n_init, None)
    zeros = all(v == 0.0 for v in cols["w_informativeness"][adaptive] + cols["w_representativeness"][adaptive])
    active = all(v is not None for v in cols["w_exploitation"][adaptive])
    defs = {req.messages[1].content.count("\n* ") for req in client.requests}
    ok = zeros and active and defs == {2}
    report(8, "paired-metric mode", ok,
           f"inactive weights zero in every row: {zeros}; definitions per prompt: {sorted(defs)}")
    assert ok


def test_09_kmeans_exhaustive_optimum():
    rng = np.random.default_rng(99)
    spec = ProblemSpec("u", 2, ((0.0, 1.0), (0.0, 1.0)))
    mismatches = 0
    for i in range(50):
        n = int(rng.integers(2, 9))
        k = int(rng.integers(1, 4))
        d = int(rng.integers(1, 3))
        spec = ProblemSpec("u", d, ((0.0, 1.0),) * d)
        X = rng.random((n, d))
        m = fit_clusters(make_history(spec, X, np.zeros(n)), k, seed=i)
        opt = exhaustive_wcss(X, min(k, n))
        mismatches += not abs(m.inertia - opt) <= 1e-9 * max(1.0, opt)
    ok = mismatches == 0
    report(9, "k-means exhaustive equivalence", ok, f"{50 - mismatches}/50 instances at the optimal WCSS")
    assert ok


def test_10_replay_fidelity(tmp_path):
    cfg = RunConfig(optimizer="multi_agent", repetitions=3, seed=20, record_timing=False,
                    output_dir=str(tmp_path / "rec"))
    run_suite(cfg, lambda i: MockClient(multi_agent_script(27, seed=100 + i)))
    replay_suite(tmp_path / "rec", cfg, tmp_path / "rep")
    names = sorted(p.name for p in (tmp_path / "rec").glob("run_*.csv"))
    diffs = sum((tmp_path / "rec" / n).read_bytes() != (tmp_path / "rep" / n).read_bytes() for n in names)
    try:
        replay(tmp_path / "rec" / "run_000.transcript.txt", dataclasses.replace(cfg, budget=31))
        hash_error = False
    except ReplayError as err:
        hash_error = "config hash" in str(err)
    ok = len(names) == 3 and diffs == 0 and hash_error
    report(10, "replay fidelity", ok,
           f"{len(names)} CSVs replayed, {diffs} differ; modified budget -> config-hash error: {hash_error}")
    assert ok
