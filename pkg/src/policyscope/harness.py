"""The optimization loop, repeated-run suites, CSV/transcript output and replay.

One run draws ``n_init`` seeded uniform points, then asks the configured
optimizer for one candidate per iteration until the budget is spent. Every
evaluation becomes a CSV row; every LLM call becomes a transcript block.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import logging
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from . import agents
from .benchmarks import Benchmark, make_benchmark
from .core import (
    CRITERIA,
    History,
    ProblemSpec,
    RunRecord,
    WeightVector,
    best_so_far,
    canonical_criteria,
    derive_seed,
    improvement_window,
    uniform_points,
)
from .errors import ConfigError, PolicyscopeError, ReplayError, ResultsFileError, RunError, ValidationError
from .llm_client import ClientConfig, HttpChatClient, MockClient
from .prompts import PromptTemplates
from .surrogate import ACQ_POOL_SIZE, UCB_BETA, WARPS, ei_acquisition, gp_fit, maximize_acquisition, ucb_acquisition
from .transcript import AgentTranscript, read_transcript, write_transcript

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

log = logging.getLogger(__name__)

BASELINES = ("random", "gp_ei", "gp_ucb")
LLM_OPTIMIZERS = ("single_agent", "multi_agent")
SCRIPTED_PREFIX = "multi_agent_scripted:"
OUTCOME_RANK = {None: 0, "ok": 1, "retried": 2, "fallback": 3}

# fields that change what a run computes; replay refuses a transcript recorded under different values
_HASHED_FIELDS = (
    "benchmark", "benchmark_seed", "dim", "optimizer", "budget", "n_init",
    "criteria", "pool_size", "acq_pool_size", "beta", "gp_warp",
)


@dataclass(frozen=True)
class RunConfig:
    benchmark: str = "rosenbrock"
    benchmark_seed: int = 0
    dim: int | None = None
    optimizer: str = "random"
    budget: int = 30
    n_init: int = 3
    seed: int = 0
    repetitions: int = 10
    criteria: tuple[str, ...] = CRITERIA
    output_dir: str | None = None
    pool_size: int = agents.POOL_SIZE
    acq_pool_size: int = ACQ_POOL_SIZE
    beta: float = UCB_BETA
    gp_warp: str = "log"
    record_timing: bool = True
    templates_dir: str | None = None
    max_history_entries: int | None = None
    # client settings; the API key is read from the environment only
    base_url: str | None = None
    model: str = "llama-3.3-70b-instruct"
    temperature: float = 0.7
    max_tokens: int = 1024
    timeout_seconds: float = 60.0
    max_retries: int = 3

    def __post_init__(self):
        if isinstance(self.criteria, str):
            object.__setattr__(self, "criteria", tuple(c for c in self.criteria.split(",") if c.strip()))
        try:
            object.__setattr__(self, "criteria", canonical_criteria(self.criteria))
        except ValidationError as exc:
            raise ConfigError(str(exc)) from None
        if not self.n_init >= 1:
            raise ConfigError(f"n_init must be >= 1, got {self.n_init}")
        if not self.budget >= self.n_init:
            raise ConfigError(f"budget ({self.budget}) must be >= n_init ({self.n_init})")
        if not self.repetitions >= 1:
            raise ConfigError(f"repetitions must be >= 1, got {self.repetitions}")
        parse_optimizer(self.optimizer)
        if self.gp_warp not in WARPS:
            raise ConfigError(f"gp_warp must be one of {list(WARPS)}, got {self.gp_warp!r}")

    def config_hash(self) -> str:
        payload = {name: getattr(self, name) for name in _HASHED_FIELDS}
        payload["criteria"] = list(payload["criteria"])
        return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()[:16]

    def client_config(self) -> ClientConfig:
        return ClientConfig.from_env(
            self.base_url,
            model=self.model,
            temperature=self.temperature,
            max_tokens=self.max_tokens,
            timeout_seconds=self.timeout_seconds,
            max_retries=self.max_retries,
        )

    @property
    def uses_llm(self) -> bool:
        return self.optimizer in LLM_OPTIMIZERS

    @property
    def has_policy(self) -> bool:
        return self.optimizer == "multi_agent" or self.optimizer.startswith(SCRIPTED_PREFIX)


def parse_optimizer(name: str) -> tuple[str, str | None]:
    if name in BASELINES or name in LLM_OPTIMIZERS:
        return name, None
    if name.startswith(SCRIPTED_PREFIX):
        schedule = name[len(SCRIPTED_PREFIX):]
        if schedule not in agents.SCHEDULES:
            raise ConfigError(f"unknown schedule {schedule!r}; choose from {list(agents.SCHEDULES)}")
        return "multi_agent_scripted", schedule
    raise ConfigError(
        f"unknown optimizer {name!r}; choose from {list(BASELINES + LLM_OPTIMIZERS)} "
        f"or {SCRIPTED_PREFIX}<schedule>"
    )


def load_config(path=None, **overrides) -> RunConfig:
    """Read a flat TOML key/value file; keyword overrides (CLI flags) win."""
    values = {}
    if path is not None:
        try:
            with open(path, "rb") as fh:
                values = tomllib.load(fh)
        except (OSError, tomllib.TOMLDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
    known = {f.name for f in dataclasses.fields(RunConfig)}
    unknown = sorted(set(values) - known)
    if unknown:
        raise ConfigError(f"unknown config keys: {unknown}")
    nested = [k for k, v in values.items() if isinstance(v, dict)]
    if nested:
        raise ConfigError(f"config must be flat; tables found for {nested}")
    values.update({k: v for k, v in overrides.items() if v is not None})
    if isinstance(values.get("criteria"), list):
        values["criteria"] = tuple(values["criteria"])
    return RunConfig(**values)


class CountingEvaluator:
    def __init__(self, fn: Callable):
        self.fn = fn
        self.calls = 0

    def __call__(self, x) -> float:
        self.calls += 1
        return float(self.fn(np.asarray(x, dtype=float)))


@dataclass
class RunResult:
    records: list[RunRecord]
    transcripts: list[AgentTranscript]
    config: RunConfig
    spec: ProblemSpec
    best_point: tuple[float, ...] | None
    best_value: float | None
    n_evaluations: int
    csv_path: Path | None = None
    transcript_path: Path | None = None


class _RandomStep:
    def __init__(self, cfg, spec):
        self.rng = np.random.default_rng([cfg.seed, 1])
        self.spec = spec

    def __call__(self, history, t):
        return uniform_points(self.spec, 1, self.rng)[0], None


class _GpStep:
    def __init__(self, cfg, spec, kind):
        self.cfg, self.spec, self.kind = cfg, spec, kind

    def __call__(self, history, t):
        model = gp_fit(history, warp=self.cfg.gp_warp)
        if self.kind == "gp_ei":
            acq = ei_acquisition(model, model.best_target)
        else:
            acq = ucb_acquisition(model, self.cfg.beta)
        seed = derive_seed(self.cfg.seed, t, 2)
        return maximize_acquisition(model, self.spec, acq, self.cfg.acq_pool_size, seed), None


class _MultiAgentStep:
    def __init__(self, cfg, spec, strategy, generation):
        self.cfg, self.spec = cfg, spec
        self.strategy, self.generation = strategy, generation

    def __call__(self, history, t):
        summary = improvement_window(history)
        weights = self.strategy.propose_weights(history, summary, self.cfg.criteria, t, self.cfg.budget)
        x = self.generation.propose_candidate(history, weights, self.spec, derive_seed(self.cfg.seed, t, 3))
        return x, weights


class _SingleAgentStep:
    def __init__(self, cfg, spec, agent):
        self.cfg, self.spec, self.agent = cfg, spec, agent

    def __call__(self, history, t):
        summary = improvement_window(history)
        seed = derive_seed(self.cfg.seed, t, 4)
        return self.agent.propose(history, self.spec, summary, t, self.cfg.budget, seed), None


def _build_step(cfg: RunConfig, spec: ProblemSpec, client, clock):
    kind, schedule = parse_optimizer(cfg.optimizer)
    if kind == "random":
        return _RandomStep(cfg, spec), []
    if kind in ("gp_ei", "gp_ucb"):
        return _GpStep(cfg, spec, kind), []
    if kind == "multi_agent_scripted":
        strategy = agents.scripted_strategy(schedule)
        return _MultiAgentStep(cfg, spec, strategy, agents.PoolGeneration(cfg.pool_size)), [strategy]
    if client is None:
        raise ConfigError(f"optimizer {cfg.optimizer!r} needs an LLM client")
    templates = PromptTemplates.load(cfg.templates_dir)
    kw = {"clock": clock, "max_entries": cfg.max_history_entries}
    if kind == "single_agent":
        agent = agents.SingleAgent(client, templates, cfg.criteria, **kw)
        return _SingleAgentStep(cfg, spec, agent), [agent]
    strategy = agents.LLMStrategy(client, templates, cfg.criteria, **kw)
    generation = agents.LLMGeneration(client, templates, agents.PoolGeneration(cfg.pool_size), **kw)
    return _MultiAgentStep(cfg, spec, strategy, generation), [strategy, generation]


def _combined_outcome(parts) -> str | None:
    outcomes = [getattr(p, "last_outcome", None) for p in parts]
    return max(outcomes, key=OUTCOME_RANK.__getitem__) if outcomes else None


def default_client(cfg: RunConfig):
    return HttpChatClient(cfg.client_config()) if cfg.uses_llm else None


def run_optimization(cfg: RunConfig, client=None, *, run_name: str | None = None) -> RunResult:
    """Run one budgeted optimization; writes CSV and transcript when ``cfg.output_dir`` is set."""
    bench: Benchmark = make_benchmark(cfg.benchmark, cfg.benchmark_seed, cfg.dim)
    spec = bench.spec
    clock = time.perf_counter if cfg.record_timing else (lambda: 0.0)
    if client is None and cfg.uses_llm:
        client = default_client(cfg)
    step, parts = _build_step(cfg, spec, client, clock)
    evaluate = CountingEvaluator(bench.evaluate)
    history = History(spec)
    records: list[RunRecord] = []
    transcripts: list[AgentTranscript] = []
    seen = [0] * len(parts)
    init = uniform_points(spec, cfg.n_init, np.random.default_rng([cfg.seed, 0]))

    def result():
        best = best_so_far(history) if len(history) else None
        return RunResult(
            records, transcripts, cfg, spec,
            best.point if best else None, best.value if best else None, evaluate.calls,
        )

    try:
        for t in range(1, cfg.budget + 1):
            t0 = clock()
            weights, outcome = None, None
            if t <= cfg.n_init:
                x = init[t - 1]
            else:
                x, weights = step(history, t)
                outcome = _combined_outcome(parts) if cfg.uses_llm else None
            for i, part in enumerate(parts):
                new = getattr(part, "transcripts", [])
                transcripts.extend(new[seen[i]:])
                seen[i] = len(new)
            y = evaluate(x)
            history.append(x, y)
            records.append(
                RunRecord(t, history[-1].point, y, best_so_far(history).value, weights, (clock() - t0) * 1000.0, outcome)
            )
    except Exception as exc:
        partial = result()
        if cfg.output_dir:
            _write_outputs(partial, run_name)
        raise RunError(f"run {run_name or cfg.seed} stopped at iteration {len(records) + 1}: {exc}", partial) from exc
    out = result()
    if cfg.output_dir:
        _write_outputs(out, run_name)
    return out


def _default_name(cfg: RunConfig) -> str:
    return f"{cfg.benchmark}_{cfg.optimizer.replace(':', '-')}_seed{cfg.seed}"


def _write_outputs(res: RunResult, run_name: str | None):
    cfg = res.config
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    name = run_name or _default_name(cfg)
    res.csv_path = write_run_csv(out / f"{name}.csv", res.records, res.spec.dim, cfg.has_policy)
    header = {
        "config_hash": cfg.config_hash(),
        "run_seed": cfg.seed,
        "benchmark": cfg.benchmark,
        "optimizer": cfg.optimizer,
    }
    res.transcript_path = write_transcript(out / f"{name}.transcript.txt", res.transcripts, header)


def csv_columns(dim: int) -> list[str]:
    return (
        ["iteration"]
        + [f"x_{j}" for j in range(1, dim + 1)]
        + ["y", "best_so_far"]
        + [f"w_{c}" for c in CRITERIA]
        + ["parse_outcome", "wall_time_ms"]
    )


def _num(v) -> str:
    return repr(float(v))


def write_run_csv(path, records, dim: int, policy: bool = False) -> Path:
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(csv_columns(dim))
        for r in records:
            weights = [_num(v) for v in r.weights.full().values()] if r.weights is not None else [""] * len(CRITERIA)
            w.writerow(
                [r.iteration, *(_num(v) for v in r.point), _num(r.value), _num(r.best_so_far), *weights,
                 r.parse_outcome or "", _num(r.wall_time_ms)]
            )
    return path


def read_run_csv(path) -> dict[str, list]:
    """Columns of a run CSV; numeric cells as floats, empty cells as None."""
    path = Path(path)
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise ResultsFileError(f"cannot read {path}: {exc}") from None
    if not rows or rows[0][:1] != ["iteration"] or "best_so_far" not in rows[0] or "y" not in rows[0]:
        raise ResultsFileError(f"{path} is not a run CSV")
    header = rows[0]
    cols = {h: [] for h in header}
    for lineno, row in enumerate(rows[1:], 2):
        if len(row) != len(header):
            raise ResultsFileError(f"{path}:{lineno}: expected {len(header)} cells, found {len(row)}")
        for h, cell in zip(header, row):
            if h == "parse_outcome":
                cols[h].append(cell or None)
                continue
            try:
                cols[h].append(float(cell) if cell != "" else None)
            except ValueError:
                raise ResultsFileError(f"{path}:{lineno}: bad value {cell!r} in column {h}") from None
    return cols


@dataclass
class SuiteSummary:
    results: list[RunResult]
    failures: list[tuple[int, int, str]]
    rows: list[dict] = field(default_factory=list)
    summary_path: Path | None = None

    @property
    def ok(self) -> bool:
        return bool(self.results)


def summarize_best(curves: list[list[float]], budget: int) -> list[dict]:
    """Per-iteration median and quartiles of best-so-far across runs."""
    rows = []
    for t in range(budget):
        vals = np.array([c[t] for c in curves], dtype=float)
        q25, med, q75 = np.percentile(vals, [25, 50, 75]) if len(vals) else (np.nan,) * 3
        rows.append({"iteration": t + 1, "n_runs": len(vals), "median": float(med), "q25": float(q25), "q75": float(q75)})
    return rows


def run_suite(cfg: RunConfig, client_factory: Callable[[int], object] | None = None) -> SuiteSummary:
    """Run ``cfg.repetitions`` runs with seeds ``seed, seed+1, ...`` and summarize them.

    A failing run is logged and recorded; the remaining repetitions still run.
    """
    results, failures = [], []
    for i in range(cfg.repetitions):
        run_cfg = dataclasses.replace(cfg, seed=cfg.seed + i)
        try:
            client = client_factory(i) if client_factory else default_client(run_cfg)
            results.append(run_optimization(run_cfg, client, run_name=f"run_{i:03d}"))
        except PolicyscopeError as exc:
            log.error("repetition %d (seed %d) failed: %s", i, run_cfg.seed, exc)
            failures.append((i, run_cfg.seed, str(exc)))
    rows = summarize_best([[r.best_so_far for r in res.records] for res in results], cfg.budget)
    summary = SuiteSummary(results, failures, rows)
    if cfg.output_dir:
        out = Path(cfg.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        summary.summary_path = out / "summary.csv"
        with open(summary.summary_path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["iteration", "n_runs", "median", "q25", "q75"])
            for row in rows:
                w.writerow([row["iteration"], row["n_runs"], _num(row["median"]), _num(row["q25"]), _num(row["q75"])])
        if failures:
            with open(out / "failures.txt", "w", encoding="utf-8") as fh:
                for i, seed, msg in failures:
                    fh.write(f"run_{i:03d} seed={seed} FAILED: {msg}\n")
    return summary


def replay(transcript_path, cfg: RunConfig, output_dir=None, run_name: str | None = None) -> RunResult:
    """Re-run a recorded run, serving the recorded responses instead of calling a model."""
    tf = read_transcript(transcript_path)
    recorded = tf.header.get("config_hash")
    if recorded != cfg.config_hash():
        raise ReplayError(
            f"config hash mismatch: transcript {transcript_path} was recorded with {recorded}, "
            f"the given config hashes to {cfg.config_hash()}"
        )
    try:
        seed = int(tf.header["run_seed"])
    except (KeyError, ValueError):
        raise ReplayError(f"{transcript_path}: missing run_seed header") from None
    client = MockClient([t.response for t in tf.transcripts])
    run_cfg = dataclasses.replace(cfg, seed=seed, output_dir=str(output_dir) if output_dir else None)
    return run_optimization(run_cfg, client, run_name=run_name)


def replay_suite(directory, cfg: RunConfig, output_dir) -> list[RunResult]:
    paths = sorted(Path(directory).glob("*.transcript.txt"))
    if not paths:
        raise ReplayError(f"no transcript files in {directory}")
    return [replay(p, cfg, output_dir, p.name[: -len(".transcript.txt")]) for p in paths]
