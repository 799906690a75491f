"""Strategy and generation agents.

A strategy agent turns the search state into a :class:`WeightVector`; a
generation agent turns a weight vector into the next point. Both come in an
LLM-backed flavour and a deterministic one, and :class:`SingleAgent` is the
baseline that does both jobs in a single prompt.

LLM-backed agents follow the same ladder on unparsable output: one corrective
re-ask carrying the parser's complaint, then a deterministic fallback. Every
call is logged as an :class:`AgentTranscript`.
"""

from __future__ import annotations

import time
from typing import Callable, Protocol, Sequence

import numpy as np

from .core import (
    CRITERIA,
    History,
    ProblemSpec,
    StagnationSummary,
    WeightVector,
    best_so_far,
    canonical_criteria,
    denormalize_point,
    derive_seed,
    normalize_point,
    uniform_points,
)
from .errors import ParseError, ValidationError
from .llm_client import ChatRequest
from .metrics import DEFAULT_CLUSTERS, fit_clusters, score_pool
from .prompts import (
    PromptTemplates,
    RenderedPrompt,
    parse_parameters,
    parse_weights,
    render_generation_prompt,
    render_single_prompt,
    render_strategy_prompt,
)
from .transcript import AgentTranscript

SCHEDULES = ("pure_exploit", "pure_explore_informativeness", "uniform", "epsilon_decay")
POOL_SIZE = 512
POOL_LOCAL_FRACTION = 0.25
POOL_LOCAL_SIGMA = 0.1
EPSILON_FLOOR = 0.05


class StrategyAgent(Protocol):
    def propose_weights(
        self,
        history: History,
        summary: StagnationSummary,
        active_criteria: Sequence[str],
        iteration: int,
        budget: int,
    ) -> WeightVector: ...


class GenerationAgent(Protocol):
    def propose_candidate(self, history: History, weights: WeightVector, spec: ProblemSpec, seed: int) -> np.ndarray: ...


class ScriptedStrategy:
    """Fixed weight schedules, for running the decomposed loop without an LLM."""

    def __init__(self, schedule: str):
        if schedule not in SCHEDULES:
            raise ValidationError(f"unknown schedule {schedule!r}; choose from {list(SCHEDULES)}")
        self.schedule = schedule
        self.last_outcome = None

    def propose_weights(self, history, summary, active_criteria, iteration, budget) -> WeightVector:
        active = canonical_criteria(active_criteria)
        if self.schedule == "pure_exploit":
            return WeightVector.unit("exploitation", active)
        if self.schedule == "pure_explore_informativeness":
            return WeightVector.unit("informativeness", active)
        if self.schedule == "uniform":
            return WeightVector.uniform(active)
        missing = {"exploitation", "informativeness"} - set(active)
        if missing:
            raise ValidationError(f"epsilon_decay needs active criteria {sorted(missing)}")
        eps = max(EPSILON_FLOOR, 1.0 - iteration / budget)
        return WeightVector.from_raw({"informativeness": eps, "exploitation": 1.0 - eps}, active)


def scripted_strategy(schedule: str) -> ScriptedStrategy:
    return ScriptedStrategy(schedule)


def candidate_pool(history: History, spec: ProblemSpec, pool_size: int, seed: int) -> np.ndarray:
    """Uniform samples plus Gaussian perturbations of the incumbent, in bounds.

    A quarter of the pool (rounded down) is local; with an empty history the
    whole pool is uniform.
    """
    if pool_size < 1:
        raise ValidationError(f"pool_size must be >= 1, got {pool_size}")
    rng = np.random.default_rng(seed)
    n_local = int(pool_size * POOL_LOCAL_FRACTION) if len(history) else 0
    U = rng.random((pool_size - n_local, spec.dim))
    if n_local:
        center = normalize_point(best_so_far(history).point, spec)
        local = np.clip(center + POOL_LOCAL_SIGMA * rng.standard_normal((n_local, spec.dim)), 0.0, 1.0)
        U = np.vstack([U, local])
    return spec.clamp(denormalize_point(U, spec))


class PoolGeneration:
    """Picks the pool point with the highest weighted criterion score."""

    def __init__(self, pool_size: int = POOL_SIZE, n_clusters: int = DEFAULT_CLUSTERS):
        if pool_size < 1:
            raise ValidationError(f"pool_size must be >= 1, got {pool_size}")
        self.pool_size = pool_size
        self.n_clusters = n_clusters
        self.last_outcome = None

    def propose_candidate(self, history, weights, spec, seed) -> np.ndarray:
        pool = candidate_pool(history, spec, self.pool_size, seed)
        if len(history) == 0:
            return pool[0]
        model = None
        if "representativeness" in weights.active_criteria:
            model = fit_clusters(history, self.n_clusters, derive_seed(seed, 1))
        scores = score_pool(pool, history, weights, model)
        return pool[int(np.argmax(scores))]


def pool_generation(pool_size: int = POOL_SIZE) -> PoolGeneration:
    return PoolGeneration(pool_size)


class _LLMAgent:
    role = ""

    def __init__(self, client, templates: PromptTemplates | None = None, clock: Callable[[], float] = time.perf_counter,
                 max_entries: int | None = None):
        self.client = client
        self.templates = templates or PromptTemplates.load()
        self.clock = clock
        self.max_entries = max_entries
        self.transcripts: list[AgentTranscript] = []
        self.last_outcome = None

    def _call(self, prompt: RenderedPrompt) -> tuple[str, float]:
        t0 = self.clock()
        resp = self.client.complete(ChatRequest.of(prompt.system, prompt.user))
        return resp.content, (self.clock() - t0) * 1000.0

    def _ask(self, prompt: RenderedPrompt, parse, iteration: int):
        """Returns ``(value, outcome)``; ``value`` is None when the fallback is due."""
        text, ms = self._call(prompt)
        try:
            value = parse(text)
        except ParseError as err:
            self.transcripts.append(AgentTranscript(iteration, self.role, prompt.text, text, "retried", ms))
            problem = err.description
        else:
            self.transcripts.append(AgentTranscript(iteration, self.role, prompt.text, text, "ok", ms))
            return value, "ok"
        retry = RenderedPrompt(
            prompt.system,
            prompt.user
            + "\n\n## Correction\nYour previous answer could not be used: "
            + problem
            + ". Answer again and follow the output format exactly.",
        )
        text, ms = self._call(retry)
        try:
            value = parse(text)
        except ParseError:
            self.transcripts.append(AgentTranscript(iteration, self.role, retry.text, text, "fallback", ms))
            return None, "fallback"
        self.transcripts.append(AgentTranscript(iteration, self.role, retry.text, text, "retried", ms))
        return value, "retried"


class LLMStrategy(_LLMAgent):
    role = "strategy"

    def __init__(self, client, templates=None, active_criteria: Sequence[str] = CRITERIA, **kw):
        super().__init__(client, templates, **kw)
        self.active_criteria = canonical_criteria(active_criteria)

    def propose_weights(self, history, summary, active_criteria, iteration, budget) -> WeightVector:
        active = canonical_criteria(active_criteria or self.active_criteria)
        prompt = render_strategy_prompt(
            history.problem, history, summary, active, iteration, budget, self.templates.strategy, self.max_entries
        )
        weights, self.last_outcome = self._ask(prompt, lambda text: parse_weights(text, active), iteration)
        return weights if weights is not None else WeightVector.uniform(active)


def llm_strategy(client, templates=None, active_criteria: Sequence[str] = CRITERIA, **kw) -> LLMStrategy:
    return LLMStrategy(client, templates, active_criteria, **kw)


class LLMGeneration(_LLMAgent):
    role = "generation"

    def __init__(self, client, templates=None, fallback: PoolGeneration | None = None, **kw):
        super().__init__(client, templates, **kw)
        self.fallback = fallback or PoolGeneration()

    def propose_candidate(self, history, weights, spec, seed) -> np.ndarray:
        prompt = render_generation_prompt(spec, history, weights, self.templates.generation, self.max_entries)
        point, self.last_outcome = self._ask(prompt, lambda text: parse_parameters(text, spec), len(history) + 1)
        if point is None:
            point = self.fallback.propose_candidate(history, weights, spec, seed)
        return point


def llm_generation(client, templates=None, **kw) -> LLMGeneration:
    return LLMGeneration(client, templates, **kw)


class SingleAgent(_LLMAgent):
    """One prompt per iteration that reasons about the trade-off and emits the point."""

    role = "single"

    def __init__(self, client, templates=None, active_criteria: Sequence[str] = CRITERIA, **kw):
        super().__init__(client, templates, **kw)
        self.active_criteria = canonical_criteria(active_criteria)

    def propose(self, history, spec, summary, iteration, budget, seed) -> np.ndarray:
        prompt = render_single_prompt(
            spec, history, summary, iteration, budget, self.templates.single, self.active_criteria, self.max_entries
        )
        point, self.last_outcome = self._ask(prompt, lambda text: parse_parameters(text, spec), iteration)
        if point is None:
            point = uniform_points(spec, 1, np.random.default_rng(seed))[0]
        return point


def single_agent(client, templates=None, **kw) -> SingleAgent:
    return SingleAgent(client, templates, **kw)
