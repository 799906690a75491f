"""Explicit search policies for LLM-mediated black-box optimization.

A strategy agent weights four search criteria (exploitation, informativeness,
diversity, representativeness); a generation agent proposes the next point
under those weights. Single-agent, scripted, random and GP baselines run
through the same loop.
"""

from .agents import (
    LLMGeneration,
    LLMStrategy,
    PoolGeneration,
    ScriptedStrategy,
    SingleAgent,
    llm_generation,
    llm_strategy,
    pool_generation,
    scripted_strategy,
    single_agent,
)
from .benchmarks import Benchmark, list_benchmarks, make_benchmark, robot_push, rosenbrock, synthetic_hpt
from .core import (
    CRITERIA,
    Evaluation,
    History,
    ProblemSpec,
    RunRecord,
    StagnationSummary,
    WeightVector,
    best_so_far,
    improvement_window,
    normalize_point,
)
from .harness import RunConfig, RunResult, load_config, replay, run_optimization, run_suite
from .llm_client import ClientConfig, HttpChatClient, MockClient, mock_client
from .transcript import AgentTranscript

__version__ = "0.1.0"
