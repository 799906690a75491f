"""Prompt templates, history serialization and parsing of delimited model output."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .core import (
    CRITERIA,
    INTEGER,
    MAXIMIZE,
    History,
    ProblemSpec,
    StagnationSummary,
    WeightVector,
    best_so_far,
    canonical_criteria,
)
from .errors import ParseError, RenderError, ValidationError

WEIGHTS_DELIM = "** weights **"
PARAMS_DELIM = "## parameters ##"
SECTIONS = (
    "system_preamble",
    "problem_context",
    "history_block",
    "summary_block",
    "metric_definitions",
    "weights_block",
    "output_format",
)
_PLACEHOLDER = re.compile(r"\{\{\s*(\w+)\s*\}\}")
_SECTION = re.compile(r"^\[\[(\w+)\]\]$")
_NUMBER = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"

DEFINITIONS = {
    "exploitation": (
        "Prefer candidates expected to improve on the best objective value observed so far. "
        "Scored by an inverse-distance-weighted prediction of the objective from the evaluated "
        "points, rescaled so that 1 matches the best observation and 0 the worst."
    ),
    "informativeness": (
        "Prefer candidates in under-explored, uncertain regions. Scored by the distance from the "
        "candidate to its nearest evaluated point, relative to the diameter of the search box."
    ),
    "diversity": (
        "Prefer candidates that spread the evaluations over the whole search space. Scored by the "
        "mean distance from the candidate to all evaluated points, relative to the diameter of "
        "the search box."
    ),
    "representativeness": (
        "Prefer candidates that reflect the overall structure of the sampled region. Scored by "
        "closeness to the nearest center of a small k-means clustering of the evaluated points."
    ),
}


def fmt(v: float) -> str:
    """Six significant digits, trailing zeros kept."""
    return format(float(v), "#.6g")


def fmt_point(p) -> str:
    return "(" + ", ".join(fmt(v) for v in p) + ")"


@dataclass(frozen=True)
class RenderedPrompt:
    system: str
    user: str

    @property
    def text(self) -> str:
        return self.system + "\n\n" + self.user


@dataclass(frozen=True)
class PromptTemplate:
    name: str
    sections: tuple[tuple[str, str], ...]

    def placeholders(self) -> set[str]:
        return {m.group(1) for _, body in self.sections for m in _PLACEHOLDER.finditer(body)}

    def render(self, values: Mapping[str, str]) -> RenderedPrompt:
        def sub(m):
            key = m.group(1)
            if key not in values:
                raise RenderError(key)
            return str(values[key])

        rendered = {name: _PLACEHOLDER.sub(sub, body) for name, body in self.sections}
        system = rendered.get("system_preamble", "")
        user = "\n\n".join(body for name, body in rendered.items() if name != "system_preamble")
        return RenderedPrompt(system, user)


def parse_template(text: str, name: str = "template") -> PromptTemplate:
    sections: list[list] = []
    for line in text.splitlines():
        m = _SECTION.match(line.strip())
        if m:
            if m.group(1) not in SECTIONS:
                raise ValidationError(f"{name}: unknown section {m.group(1)!r}")
            sections.append([m.group(1), []])
        elif sections:
            sections[-1][1].append(line)
        elif line.strip() and not line.startswith("#"):
            raise ValidationError(f"{name}: text before the first section")
    return PromptTemplate(name, tuple((s, "\n".join(body).strip("\n")) for s, body in sections))


def load_template(name: str, directory: str | Path | None = None) -> PromptTemplate:
    """Load ``<name>.txt`` from ``directory`` or from the bundled templates."""
    if directory is not None:
        text = Path(directory, f"{name}.txt").read_text(encoding="utf-8")
    else:
        text = resources.files("policyscope").joinpath("templates", f"{name}.txt").read_text(encoding="utf-8")
    return parse_template(text, name)


@dataclass(frozen=True)
class PromptTemplates:
    strategy: PromptTemplate
    generation: PromptTemplate
    single: PromptTemplate

    @classmethod
    def load(cls, directory: str | Path | None = None) -> "PromptTemplates":
        return cls(*(load_template(n, directory) for n in ("strategy", "generation", "single")))


def serialize_history(h: History, max_entries: int | None = None) -> str:
    """One line per evaluation in chronological order.

    When the history is longer than ``max_entries`` only the most recent
    entries are listed, preceded by a line giving the number of omitted
    entries and the best value among them.
    """
    if len(h) == 0:
        return "No evaluations yet."
    evals = h.evaluations
    lines = []
    if max_entries is not None and len(evals) > max_entries:
        omitted = evals[: len(evals) - max_entries]
        head = History(h.problem, omitted)
        best = best_so_far(head)
        lines.append(
            f"({len(omitted)} earlier evaluations omitted; best among them: "
            f"iter={best.iteration} y={fmt(best.value)})"
        )
        evals = evals[len(omitted) :] if max_entries > 0 else ()
    lines.extend(f"iter={e.iteration} x={fmt_point(e.point)} y={fmt(e.value)}" for e in evals)
    return "\n".join(lines)


def metric_definitions_text(active: Sequence[str]) -> str:
    active = canonical_criteria(active)
    return "\n\n".join(f"* {name}: {DEFINITIONS[name]}" for name in active)


def problem_context(spec: ProblemSpec) -> str:
    goal = "maximize" if spec.sense == MAXIMIZE else "minimize"
    lines = [spec.description.strip()] if spec.description.strip() else []
    lines.append(f"Objective: {goal} the returned value.")
    lines.append(f"Number of variables: {spec.dim}.")
    lines.append("Variables, kinds and bounds (inclusive):")
    for j, ((lo, hi), kind) in enumerate(zip(spec.bounds, spec.kinds), 1):
        if kind == INTEGER:
            lines.append(f"- x{j}: integer, bounds [{int(lo)}, {int(hi)}]")
        else:
            lines.append(f"- x{j}: continuous, bounds [{fmt(lo)}, {fmt(hi)}]")
    return "\n".join(lines)


def summary_text(h: History, summary: StagnationSummary | None, iteration: int, budget: int) -> str:
    lines = [f"This is evaluation {iteration} of a budget of {budget}."]
    if len(h):
        best = best_so_far(h)
        lines.append(f"Best value so far: y={fmt(best.value)} at x={fmt_point(best.point)} (iter={best.iteration}).")
    if summary is not None:
        lines.append(
            f"Relative change of the best value over the last {summary.window} evaluations: "
            f"{fmt(summary.relative_improvement)}."
        )
        lines.append("The search appears to be stagnating." if summary.stagnating else "The search is not stagnating.")
    return "\n".join(lines)


def format_weights(w: WeightVector) -> str:
    return "\n".join(f"- {name} = {value:.6f}" for name, value in zip(w.active_criteria, w.values))


def _parameters_example(spec: ProblemSpec) -> str:
    mid = spec.clamp((spec.lower + spec.upper) / 2.0)
    return ", ".join(str(int(v)) if k == INTEGER else fmt(v) for v, k in zip(mid, spec.kinds))


def _common(spec: ProblemSpec, h: History, max_entries: int | None) -> dict:
    return {
        "problem_context": problem_context(spec),
        "history": serialize_history(h, max_entries),
        "variable_order": ", ".join(f"x{j}" for j in range(1, spec.dim + 1)),
        "parameters_example": _parameters_example(spec),
    }


def render_strategy_prompt(
    spec: ProblemSpec,
    h: History,
    summary: StagnationSummary | None,
    active: Sequence[str],
    iteration: int,
    budget: int,
    template: PromptTemplate | None = None,
    max_entries: int | None = None,
) -> RenderedPrompt:
    active = canonical_criteria(active)
    values = _common(spec, h, max_entries)
    values["summary"] = summary_text(h, summary, iteration, budget)
    values["metric_definitions"] = metric_definitions_text(active)
    values["weights_example"] = "\n".join(f"{name}: <weight>" for name in active)
    return (template or load_template("strategy")).render(values)


def render_generation_prompt(
    spec: ProblemSpec,
    h: History,
    weights: WeightVector,
    template: PromptTemplate | None = None,
    max_entries: int | None = None,
) -> RenderedPrompt:
    values = _common(spec, h, max_entries)
    values["metric_definitions"] = metric_definitions_text(weights.active_criteria)
    values["weights"] = format_weights(weights)
    return (template or load_template("generation")).render(values)


def render_single_prompt(
    spec: ProblemSpec,
    h: History,
    summary: StagnationSummary | None,
    iteration: int,
    budget: int,
    template: PromptTemplate | None = None,
    active: Sequence[str] = CRITERIA,
    max_entries: int | None = None,
) -> RenderedPrompt:
    values = _common(spec, h, max_entries)
    values["summary"] = summary_text(h, summary, iteration, budget)
    values["metric_definitions"] = metric_definitions_text(active)
    return (template or load_template("single")).render(values)


def extract_segment(text: str, delim: str) -> str:
    start = text.find(delim)
    if start < 0:
        raise ParseError(f"the response contains no `{delim}` markers; enclose the answer between two of them")
    start += len(delim)
    end = text.find(delim, start)
    if end < 0:
        raise ParseError(f"the response opens a `{delim}` block but never closes it with a second `{delim}`")
    segment = text[start:end]
    if not segment.strip():
        raise ParseError(f"the `{delim}` block is empty")
    return segment


_WEIGHT_PAIR = re.compile(r"[\"']?([A-Za-z_]+)[\"']?\s*[:=]\s*(" + _NUMBER + r")")


def parse_weights(text: str, active: Sequence[str]) -> WeightVector:
    """Read ``name: value`` pairs (or a JSON-style object) from the first weights block."""
    active = canonical_criteria(active)
    segment = extract_segment(text, WEIGHTS_DELIM)
    raw: dict[str, float] = {}
    for name, value in _WEIGHT_PAIR.findall(segment):
        name = name.strip().lower()
        if name in active and name not in raw:
            raw[name] = float(value)
    if not raw:
        raise ParseError(
            "no numeric weights were found for the criteria "
            + ", ".join(active)
            + "; write one `name: value` pair per criterion inside the weights block"
        )
    if any(not math.isfinite(v) for v in raw.values()):
        raise ParseError("weights must be finite numbers")
    clamped = {k: max(0.0, v) for k, v in raw.items()}
    if sum(clamped.values()) <= 0:
        raise ParseError("all weights are zero or negative; at least one weight must be positive")
    return WeightVector.from_raw(clamped, active)


_PARAM_PAIR = re.compile(r"x\s*(\d+)\s*[=:]\s*([^,;\s]+)", re.IGNORECASE)


def _number(token: str, where: str) -> float:
    try:
        v = float(token)
    except ValueError:
        raise ParseError(f"{where}: {token!r} is not a number") from None
    if not math.isfinite(v):
        raise ParseError(f"{where}: {token!r} is not a finite number")
    return v


def parse_parameters(text: str, spec: ProblemSpec) -> np.ndarray:
    """Read one candidate from the first parameters block, clamped and rounded to the domain."""
    segment = extract_segment(text, PARAMS_DELIM)
    body = segment.strip().strip("[](){}").strip()
    if re.search(r"x\s*\d+\s*[=:]", body, re.IGNORECASE):
        pairs = _PARAM_PAIR.findall(body)
        values: dict[int, float] = {}
        for idx, token in pairs:
            i = int(idx)
            if not 1 <= i <= spec.dim:
                raise ParseError(f"x{i} is not a variable; expected x1 to x{spec.dim}")
            if i in values:
                raise ParseError(f"x{i} is given more than once")
            values[i] = _number(token.rstrip(")]}"), f"x{i}")
        if len(values) != spec.dim:
            missing = [f"x{i}" for i in range(1, spec.dim + 1) if i not in values]
            raise ParseError(f"expected {spec.dim} values, found {len(values)} (missing {', '.join(missing)})")
        point = [values[i] for i in range(1, spec.dim + 1)]
    else:
        tokens = [t for t in re.split(r"[,;\s]+", body) if t]
        if len(tokens) != spec.dim:
            raise ParseError(f"expected {spec.dim} values, found {len(tokens)}")
        point = [_number(t, f"value {j}") for j, t in enumerate(tokens, 1)]
    return spec.clamp(np.array(point, dtype=float))
