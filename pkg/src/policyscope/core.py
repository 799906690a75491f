"""Shared domain types: problems, evaluation histories, search policies, run records."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import DomainError, StateError, ValidationError

CRITERIA = ("exploitation", "informativeness", "diversity", "representativeness")

CONTINUOUS = "continuous"
INTEGER = "integer"
MAXIMIZE = "maximize"
MINIMIZE = "minimize"

STAGNATION_WINDOW = 5
STAGNATION_THRESHOLD = 1e-3


def round_half_away(x):
    x = np.asarray(x, dtype=float)
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


def canonical_criteria(names: Iterable[str]) -> tuple[str, ...]:
    """Validate criterion names and return them in canonical order."""
    names = [str(n).strip() for n in names]
    if not names:
        raise ValidationError("at least one criterion must be active")
    unknown = [n for n in names if n not in CRITERIA]
    if unknown:
        raise ValidationError(f"unknown criteria {unknown}; expected a subset of {list(CRITERIA)}")
    if len(set(names)) != len(names):
        raise ValidationError(f"duplicate criteria in {names}")
    return tuple(c for c in CRITERIA if c in names)


@dataclass(frozen=True)
class ProblemSpec:
    name: str
    dim: int
    bounds: tuple[tuple[float, float], ...]
    kinds: tuple[str, ...] = None
    sense: str = MAXIMIZE
    description: str = ""

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 1:
            raise ValidationError(f"dim must be a positive integer, got {self.dim!r}")
        bounds = tuple((float(lo), float(hi)) for lo, hi in self.bounds)
        if len(bounds) != self.dim:
            raise ValidationError(f"expected {self.dim} bound pairs, got {len(bounds)}")
        kinds = tuple(self.kinds) if self.kinds is not None else (CONTINUOUS,) * self.dim
        if len(kinds) != self.dim:
            raise ValidationError(f"expected {self.dim} kinds, got {len(kinds)}")
        for j, ((lo, hi), kind) in enumerate(zip(bounds, kinds)):
            if not lo < hi:
                raise ValidationError(f"dimension {j + 1}: lower bound {lo} is not below upper bound {hi}")
            if kind not in (CONTINUOUS, INTEGER):
                raise ValidationError(f"dimension {j + 1}: unknown kind {kind!r}")
            if kind == INTEGER and (lo != math.floor(lo) or hi != math.floor(hi)):
                raise ValidationError(f"dimension {j + 1}: integer dimension needs integral bounds")
        if self.sense not in (MAXIMIZE, MINIMIZE):
            raise ValidationError(f"sense must be {MAXIMIZE!r} or {MINIMIZE!r}, got {self.sense!r}")
        object.__setattr__(self, "bounds", bounds)
        object.__setattr__(self, "kinds", kinds)

    @property
    def lower(self) -> np.ndarray:
        return np.array([b[0] for b in self.bounds])

    @property
    def upper(self) -> np.ndarray:
        return np.array([b[1] for b in self.bounds])

    @property
    def integer_mask(self) -> np.ndarray:
        return np.array([k == INTEGER for k in self.kinds])

    @property
    def sign(self) -> float:
        """Multiplier taking raw objective values to the internal maximize sense."""
        return 1.0 if self.sense == MAXIMIZE else -1.0

    def clamp(self, points):
        """Clip to the box and round integer dimensions half away from zero.

        Accepts a single point or an ``(n, dim)`` array.
        """
        p = np.clip(np.asarray(points, dtype=float), self.lower, self.upper)
        mask = self.integer_mask
        if mask.any():
            p = p.copy()
            p[..., mask] = round_half_away(p[..., mask])
        return p

    def contains(self, point, atol=0.0) -> bool:
        p = np.asarray(point, dtype=float)
        if p.shape != (self.dim,) or not np.all(np.isfinite(p)):
            return False
        if np.any(p < self.lower - atol) or np.any(p > self.upper + atol):
            return False
        ints = p[self.integer_mask]
        return bool(np.all(ints == np.round(ints)))


@dataclass(frozen=True)
class Evaluation:
    point: tuple[float, ...]
    value: float
    iteration: int


class History:
    """Append-only record of evaluations for one problem.

    Values are stored in the problem's own sense; ``signed_values`` gives the
    internal maximize-sense view used by metrics and surrogates.
    """

    def __init__(self, problem: ProblemSpec, evaluations: Iterable[Evaluation] = ()):
        self.problem = problem
        self._evals: list[Evaluation] = []
        for ev in evaluations:
            self.append(ev.point, ev.value)

    def append(self, point, value) -> Evaluation:
        p = np.asarray(point, dtype=float)
        if not self.problem.contains(p):
            raise DomainError(f"point {tuple(p)} is outside the domain of {self.problem.name!r}")
        value = float(value)
        if not math.isfinite(value):
            raise DomainError(f"objective value must be finite, got {value}")
        ev = Evaluation(tuple(float(v) for v in p), value, len(self._evals) + 1)
        self._evals.append(ev)
        return ev

    @property
    def evaluations(self) -> tuple[Evaluation, ...]:
        return tuple(self._evals)

    def __len__(self):
        return len(self._evals)

    def __iter__(self):
        return iter(tuple(self._evals))

    def __getitem__(self, i):
        return self._evals[i]

    def points(self) -> np.ndarray:
        return np.array([ev.point for ev in self._evals], dtype=float).reshape(len(self._evals), self.problem.dim)

    def values(self) -> np.ndarray:
        return np.array([ev.value for ev in self._evals], dtype=float)

    def signed_values(self) -> np.ndarray:
        return self.problem.sign * self.values()

    def snapshot(self) -> "History":
        return History(self.problem, self._evals)


@dataclass(frozen=True)
class WeightVector:
    """Normalized nonnegative weights over the active criteria."""

    active_criteria: tuple[str, ...]
    values: tuple[float, ...]

    def __post_init__(self):
        active = canonical_criteria(self.active_criteria)
        if tuple(self.active_criteria) != active:
            # reorder values to match canonical order
            lookup = dict(zip(self.active_criteria, self.values))
            object.__setattr__(self, "values", tuple(lookup[c] for c in active))
        object.__setattr__(self, "active_criteria", active)
        vals = tuple(float(v) for v in self.values)
        if len(vals) != len(active):
            raise ValidationError(f"{len(vals)} weights given for {len(active)} active criteria")
        if any(not math.isfinite(v) or v < 0 for v in vals):
            raise ValidationError(f"weights must be finite and nonnegative, got {vals}")
        if abs(sum(vals) - 1.0) > 1e-9:
            raise ValidationError(f"weights must sum to 1, got {sum(vals)!r}")
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_raw(cls, raw: Mapping[str, float], active: Sequence[str]) -> "WeightVector":
        """Normalize raw nonnegative weights; criteria missing from ``raw`` get 0."""
        active = canonical_criteria(active)
        extra = set(raw) - set(active)
        if extra:
            raise ValidationError(f"weights given for inactive criteria {sorted(extra)}")
        vals = np.array([float(raw.get(c, 0.0)) for c in active])
        if not np.all(np.isfinite(vals)) or np.any(vals < 0):
            raise ValidationError(f"raw weights must be finite and nonnegative, got {dict(raw)}")
        total = vals.sum()
        if total <= 0:
            raise ValidationError("raw weights are all zero")
        return cls(active, tuple(vals / total))

    @classmethod
    def uniform(cls, active: Sequence[str]) -> "WeightVector":
        active = canonical_criteria(active)
        return cls(active, (1.0 / len(active),) * len(active))

    @classmethod
    def unit(cls, name: str, active: Sequence[str]) -> "WeightVector":
        active = canonical_criteria(active)
        if name not in active:
            raise ValidationError(f"criterion {name!r} is not active (active: {list(active)})")
        return cls(active, tuple(1.0 if c == name else 0.0 for c in active))

    @property
    def weights(self) -> dict[str, float]:
        return dict(zip(self.active_criteria, self.values))

    def __getitem__(self, name: str) -> float:
        return self.weights.get(name, 0.0)

    def full(self) -> dict[str, float]:
        """Weights over all known criteria, 0 for inactive ones."""
        return {c: self[c] for c in CRITERIA}


@dataclass(frozen=True)
class RunRecord:
    iteration: int
    point: tuple[float, ...]
    value: float
    best_so_far: float
    weights: WeightVector | None = None
    wall_time_ms: float = 0.0
    parse_outcome: str | None = None


@dataclass(frozen=True)
class StagnationSummary:
    relative_improvement: float
    stagnating: bool
    window: int


def normalize_point(p, spec: ProblemSpec) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.shape[-1] != spec.dim:
        raise DomainError(f"expected {spec.dim} coordinates, got {p.shape[-1]}")
    lo, hi = spec.lower, spec.upper
    flat = p.reshape(-1, spec.dim)
    for j in range(spec.dim):
        col = flat[:, j]
        if np.any(~np.isfinite(col)) or np.any(col < lo[j]) or np.any(col > hi[j]):
            bad = col[(col < lo[j]) | (col > hi[j]) | ~np.isfinite(col)][0]
            raise DomainError(f"dimension {j + 1}: value {bad} outside bounds [{lo[j]}, {hi[j]}]")
    return (p - lo) / (hi - lo)


def denormalize_point(u, spec: ProblemSpec) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    return spec.lower + u * (spec.upper - spec.lower)


def best_so_far(h: History) -> Evaluation:
    """Best evaluation under the problem's sense; earliest wins ties."""
    if len(h) == 0:
        raise StateError("best_so_far needs at least one evaluation")
    signed = h.signed_values()
    return h[int(np.argmax(signed))]


def running_best(values, sense: str) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if sense == MINIMIZE:
        return np.minimum.accumulate(values)
    return np.maximum.accumulate(values)


def improvement_window(h: History, k: int = STAGNATION_WINDOW) -> StagnationSummary:
    """Relative change of the best-so-far value over the last ``k`` evaluations.

    With fewer than ``k + 1`` evaluations the window starts at the first one and
    the search is never reported as stagnating.
    """
    if len(h) == 0:
        raise StateError("improvement_window needs at least one evaluation")
    if k < 1:
        raise ValidationError(f"window size must be >= 1, got {k}")
    best = np.maximum.accumulate(h.signed_values())
    now = best[-1]
    full = len(h) >= k + 1
    before = best[-1 - k] if full else best[0]
    rel = abs(now - before) / max(abs(before), 1e-12)
    return StagnationSummary(float(rel), bool(full and rel < STAGNATION_THRESHOLD), k)


def derive_seed(*keys: int) -> int:
    """Deterministic 32-bit seed from a tuple of nonnegative integers."""
    return int(np.random.SeedSequence([int(k) for k in keys]).generate_state(1)[0])


def uniform_points(spec: ProblemSpec, n: int, rng: np.random.Generator) -> np.ndarray:
    """``n`` uniform in-bounds points, integer dimensions rounded."""
    u = rng.random((n, spec.dim))
    return spec.clamp(denormalize_point(u, spec))
