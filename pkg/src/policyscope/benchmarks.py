"""Benchmark objectives: Rosenbrock plus analytic stand-ins for hyperparameter
tuning and robot pushing.

Randomness is drawn once, at construction, from the benchmark seed. Evaluation
is noiseless and pure.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import CONTINUOUS, INTEGER, MAXIMIZE, MINIMIZE, ProblemSpec
from .errors import DomainError, ValidationError


@dataclass(frozen=True)
class Benchmark:
    spec: ProblemSpec
    evaluate: Callable[[np.ndarray], float]
    known_optimum: tuple[tuple[float, ...], float] | None = None
    seed: int | None = None
    params: dict | None = None

    def __call__(self, x) -> float:
        return self.evaluate(x)


def rosenbrock_value(x) -> float:
    x = np.asarray(x, dtype=float)
    return float(np.sum(100.0 * (x[1:] - x[:-1] ** 2) ** 2 + (1.0 - x[:-1]) ** 2))


def rosenbrock(d: int = 2) -> Benchmark:
    if d < 2:
        raise DomainError(f"rosenbrock needs d >= 2, got {d}")
    # no function identity in the description: the prompt must not leak it
    spec = ProblemSpec(
        name="rosenbrock",
        dim=d,
        bounds=((-2.0, 2.0),) * d,
        kinds=(CONTINUOUS,) * d,
        sense=MINIMIZE,
        description=f"Minimize an unknown black-box function of {d} continuous variables.",
    )
    return Benchmark(spec, rosenbrock_value, ((1.0,) * d, 0.0))


HPT_NAMES = ("log10_lr", "log2_batch", "depth", "dropout", "weight_decay_log10")


def hpt_params(seed: int) -> tuple[float, int, float]:
    rng = np.random.default_rng(seed)
    a = float(rng.uniform(-4.0, -2.0))
    b = int(rng.integers(3, 9))
    c = float(rng.uniform(-5.0, -3.0))
    return a, b, c


def hpt_value(x, a: float, b: int, c: float) -> float:
    lr, batch, depth, dropout, wd = (float(v) for v in np.asarray(x, dtype=float))
    return (
        0.15
        + (lr - a) ** 2 / 4.0
        + 0.02 * abs(depth - b)
        + 0.5 * (dropout - 0.3) ** 2
        + 0.01 * (batch - 6.0) ** 2
        + 0.3 * (lr - a) * (wd - c) / 8.0
    )


def synthetic_hpt(seed: int = 0, *, params: tuple[float, int, float] | None = None) -> Benchmark:
    """Validation-error surface over five mixed integer/continuous hyperparameters.

    ``params`` overrides the seeded optimum location ``(a, b, c)``.
    """
    a, b, c = params if params is not None else hpt_params(seed)
    if not (-4.0 <= a <= -2.0 and 3 <= b <= 8 and -5.0 <= c <= -3.0):
        raise ValidationError(f"hpt parameters out of range: {(a, b, c)}")
    spec = ProblemSpec(
        name="hpt",
        dim=5,
        bounds=((-5.0, -1.0), (3.0, 9.0), (1.0, 10.0), (0.0, 0.8), (-6.0, -2.0)),
        kinds=(CONTINUOUS, INTEGER, INTEGER, CONTINUOUS, CONTINUOUS),
        sense=MINIMIZE,
        description=(
            "Minimize the validation error of a neural network by choosing its training "
            "hyperparameters: x1 = log10 of the learning rate, x2 = log2 of the batch size "
            "(integer), x3 = network depth in layers (integer), x4 = dropout rate, "
            "x5 = log10 of the weight decay."
        ),
    )
    return Benchmark(spec, lambda x: hpt_value(x, a, b, c), None, seed, {"a": a, "b": b, "c": c})


def push_goal(seed: int) -> tuple[float, float]:
    # area-uniform on the annulus 3 <= r <= 5
    rng = np.random.default_rng(seed)
    r = float(np.sqrt(rng.uniform(9.0, 25.0)))
    theta = float(rng.uniform(0.0, 2.0 * np.pi))
    return r * np.cos(theta), r * np.sin(theta)


def push_final_position(x) -> np.ndarray:
    rx, ry, duration = (float(v) for v in np.asarray(x, dtype=float))
    start = np.array([rx, ry])
    dist = float(np.hypot(rx, ry))
    u = np.array([1.0, 0.0]) if dist < 1e-9 else -start / dist
    travel = max(0.0, duration * 0.2 - dist)
    return travel * u


def push_reward(x, goal) -> float:
    g = np.asarray(goal, dtype=float)
    final = push_final_position(x)
    return float(np.linalg.norm(g) - np.linalg.norm(g - final))


def robot_push(seed: int = 0, *, goal: tuple[float, float] | None = None) -> Benchmark:
    """Planar pushing: a robot starting at ``(rx, ry)`` moves straight through the
    origin, shoving the object it meets there, for ``duration`` time steps.

    The reward is the reduction in object-to-goal distance, so it never exceeds
    the goal's distance from the origin.
    """
    g = tuple(float(v) for v in (goal if goal is not None else push_goal(seed)))
    spec = ProblemSpec(
        name="robot_push",
        dim=3,
        bounds=((-5.0, 5.0), (-5.0, 5.0), (1.0, 30.0)),
        kinds=(CONTINUOUS,) * 3,
        sense=MAXIMIZE,
        description=(
            "Maximize the reward of a planar pushing controller. A robot starts at "
            "position (x1, x2) and moves in a straight line towards an object resting at the "
            "origin for x3 time steps, pushing it once contact is made. The reward measures "
            "how much closer the object ends up to a hidden goal location."
        ),
    )
    return Benchmark(spec, lambda x: push_reward(x, g), None, seed, {"goal": g})


_REGISTRY = {
    "rosenbrock": (lambda seed, dim: rosenbrock(dim or 2), 2, MINIMIZE),
    "hpt": (lambda seed, dim: synthetic_hpt(seed), 5, MINIMIZE),
    "robot_push": (lambda seed, dim: robot_push(seed), 3, MAXIMIZE),
}


def list_benchmarks() -> list[tuple[str, int, str]]:
    return [(name, dim, sense) for name, (_, dim, sense) in _REGISTRY.items()]


def make_benchmark(name: str, seed: int = 0, dim: int | None = None) -> Benchmark:
    if name not in _REGISTRY:
        raise ValidationError(f"unknown benchmark {name!r}; choose from {sorted(_REGISTRY)}")
    if dim is not None and name != "rosenbrock" and dim != _REGISTRY[name][1]:
        raise ValidationError(f"benchmark {name!r} has fixed dimension {_REGISTRY[name][1]}")
    return _REGISTRY[name][0](seed, dim)
