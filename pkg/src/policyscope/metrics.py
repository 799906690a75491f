"""Search criteria scored at candidate points against an evaluation history.

Every criterion maps into [0, 1]. Distances are Euclidean in the unit-cube
coordinates given by :func:`policyscope.core.normalize_point` and are divided by
``sqrt(dim)``, the diameter of that cube. Objective values are taken in the
internal maximize sense, so a higher exploitation score is always better.

- exploitation: inverse-distance-weighted (Shepard, power 2) prediction of the
  objective, rescaled to the observed value range.
- informativeness: distance to the nearest evaluated point (local sparsity).
- diversity: mean distance to all evaluated points (global dispersion).
- representativeness: closeness to the nearest k-means centroid of the
  evaluated points.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .core import CRITERIA, History, ProblemSpec, WeightVector, canonical_criteria, normalize_point
from .errors import StateError, ValidationError

IDW_POWER = 2
COINCIDENCE_TOL = 1e-12
DEFAULT_CLUSTERS = 3
KMEANS_MAX_ITER = 50
KMEANS_TOL = 1e-6
KMEANS_RESTARTS = 10
# below this many k-subsets, Lloyd is also started from every subset of the points
SUBSET_SEEDING_LIMIT = 128


@dataclass(frozen=True)
class MetricReport:
    candidate: tuple[float, ...]
    scores: dict[str, float]


@dataclass(frozen=True)
class ClusterModel:
    centroids: np.ndarray
    k: int
    rng_seed: int
    spec: ProblemSpec
    inertia: float = float("nan")
    # within-cluster sum of squares after each assignment step of the kept restart
    inertia_trace: tuple[float, ...] = field(default=(), repr=False)


def _require(h: History):
    if len(h) == 0:
        raise StateError("criteria need a nonempty history")


def _as_pool(x, spec: ProblemSpec) -> np.ndarray:
    return normalize_point(np.atleast_2d(np.asarray(x, dtype=float)), spec)


def _distances(pool: np.ndarray, pts: np.ndarray) -> np.ndarray:
    diff = pool[:, None, :] - pts[None, :, :]
    return np.sqrt(np.sum(diff * diff, axis=-1))


def _exploitation(dist: np.ndarray, y: np.ndarray) -> np.ndarray:
    y_min, y_max = y.min(), y.max()
    if y_max == y_min:
        return np.full(dist.shape[0], 0.5)
    coincide = dist <= COINCIDENCE_TOL
    hit = coincide.any(axis=1)
    pred = np.empty(dist.shape[0])
    if hit.any():
        c = coincide[hit]
        pred[hit] = (c * y).sum(axis=1) / c.sum(axis=1)
    miss = ~hit
    if miss.any():
        w = dist[miss] ** -IDW_POWER
        pred[miss] = (w @ y) / w.sum(axis=1)
    return np.clip((pred - y_min) / (y_max - y_min), 0.0, 1.0)


def _informativeness(dist: np.ndarray, dim: int) -> np.ndarray:
    nearest = dist.min(axis=1)
    # coincident within tolerance counts as already evaluated
    nearest = np.where(nearest <= COINCIDENCE_TOL, 0.0, nearest)
    return np.clip(nearest / np.sqrt(dim), 0.0, 1.0)


def _diversity(dist: np.ndarray, dim: int) -> np.ndarray:
    return np.clip(dist.mean(axis=1) / np.sqrt(dim), 0.0, 1.0)


def _representativeness(pool: np.ndarray, model: ClusterModel) -> np.ndarray:
    if model is None or model.centroids is None or len(model.centroids) == 0:
        raise StateError("representativeness needs a fitted cluster model")
    d = _distances(pool, np.asarray(model.centroids)).min(axis=1)
    return np.clip(1.0 - d / np.sqrt(pool.shape[1]), 0.0, 1.0)


def exploitation(x, h: History) -> float:
    _require(h)
    dist = _distances(_as_pool(x, h.problem), normalize_point(h.points(), h.problem))
    return float(_exploitation(dist, h.signed_values())[0])


def informativeness(x, h: History) -> float:
    _require(h)
    dist = _distances(_as_pool(x, h.problem), normalize_point(h.points(), h.problem))
    return float(_informativeness(dist, h.problem.dim)[0])


def diversity(x, h: History) -> float:
    _require(h)
    dist = _distances(_as_pool(x, h.problem), normalize_point(h.points(), h.problem))
    return float(_diversity(dist, h.problem.dim)[0])


def representativeness(x, model: ClusterModel) -> float:
    if model is None:
        raise StateError("representativeness needs a fitted cluster model")
    return float(_representativeness(_as_pool(x, model.spec), model)[0])


def _wcss(X, C, labels) -> float:
    return float(np.sum((X - C[labels]) ** 2))


def _kmeans_pp(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = len(X)
    centers = [X[rng.integers(n)]]
    for _ in range(1, k):
        d2 = np.min(np.sum((X[:, None, :] - np.array(centers)[None]) ** 2, axis=-1), axis=1)
        total = d2.sum()
        idx = rng.choice(n, p=d2 / total) if total > 0 else rng.integers(n)
        centers.append(X[idx])
    return np.array(centers)


def _lloyd(X: np.ndarray, C: np.ndarray, max_iter: int, tol: float):
    C = C.copy()
    trace = []
    for _ in range(max_iter):
        d2 = np.sum((X[:, None, :] - C[None]) ** 2, axis=-1)
        labels = d2.argmin(axis=1)
        trace.append(_wcss(X, C, labels))
        new = C.copy()
        for j in range(len(C)):
            members = X[labels == j]
            if len(members):
                new[j] = members.mean(axis=0)
            else:
                # move an empty cluster onto the worst-served point
                far = int(np.argmax(d2[np.arange(len(X)), labels]))
                new[j] = X[far]
                labels[far] = j
                d2[far] = 0.0
        shift = np.linalg.norm(new - C) / max(np.linalg.norm(C), 1e-12)
        C = new
        if shift < tol:
            break
    labels = np.sum((X[:, None, :] - C[None]) ** 2, axis=-1).argmin(axis=1)
    trace.append(_wcss(X, C, labels))
    return C, labels, trace


def fit_clusters(
    h: History,
    k: int = DEFAULT_CLUSTERS,
    seed: int = 0,
    restarts: int = KMEANS_RESTARTS,
) -> ClusterModel:
    """Lloyd's k-means on the normalized evaluated points.

    Each restart is seeded by k-means++ from one generator built from ``seed``.
    Small histories additionally start Lloyd from every k-subset of the points,
    which in practice reaches the optimal partition. The run with the lowest
    within-cluster sum of squares is kept (first wins ties). ``k`` is capped at
    the history length.
    """
    _require(h)
    if k < 1:
        raise ValidationError(f"cluster count must be >= 1, got {k}")
    X = normalize_point(h.points(), h.problem)
    k = min(k, len(X))
    rng = np.random.default_rng(seed)
    starts = [_kmeans_pp(X, k, rng) for _ in range(max(1, restarts))]
    if math.comb(len(X), k) <= SUBSET_SEEDING_LIMIT:
        starts.extend(X[list(idx)] for idx in itertools.combinations(range(len(X)), k))
    best = None
    for C0 in starts:
        C, labels, trace = _lloyd(X, C0, KMEANS_MAX_ITER, KMEANS_TOL)
        if best is None or trace[-1] < best[2][-1]:
            best = (C, labels, trace)
    C, _, trace = best
    return ClusterModel(np.clip(C, 0.0, 1.0), k, seed, h.problem, trace[-1], tuple(trace))


def _resolve_weights(w) -> dict[str, float]:
    if isinstance(w, WeightVector):
        return w.weights
    unknown = [name for name in w if name not in CRITERIA]
    if unknown:
        raise ValidationError(f"unknown criteria in weights: {unknown}")
    return dict(w)


def criteria_matrix(points, h: History, active, model: ClusterModel | None = None) -> dict[str, np.ndarray]:
    """Scores of each active criterion over a pool of raw points."""
    _require(h)
    active = canonical_criteria(active)
    pool = _as_pool(points, h.problem)
    out = {}
    if {"exploitation", "informativeness", "diversity"} & set(active):
        dist = _distances(pool, normalize_point(h.points(), h.problem))
    if "exploitation" in active:
        out["exploitation"] = _exploitation(dist, h.signed_values())
    if "informativeness" in active:
        out["informativeness"] = _informativeness(dist, h.problem.dim)
    if "diversity" in active:
        out["diversity"] = _diversity(dist, h.problem.dim)
    if "representativeness" in active:
        out["representativeness"] = _representativeness(pool, model)
    return out


def score_pool(points, h: History, w, model: ClusterModel | None = None) -> np.ndarray:
    """Weighted sum of the active criteria at each point of a pool."""
    weights = _resolve_weights(w)
    scores = criteria_matrix(points, h, list(weights), model)
    total = np.zeros(len(next(iter(scores.values()))))
    for name in canonical_criteria(weights):
        total = total + weights[name] * scores[name]
    return total


def score_candidate(x, h: History, w, model: ClusterModel | None = None) -> float:
    return float(score_pool([x], h, w, model)[0])


def metric_report(x, h: History, model: ClusterModel | None = None, active=CRITERIA) -> MetricReport:
    scores = criteria_matrix([x], h, active, model)
    return MetricReport(tuple(float(v) for v in np.asarray(x, dtype=float)), {k: float(v[0]) for k, v in scores.items()})
