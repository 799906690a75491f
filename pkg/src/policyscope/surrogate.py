"""Gaussian-process surrogate with expected-improvement and UCB acquisition.

Inputs are normalized to the unit cube; targets are the internal
maximize-sense values, standardized before fitting. The kernel is a unit
variance RBF whose lengthscale is picked from a small grid by log marginal
likelihood. Targets can optionally be log-warped first (see
:func:`warp_targets`); the GP baselines in the harness do this by default.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.linalg import LinAlgError, cho_solve, cholesky, solve_triangular
from scipy.special import erfc

from .core import History, ProblemSpec, denormalize_point, normalize_point
from .errors import NumericalError, StateError, ValidationError

LENGTHSCALE_GRID = (0.05, 0.1, 0.2, 0.4, 0.8)
SIGNAL_VARIANCE = 1.0
JITTER = 1e-6
MAX_JITTER = 1e-2
UCB_BETA = 2.0
WARPS = ("none", "log")
ACQ_POOL_SIZE = 2048
ACQ_LOCAL_SIZE = 32
ACQ_LOCAL_SIGMA = 0.05
_SQRT2 = np.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)


@dataclass(frozen=True)
class GpModel:
    X: np.ndarray
    y: np.ndarray  # standardized targets
    y_mean: float
    y_std: float
    lengthscale: float
    jitter: float
    L: np.ndarray | None
    alpha: np.ndarray | None
    spec: ProblemSpec
    degenerate: bool = False
    log_marginal_likelihoods: dict = field(default_factory=dict, repr=False)
    signal_variance: float = SIGNAL_VARIANCE
    warp: str = "none"

    @property
    def prior_std(self) -> float:
        return float(np.sqrt(self.signal_variance) * self.y_std)

    @property
    def best_target(self) -> float:
        """Largest training target on the model's (possibly warped) scale."""
        return float(self.y_mean + self.y_std * self.y.max())

    @property
    def incumbent(self) -> np.ndarray:
        """Training input (normalized) with the highest target."""
        return self.X[int(np.argmax(self.y))]


def rbf_kernel(A, B, lengthscale, signal_variance=SIGNAL_VARIANCE):
    A = np.atleast_2d(A)
    B = np.atleast_2d(B)
    sq = np.sum(A * A, 1)[:, None] + np.sum(B * B, 1)[None, :] - 2.0 * A @ B.T
    return signal_variance * np.exp(-np.maximum(sq, 0.0) / (2.0 * lengthscale**2))


def _chol_with_jitter(K):
    n = len(K)
    jitter = JITTER
    while True:
        try:
            return cholesky(K + jitter * np.eye(n), lower=True), jitter
        except (LinAlgError, ValueError):
            jitter *= 10.0
            if jitter > MAX_JITTER * (1 + 1e-9):
                raise NumericalError("kernel matrix is not positive definite even with jitter 1e-2")


def warp_targets(values, warp: str = "none") -> np.ndarray:
    """Monotone transform of maximize-sense targets before standardization.

    ``"log"`` maps each value to ``-log(1 + best - value)``: the incumbent goes
    to 0 and far-off values are compressed, which keeps heavy-tailed objectives
    from dominating the fit.
    """
    values = np.asarray(values, dtype=float)
    if warp == "none":
        return values
    if warp == "log":
        return -np.log1p(values.max() - values)
    raise ValidationError(f"unknown warp {warp!r}; choose from {list(WARPS)}")


def gp_fit(h: History, lengthscale_grid: Sequence[float] = LENGTHSCALE_GRID, warp: str = "none") -> GpModel:
    if len(h) == 0:
        raise StateError("gp_fit needs at least one evaluation")
    if not lengthscale_grid or not all(np.isfinite(ell) and ell > 0 for ell in lengthscale_grid):
        raise ValidationError(f"lengthscales must be finite and positive, got {list(lengthscale_grid)}")
    X = normalize_point(h.points(), h.problem)
    y_raw = warp_targets(h.signed_values(), warp)
    mean = float(y_raw.mean())
    std = float(y_raw.std())
    if not std > 1e-12 * max(1.0, abs(mean)):
        return GpModel(
            X, np.zeros_like(y_raw), mean, 1.0, float(lengthscale_grid[0]), JITTER, None, None, h.problem, True,
            warp=warp,
        )
    y = (y_raw - mean) / std
    n = len(y)
    best = None
    lml = {}
    for ell in lengthscale_grid:
        L, jitter = _chol_with_jitter(rbf_kernel(X, X, ell))
        alpha = cho_solve((L, True), y)
        value = -0.5 * y @ alpha - np.sum(np.log(np.diag(L))) - 0.5 * n * np.log(2.0 * np.pi)
        lml[float(ell)] = float(value)
        if best is None or value > best[0]:
            best = (value, float(ell), L, alpha, jitter)
    _, ell, L, alpha, jitter = best
    return GpModel(X, y, mean, std, ell, jitter, L, alpha, h.problem, False, lml, warp=warp)


def _posterior_standardized(m: GpModel, U):
    Ks = rbf_kernel(U, m.X, m.lengthscale, m.signal_variance)
    mu = Ks @ m.alpha
    v = solve_triangular(m.L, Ks.T, lower=True)
    return mu, m.signal_variance - np.sum(v * v, axis=0)


def unclamped_variance(m: GpModel, U) -> np.ndarray:
    """Standardized posterior variance before clamping at zero."""
    U = np.atleast_2d(np.asarray(U, dtype=float))
    if m.degenerate:
        return np.full(len(U), m.signal_variance)
    return _posterior_standardized(m, U)[1]


def gp_predict_normalized(m: GpModel, U) -> tuple[np.ndarray, np.ndarray]:
    """Posterior mean and std at normalized inputs ``U`` (shape ``(n, dim)``)."""
    U = np.atleast_2d(np.asarray(U, dtype=float))
    if m.degenerate:
        return np.full(len(U), m.y_mean), np.full(len(U), m.prior_std)
    mu, var = _posterior_standardized(m, U)
    return m.y_mean + m.y_std * mu, m.y_std * np.sqrt(np.maximum(var, 0.0))


def gp_predict_many(m: GpModel, points) -> tuple[np.ndarray, np.ndarray]:
    return gp_predict_normalized(m, normalize_point(np.atleast_2d(points), m.spec))


def gp_predict(m: GpModel, x) -> tuple[float, float]:
    mu, sd = gp_predict_many(m, [x])
    return float(mu[0]), float(sd[0])


def norm_cdf(z):
    return 0.5 * erfc(-np.asarray(z, dtype=float) / _SQRT2)


def norm_pdf(z):
    z = np.asarray(z, dtype=float)
    return _INV_SQRT_2PI * np.exp(-0.5 * z * z)


def ei_from_moments(mu, sigma, y_best):
    """Expected improvement over ``y_best`` for Gaussian predictions (maximize sense)."""
    mu = np.asarray(mu, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    gain = mu - y_best
    safe = sigma >= 1e-12
    s = np.where(safe, sigma, 1.0)
    z = gain / s
    ei = gain * norm_cdf(z) + s * norm_pdf(z)
    out = np.where(safe, np.maximum(ei, 0.0), np.maximum(gain, 0.0))
    return out if out.ndim else float(out)


def ucb_from_moments(mu, sigma, beta=UCB_BETA):
    if beta < 0:
        raise ValidationError(f"beta must be >= 0, got {beta}")
    return np.asarray(mu) + beta * np.asarray(sigma)


def expected_improvement(m: GpModel, x, y_best: float) -> float:
    mu, sd = gp_predict(m, x)
    return float(ei_from_moments(mu, sd, y_best))


def ucb(m: GpModel, x, beta: float = UCB_BETA) -> float:
    mu, sd = gp_predict(m, x)
    return float(ucb_from_moments(mu, sd, beta))


def ei_acquisition(m: GpModel, y_best: float) -> Callable[[np.ndarray], np.ndarray]:
    def acq(points):
        mu, sd = gp_predict_many(m, points)
        return ei_from_moments(mu, sd, y_best)

    return acq


def ucb_acquisition(m: GpModel, beta: float = UCB_BETA) -> Callable[[np.ndarray], np.ndarray]:
    def acq(points):
        mu, sd = gp_predict_many(m, points)
        return ucb_from_moments(mu, sd, beta)

    return acq


def acquisition_pool(
    spec: ProblemSpec,
    incumbent,
    pool_size: int,
    seed: int,
    n_local: int = ACQ_LOCAL_SIZE,
    sigma: float = ACQ_LOCAL_SIGMA,
) -> np.ndarray:
    """Uniform samples followed by Gaussian perturbations of a normalized incumbent."""
    if pool_size < 1:
        raise ValidationError(f"pool_size must be >= 1, got {pool_size}")
    rng = np.random.default_rng(seed)
    U = rng.random((pool_size, spec.dim))
    if n_local and incumbent is not None:
        local = np.clip(np.asarray(incumbent) + sigma * rng.standard_normal((n_local, spec.dim)), 0.0, 1.0)
        U = np.vstack([U, local])
    return spec.clamp(denormalize_point(U, spec))


def argmax_over_pool(pool, acq) -> np.ndarray:
    """Pool point with the largest acquisition value; lowest index wins ties."""
    pool = np.atleast_2d(pool)
    return pool[int(np.argmax(acq(pool)))]


def maximize_acquisition(
    m: GpModel,
    spec: ProblemSpec,
    acq: Callable[[np.ndarray], np.ndarray],
    pool_size: int = ACQ_POOL_SIZE,
    seed: int = 0,
    n_local: int = ACQ_LOCAL_SIZE,
) -> np.ndarray:
    pool = acquisition_pool(spec, m.incumbent, pool_size, seed, n_local)
    return argmax_over_pool(pool, acq)
