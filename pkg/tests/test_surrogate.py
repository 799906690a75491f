import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import norm

from policyscope.core import History, ProblemSpec
from policyscope.errors import NumericalError, StateError, ValidationError
from policyscope.surrogate import (
    LENGTHSCALE_GRID,
    acquisition_pool,
    argmax_over_pool,
    ei_acquisition,
    ei_from_moments,
    expected_improvement,
    gp_fit,
    gp_predict,
    gp_predict_many,
    maximize_acquisition,
    ucb,
    ucb_acquisition,
    ucb_from_moments,
    unclamped_variance,
    warp_targets,
)

from conftest import make_history
from oracles import dense_gp, dense_lml

UNIT1 = ProblemSpec("u1", 1, ((0.0, 1.0),))
UNIT2 = ProblemSpec("u2", 2, ((0.0, 1.0), (0.0, 1.0)))


def _check_against_oracle(h, probes, rtol=0.0):
    m = gp_fit(h)
    X = (h.points() - h.problem.lower) / (h.problem.upper - h.problem.lower)
    y = h.signed_values()
    ys = (y - y.mean()) / y.std()
    P = (probes - h.problem.lower) / (h.problem.upper - h.problem.lower)
    mu_o, var_o = dense_gp(X, ys, P, m.lengthscale, m.jitter)
    mu, sd = gp_predict_many(m, probes)
    np.testing.assert_allclose(mu, y.mean() + y.std() * mu_o, rtol=rtol, atol=1e-8 * max(1, y.std()))
    np.testing.assert_allclose(unclamped_variance(m, P), var_o, rtol=0, atol=1e-8)
    np.testing.assert_allclose(sd**2, y.var() * np.maximum(var_o, 0), rtol=0, atol=1e-8 * max(1, y.var()))
    return m


def test_three_points_match_dense_solve():
    spec = ProblemSpec("b", 2, ((-2, 2), (-2, 2)))
    h = make_history(spec, [(-1, 0), (0.5, 1.5), (1.2, -0.7)], [1.0, -2.0, 0.5])
    probes = np.random.default_rng(0).uniform(-2, 2, (5, 2))
    _check_against_oracle(h, probes)


def test_lengthscale_is_grid_argmax_of_marginal_likelihood():
    rng = np.random.default_rng(2)
    h = make_history(UNIT2, rng.random((8, 2)), rng.normal(size=8))
    m = gp_fit(h)
    X, y = h.points(), h.signed_values()
    ys = (y - y.mean()) / y.std()
    lml = {ell: dense_lml(X, ys, ell, m.jitter) for ell in LENGTHSCALE_GRID}
    assert m.lengthscale == max(lml, key=lml.get)
    for ell, v in m.log_marginal_likelihoods.items():
        assert v == pytest.approx(lml[ell], abs=1e-8)


def test_single_point_interpolates():
    h = make_history(UNIT2, [(0.3, 0.6)], [4.2])
    assert gp_predict(gp_fit(h), (0.3, 0.6))[0] == pytest.approx(4.2, abs=1e-6)


def test_constant_targets_are_degenerate():
    h = make_history(UNIT2, [(0.1, 0.1), (0.5, 0.9), (0.8, 0.2)], [2.0, 2.0, 2.0])
    m = gp_fit(h)
    assert m.degenerate
    mu, sd = gp_predict_many(m, np.random.default_rng(0).random((10, 2)))
    assert np.all(mu == 2.0) and np.all(sd == m.prior_std)


def test_far_point_reverts_to_prior_and_training_point_is_certain():
    spec = ProblemSpec("w", 1, ((0.0, 100.0),))
    h = make_history(spec, [(0.0,), (1.0,), (2.0,)], [0.0, 1.0, 0.5])
    m = gp_fit(h)
    assert gp_predict(m, (100.0,))[1] == pytest.approx(m.prior_std, abs=1e-3)
    assert gp_predict(m, (1.0,))[1] <= 1e-2 * m.prior_std


def test_midpoint_of_symmetric_pair_is_average():
    h = make_history(UNIT1, [(0.3,), (0.7,)], [1.0, 3.0])
    assert gp_predict(gp_fit(h), (0.5,))[0] == pytest.approx(2.0, abs=1e-6)


def test_empty_history_raises():
    with pytest.raises(StateError):
        gp_fit(History(UNIT1))


def test_duplicates_factorize_with_jitter():
    h = make_history(UNIT1, [(0.5,)] * 3 + [(0.5 + 1e-9,)], [0.0, 1.0, 2.0, 3.0])
    m = gp_fit(h)
    assert m.jitter >= 1e-6 and np.isfinite(gp_predict(m, (0.5,))[0])


def test_cholesky_failure_surfaces(monkeypatch):
    from policyscope import surrogate

    monkeypatch.setattr(surrogate, "rbf_kernel", lambda A, B, ell, s=1.0: -np.eye(len(np.atleast_2d(A))))
    h = make_history(UNIT1, [(0.1,), (0.9,)], [0.0, 1.0])
    with pytest.raises(NumericalError):
        gp_fit(h)


def test_bad_lengthscale_grid():
    h = make_history(UNIT1, [(0.1,), (0.9,)], [0.0, 1.0])
    for grid in ([], [float("nan")], [0.0, 0.1]):
        with pytest.raises(ValidationError):
            gp_fit(h, grid)


def test_ei_examples():
    assert ei_from_moments(0.5, 0.0, 1.0) == 0.0
    assert ei_from_moments(2.0, 0.0, 1.0) == 1.0
    assert ei_from_moments(1.0, 1.0, 1.0) == pytest.approx(0.3989, abs=1e-4)
    assert ei_from_moments(1.0, 1.0, 1.0) == pytest.approx(1 / math.sqrt(2 * math.pi), abs=1e-15)


@given(st.floats(-1e3, 1e3), st.floats(1e-6, 1e3), st.floats(-1e3, 1e3))
def test_ei_matches_scipy_closed_form(mu, sigma, best):
    z = (mu - best) / sigma
    ref = (mu - best) * norm.cdf(z) + sigma * norm.pdf(z)
    assert ei_from_moments(mu, sigma, best) == pytest.approx(max(ref, 0.0), rel=1e-9, abs=1e-9 * sigma)


@given(st.floats(-10, 10), st.floats(1e-3, 10), st.floats(1e-3, 10), st.floats(-10, 10))
def test_ei_nondecreasing_in_sigma(mu, s1, s2, best):
    lo, hi = sorted((s1, s2))
    assert ei_from_moments(mu, hi, best) >= ei_from_moments(mu, lo, best) - 1e-12


def test_ucb_examples():
    assert ucb_from_moments(1.0, 0.5, 2.0) == 2.0
    assert ucb_from_moments(1.3, 0.0, 7.0) == 1.3
    h = make_history(UNIT1, [(0.2,), (0.9,)], [1.0, 0.0])
    m = gp_fit(h)
    assert ucb(m, (0.4,), 0.0) == pytest.approx(gp_predict(m, (0.4,))[0])
    with pytest.raises(ValidationError):
        ucb_from_moments(0.0, 1.0, -1.0)


def test_expected_improvement_on_model():
    h = make_history(UNIT1, [(0.2,), (0.9,)], [1.0, 0.0])
    m = gp_fit(h)
    assert expected_improvement(m, (0.5,), 1.0) >= 0.0


def test_warp_is_monotone_and_rejects_unknown():
    v = np.array([-5.0, -1.0, 0.0, 2.0])
    w = warp_targets(v, "log")
    assert np.all(np.diff(w) > 0) and w[-1] == 0.0
    np.testing.assert_array_equal(warp_targets(v), v)
    with pytest.raises(ValidationError):
        warp_targets(v, "sqrt")


def test_pool_of_one_point_returns_it():
    pool = np.array([[0.25, 0.75]])
    np.testing.assert_array_equal(argmax_over_pool(pool, lambda P: np.zeros(len(P))), pool[0])


def test_maximize_acquisition_deterministic_and_in_bounds():
    spec = ProblemSpec("b", 2, ((-2, 2), (-2, 2)))
    rng = np.random.default_rng(4)
    h = make_history(spec, rng.uniform(-2, 2, (6, 2)), rng.normal(size=6))
    m = gp_fit(h)
    acq = ei_acquisition(m, m.best_target)
    a = maximize_acquisition(m, spec, acq, 256, seed=9)
    b = maximize_acquisition(m, spec, acq, 256, seed=9)
    np.testing.assert_array_equal(a, b)
    assert spec.contains(a)
    pool = acquisition_pool(spec, m.incumbent, 256, 9)
    assert pool.shape == (256 + 32, 2)
    assert acq(a[None])[0] == pytest.approx(acq(pool).max())
    one = maximize_acquisition(m, spec, ucb_acquisition(m), 1, seed=3, n_local=0)
    np.testing.assert_array_equal(one, acquisition_pool(spec, None, 1, 3)[0])


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 3), st.integers(1, 10), st.integers(0, 2**31 - 1))
def test_gp_matches_oracle_property(d, n, seed):
    rng = np.random.default_rng(seed)
    spec = ProblemSpec("p", d, tuple((-1.0 - j, 2.0 + j) for j in range(d)))
    h = make_history(spec, rng.uniform(spec.lower, spec.upper, (n, d)), rng.normal(size=n) * 5)
    m = gp_fit(h)
    if m.degenerate:
        return
    # near-duplicate inputs make K ill-conditioned; both solves then carry
    # error proportional to the (large) extrapolated mean
    _check_against_oracle(h, rng.uniform(spec.lower, spec.upper, (5, d)), rtol=1e-8)
