"""Family arithmetic: likelihoods, derivatives, state updates."""

import math

import numpy as np
import pytest

from barsieve.family import (
    ETA_CLIP,
    LOGISTIC,
    POISSON,
    coordinate_derivatives,
    curvature_bound,
    get_family,
    log_likelihood,
    make_state,
    update_state,
)

from oracles import fd_negloglik_derivatives, ref_loglik


def random_instance(family, n, seed):
    rng = np.random.default_rng(seed)
    eta = rng.uniform(-2.0, 2.0, n)
    col = rng.standard_normal(n)
    if family.code == 0:
        y = rng.integers(0, 2, n).astype(float)
    else:
        y = rng.poisson(np.exp(eta)).astype(float)
    return y, eta, col


def test_get_family_lookup():
    assert get_family("logistic") is LOGISTIC
    assert get_family("poisson") is POISSON
    with pytest.raises(ValueError, match="unknown family"):
        get_family("probit")


def test_logistic_loglik_at_zero_predictor():
    n = 12
    y = np.arange(n) % 2.0
    state = make_state(LOGISTIC, y)
    assert log_likelihood(LOGISTIC, state) == pytest.approx(-n * math.log(2.0), rel=1e-15)


def test_poisson_loglik_at_zero_predictor():
    n = 9
    state = make_state(POISSON, np.zeros(n))
    assert log_likelihood(POISSON, state) == pytest.approx(-float(n), rel=1e-15)


def test_logistic_single_observation_value():
    state = make_state(LOGISTIC, np.array([1.0]), np.array([2.0]))
    expected = 2.0 - math.log(1.0 + math.exp(2.0))
    assert log_likelihood(LOGISTIC, state) == pytest.approx(expected, abs=1e-14)
    assert expected == pytest.approx(-0.126928011042972, abs=1e-12)


def test_loglik_permutation_invariant():
    y, eta, _ = random_instance(LOGISTIC, 40, 5)
    perm = np.random.default_rng(6).permutation(40)
    a = LOGISTIC.loglik(y, eta)
    b = LOGISTIC.loglik(y[perm], eta[perm])
    assert a == pytest.approx(b, rel=1e-14)


def test_hand_derivatives_balanced_pair():
    state = make_state(LOGISTIC, np.array([1.0, 0.0]))
    first, second = coordinate_derivatives(LOGISTIC, state, np.array([1.0, 1.0]))
    assert first == 0.0
    assert second == pytest.approx(0.5, rel=1e-15)


def test_zero_column_derivatives():
    state = make_state(POISSON, np.array([2.0, 0.0, 1.0]))
    first, second = coordinate_derivatives(POISSON, state, np.zeros(3))
    assert (first, second) == (0.0, 0.0)


@pytest.mark.parametrize("family", [LOGISTIC, POISSON], ids=lambda f: f.name)
@pytest.mark.parametrize("seed", range(20))
def test_derivatives_match_finite_differences(family, seed):
    y, eta, col = random_instance(family, 50, seed)
    state = make_state(family, y, eta)
    first, second = coordinate_derivatives(family, state, col)
    fd_first, fd_second = fd_negloglik_derivatives(family.name, y, eta, col)
    assert first == pytest.approx(fd_first, rel=1e-6, abs=1e-9)
    assert second == pytest.approx(fd_second, rel=1e-6, abs=1e-9)
    assert second >= 0.0


def test_loglik_matches_reference_formula():
    for family in (LOGISTIC, POISSON):
        y, eta, _ = random_instance(family, 30, 9)
        assert family.loglik(y, eta) == pytest.approx(ref_loglik(family.name, y, eta), rel=1e-13)


def test_update_state_zero_delta_is_identity():
    y, eta, col = random_instance(LOGISTIC, 20, 1)
    state = make_state(LOGISTIC, y, eta)
    before = state.eta.copy()
    update_state(LOGISTIC, state, col, 0.0)
    np.testing.assert_array_equal(state.eta, before)


def test_update_state_roundtrip():
    y, eta, col = random_instance(LOGISTIC, 20, 2)
    state = make_state(LOGISTIC, y, eta)
    update_state(LOGISTIC, state, col, 0.7)
    update_state(LOGISTIC, state, col, -0.7)
    np.testing.assert_allclose(state.eta, eta, atol=1e-12)
    np.testing.assert_allclose(state.mu, LOGISTIC.mean(eta), atol=1e-12)


def test_many_updates_match_batch_predictor():
    rng = np.random.default_rng(7)
    n = 30
    y = rng.integers(0, 2, n).astype(float)
    state = make_state(LOGISTIC, y)
    eta = np.zeros(n)
    for _ in range(100):
        col = rng.standard_normal(n)
        delta = rng.uniform(-0.1, 0.1)
        update_state(LOGISTIC, state, col, delta)
        eta += delta * col
    np.testing.assert_allclose(state.eta, eta, atol=1e-10)
    np.testing.assert_allclose(state.mu, LOGISTIC.mean(eta), atol=1e-10)


def test_make_state_validation():
    with pytest.raises(ValueError, match="does not match"):
        make_state(LOGISTIC, np.zeros(3), np.zeros(4))
    with pytest.raises(ValueError, match="non-finite"):
        make_state(LOGISTIC, np.zeros(3), np.array([0.0, np.inf, 0.0]))


def test_extreme_predictors_stay_finite():
    mu = LOGISTIC.mean(np.array([800.0, -800.0]))
    np.testing.assert_array_equal(mu, [1.0, 0.0])
    assert POISSON.mean(np.array([50.0]))[0] == math.exp(ETA_CLIP)


def test_deviance_zero_at_saturation_and_positive_elsewhere():
    y = np.array([1.0, 0.0, 1.0, 1.0])
    assert LOGISTIC.deviance(y, y) == 0.0
    assert LOGISTIC.deviance(y, np.full(4, 0.5)) == pytest.approx(8.0 * math.log(2.0), rel=1e-14)
    yp = np.array([3.0, 0.0, 1.0])
    assert POISSON.deviance(yp, yp) == 0.0
    assert POISSON.deviance(yp, np.array([2.0, 0.5, 1.5])) > 0.0


@pytest.mark.parametrize("family", [LOGISTIC, POISSON], ids=lambda f: f.name)
def test_curvature_bound_dominates_exact_curvature(family):
    y, eta, col = random_instance(family, 40, 13)
    state = make_state(family, y, eta)
    _, exact = coordinate_derivatives(family, state, col)
    for halfwidth in (0.0, 0.3, 1.0, 4.0):
        bound = curvature_bound(family, state, col, halfwidth)
        assert bound >= exact - 1e-10
    assert curvature_bound(family, state, col, 0.0) == pytest.approx(exact, rel=1e-12)


def test_curvature_bound_tightens_with_shrinking_interval():
    y, eta, col = random_instance(LOGISTIC, 40, 17)
    state = make_state(LOGISTIC, y, eta)
    bounds = [curvature_bound(LOGISTIC, state, col, h) for h in (4.0, 1.0, 0.25, 0.0)]
    assert all(a >= b - 1e-12 for a, b in zip(bounds, bounds[1:]))
