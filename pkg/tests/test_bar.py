"""Outer reweighted-ridge loop: freezing, stability, and fixed points."""

import copy
import math

import numpy as np
import pytest

from barsieve.bar import (
    BarControls,
    bar_fit,
    bar_fit_design,
    bar_path,
    select_lambda_fixed,
    stationarity_check,
)
from barsieve.ccd import CcdControls, PenaltyMap, ccd_fit
from barsieve.design import Dataset, build_design
from barsieve.family import LOGISTIC, POISSON


def signal_dataset(n=300, p=12, seed=0, family=LOGISTIC):
    """Two strong signals in x, one linear confounder, one smooth curve."""
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n, p))
    w = rng.integers(0, 2, (n, 1)).astype(float)
    z = rng.uniform(0.0, 1.0, (n, 1))
    eta = 1.2 * x[:, 0] - 1.0 * x[:, 1] + 0.5 * w[:, 0] + np.sin(2.0 * np.pi * z[:, 0])
    if family.code == 0:
        y = (rng.random(n) < family.mean(eta)).astype(float)
    else:
        y = rng.poisson(np.exp(np.clip(eta, None, 3.0))).astype(float)
    return Dataset(y=y, x=x, w=w, z=z)


def test_fixed_scale_aic_is_two():
    assert select_lambda_fixed("aic", 100) == 2.0
    assert select_lambda_fixed("AIC", 7) == 2.0


def test_fixed_scale_bic_is_log_n():
    assert select_lambda_fixed("bic", 800) == pytest.approx(6.684611727667927, rel=1e-15)
    assert select_lambda_fixed("BIC", 3) == pytest.approx(1.0986122886681098, rel=1e-15)


@pytest.mark.parametrize("bad", ["cp", "gcv", ""])
def test_fixed_scale_rejects_unknown_criterion(bad):
    with pytest.raises(ValueError):
        select_lambda_fixed(bad, 100)


def test_fixed_scale_rejects_tiny_sample():
    with pytest.raises(ValueError):
        select_lambda_fixed("aic", 1)


@pytest.mark.parametrize(
    "kwargs",
    [
        {"xi": 0.0},
        {"xi": -1.0},
        {"xi": float("inf")},
        {"lam": 0.0},
        {"lam": -2.0},
        {"criterion": "cp"},
        {"outer_tol": 0.0},
        {"max_outer": 0},
        {"freeze_tol": 1e-5},
        {"freeze_tol": 0.0},
        {"stable_iters": 0},
        {"stable_tol": 0.0},
    ],
)
def test_controls_reject_bad_values(kwargs):
    with pytest.raises(ValueError):
        BarControls(**kwargs)


def test_lam_override_wins_over_criterion():
    data = signal_dataset(n=120, p=4, seed=1)
    fit = bar_fit(data, LOGISTIC, BarControls(lam=5.0, criterion="aic"))
    assert fit.lam == 5.0


def test_huge_lam_empties_support_and_matches_restricted_refit():
    data = signal_dataset(n=200, p=8, seed=2)
    design = build_design(data)
    tight = CcdControls(tol=1e-14, max_passes=2000)
    fit = bar_fit_design(design, data.y, LOGISTIC, BarControls(lam=1e8), tight)
    assert fit.converged
    assert fit.support.size == 0
    assert np.all(fit.coeffs.beta == 0.0)

    pen = PenaltyMap.unpenalized(design.block)
    pen.frozen[design.block.beta] = True
    res = ccd_fit(design, data.y, LOGISTIC, pen, tight)
    np.testing.assert_allclose(fit.coeffs.intercept, res.coeffs.intercept, atol=1e-4)
    np.testing.assert_allclose(fit.coeffs.alpha, res.coeffs.alpha, atol=1e-4)
    np.testing.assert_allclose(fit.coeffs.gamma, res.coeffs.gamma, atol=1e-4)


def test_huge_xi_starts_at_zero_and_stays_empty():
    data = signal_dataset(n=200, p=10, seed=3)
    fit = bar_fit(data, LOGISTIC, BarControls(xi=1e8))
    assert fit.converged
    assert fit.support.size == 0
    assert np.max(np.abs(fit.ridge_beta)) < 1e-3


def test_pure_noise_bic_selects_nothing_on_most_seeds():
    empty = 0
    seeds = 100
    for seed in range(seeds):
        rng = np.random.default_rng(seed)
        x = rng.standard_normal((400, 20))
        y = rng.integers(0, 2, 400).astype(float)
        fit = bar_fit(Dataset(y=y, x=x), LOGISTIC, BarControls(criterion="bic"))
        if fit.support.size == 0:
            empty += 1
    assert empty >= 95


@pytest.mark.parametrize("family", [LOGISTIC, POISSON], ids=lambda f: f.name)
def test_frozen_coordinates_never_revive(family):
    data = signal_dataset(n=250, p=10, seed=4, family=family)
    fit = bar_fit(data, family)
    assert fit.converged
    dead = np.zeros(10, dtype=bool)
    for beta in fit.beta_history:
        revived = dead & (beta != 0.0)
        assert not revived.any()
        dead |= beta == 0.0


def test_support_and_signs_stable_over_final_iterations():
    data = signal_dataset(n=300, p=12, seed=5)
    fit = bar_fit(data, LOGISTIC)
    assert fit.converged
    tail = fit.beta_history[-3:]
    signs = [tuple(np.sign(b)) for b in tail]
    assert len(set(signs)) == 1
    assert np.array_equal(np.flatnonzero(tail[-1]), fit.support)


def test_true_signals_recovered_with_correct_signs():
    data = signal_dataset(n=400, p=12, seed=6)
    fit = bar_fit(data, LOGISTIC, BarControls(criterion="bic"))
    assert 0 in fit.support and 1 in fit.support
    assert fit.coeffs.beta[0] > 0.0 and fit.coeffs.beta[1] < 0.0


def test_path_single_point_equals_direct_fit():
    data = signal_dataset(n=200, p=8, seed=7)
    design = build_design(data)
    points = bar_path(design, data.y, LOGISTIC, xi_grid=(1.0,), criteria=("bic",))
    assert len(points) == 1
    direct = bar_fit_design(design, data.y, LOGISTIC, BarControls(xi=1.0, criterion="bic"))
    np.testing.assert_array_equal(points[0].fit.coeffs.to_vector(design.block),
                                  direct.coeffs.to_vector(design.block))
    assert points[0].fit.lam == direct.lam


def test_path_isolates_a_failing_grid_point():
    data = signal_dataset(n=120, p=4, seed=8)
    points = bar_path(data, family=LOGISTIC, xi_grid=(-1.0, 1.0), criteria=("aic",))
    assert points[0].fit is None and points[0].error
    assert points[1].fit is not None and points[1].error is None


def test_path_requires_family_and_response():
    data = signal_dataset(n=60, p=2, seed=9)
    design = build_design(data)
    with pytest.raises(ValueError):
        bar_path(design, data.y)
    with pytest.raises(ValueError):
        bar_path(design, family=LOGISTIC)


def test_initialization_scale_does_not_change_selection():
    for seed in (10, 11, 12):
        data = signal_dataset(n=200, p=10, seed=seed)
        supports = set()
        for xi in (0.1, 1.0, 10.0):
            fit = bar_fit(data, LOGISTIC, BarControls(xi=xi, criterion="bic"))
            assert fit.converged
            supports.add(tuple(fit.support))
        assert len(supports) == 1


def test_stationarity_zero_for_empty_support():
    data = signal_dataset(n=150, p=6, seed=13)
    design = build_design(data)
    fit = bar_fit_design(design, data.y, LOGISTIC, BarControls(lam=1e8))
    assert fit.support.size == 0
    assert stationarity_check(fit, design, data.y, LOGISTIC) == 0.0


@pytest.mark.parametrize("family", [LOGISTIC, POISSON], ids=lambda f: f.name)
def test_stationarity_small_at_fixed_point_large_after_perturbation(family):
    data = signal_dataset(n=300, p=10, seed=14, family=family)
    design = build_design(data)
    fit = bar_fit_design(design, data.y, family)
    assert fit.converged and fit.support.size > 0
    assert stationarity_check(fit, design, data.y, family) < 1e-3

    bumped = copy.deepcopy(fit)
    j = int(bumped.support[0])
    bumped.coeffs.beta[j] *= 1.1
    assert stationarity_check(bumped, design, data.y, family) > 1e-2


def test_fit_without_selection_block_is_immediately_converged():
    rng = np.random.default_rng(15)
    n = 100
    w = rng.standard_normal((n, 2))
    y = (rng.random(n) < LOGISTIC.mean(0.5 * w[:, 0])).astype(float)
    data = Dataset(y=y, x=np.empty((n, 0)), w=w)
    fit = bar_fit(data, LOGISTIC)
    assert fit.converged
    assert fit.outer_iterations == 0
    assert fit.support.size == 0


def test_wrapper_matches_design_level_entry():
    data = signal_dataset(n=150, p=6, seed=16)
    design = build_design(data)
    a = bar_fit(data, LOGISTIC)
    b = bar_fit_design(design, data.y, LOGISTIC)
    np.testing.assert_array_equal(a.coeffs.to_vector(design.block),
                                  b.coeffs.to_vector(design.block))
