"""Scenario generation, selection metrics and replication studies."""

import math

import numpy as np
import pytest

from barsieve.bar import BarControls, bar_fit_design
from barsieve.bernstein import evaluate_psi
from barsieve.design import build_design
from barsieve.family import LOGISTIC
from barsieve.simulate import (
    PSI_FUNCTIONS,
    ScenarioConfig,
    average_curves,
    evaluate_selection,
    generate_scenario,
    psi_domain,
    psi_true,
    run_replications,
    scenario_preset,
    sigma_ar,
    true_curves,
)


def small_config(**overrides):
    base = dict(
        name="toy", family="logistic", n=150, p=8,
        beta0=np.array([1.2, -1.0, 0, 0, 0, 0, 0, 0], dtype=float),
        alpha0=np.array([0.5]),
        psi_names=("sine_wave",),
        replications=1, seed=3,
    )
    base.update(overrides)
    return ScenarioConfig(**base)


def test_effect_values_at_landmarks():
    assert psi_true("shifted_square", 3.0) == 0.0
    assert psi_true("shifted_square", 1.0) == pytest.approx(0.4, rel=1e-15)
    assert psi_true("shifted_square", 5.0) == pytest.approx(0.4, rel=1e-15)
    assert abs(psi_true("sine_wave", 0.5)) < 1e-15
    assert psi_true("sine_wave", 0.25) == pytest.approx(0.2, rel=1e-12)
    assert psi_true("raised_cosine", 0.25) == pytest.approx(0.2, rel=1e-12)
    assert psi_true("raised_cosine", 0.0) == pytest.approx(0.4, rel=1e-15)
    assert psi_true("shifted_cube", -1.0) == 0.0
    assert psi_true("shifted_cube", 0.0) == pytest.approx(0.2, rel=1e-15)
    assert psi_true("shifted_cube_damped", 0.0) == pytest.approx(0.1, rel=1e-15)


def test_effects_vanish_at_domain_midpoints():
    for name in PSI_FUNCTIONS:
        lo, hi = psi_domain(name)
        assert abs(psi_true(name, 0.5 * (lo + hi))) < 1e-15


def test_unknown_effect_name_is_rejected():
    with pytest.raises(ValueError):
        psi_true("spline", 0.5)
    with pytest.raises(ValueError):
        psi_domain("spline")


def test_ar_covariance_entries_and_factorization():
    sigma = sigma_ar(4, 0.25)
    assert sigma[0, 0] == 1.0
    assert sigma[0, 1] == 0.25
    assert sigma[0, 3] == pytest.approx(0.25**3, rel=1e-15)
    assert sigma[2, 1] == 0.25
    np.testing.assert_array_equal(sigma, sigma.T)
    np.linalg.cholesky(sigma)
    np.testing.assert_array_equal(sigma_ar(3, 0.0), np.eye(3))


@pytest.mark.parametrize("kwargs", [
    {"n": 0},
    {"p": 0, "beta0": np.zeros(0)},
    {"rho": 1.0},
    {"rho": -1.0},
    {"beta0": np.zeros(5)},
    {"family": "gamma"},
    {"psi_names": ("spline",)},
    {"replications": 0},
])
def test_config_rejects_bad_values(kwargs):
    with pytest.raises(ValueError):
        small_config(**kwargs)


def test_independent_block_has_small_sample_correlation():
    cfg = small_config(n=5000, p=4, beta0=np.zeros(4), rho=0.0)
    data = generate_scenario(cfg)
    corr = np.corrcoef(data.x, rowvar=False)
    off = corr[~np.eye(4, dtype=bool)]
    assert np.max(np.abs(off)) < 0.05


def test_ar_block_matches_target_adjacent_correlation():
    cfg = small_config(n=20000, p=6, beta0=np.zeros(6), rho=0.25)
    data = generate_scenario(cfg)
    corr = np.corrcoef(data.x, rowvar=False)
    adjacent = np.diag(corr, k=1)
    assert np.max(np.abs(adjacent - 0.25)) < 0.03
    assert abs(corr[0, 2] - 0.0625) < 0.03


def test_null_signal_gives_balanced_binary_response():
    cfg = small_config(n=10000, p=2, beta0=np.zeros(2), alpha0=np.zeros(1), psi_names=())
    data = generate_scenario(cfg)
    assert set(np.unique(data.y)) == {0.0, 1.0}
    assert abs(data.y.mean() - 0.5) < 0.02


def test_covariate_panels_respect_their_ranges():
    cfg = small_config(n=500, psi_names=("shifted_square", "shifted_cube"))
    data = generate_scenario(cfg)
    assert set(np.unique(data.w)) <= {0.0, 1.0}
    assert data.z.shape == (500, 2)
    assert data.z[:, 0].min() >= 1.0 and data.z[:, 0].max() <= 5.0
    assert data.z[:, 1].min() >= -3.0 and data.z[:, 1].max() <= 1.0


def test_replications_are_reproducible_and_distinct():
    cfg = small_config()
    a = generate_scenario(cfg, replication=2)
    b = generate_scenario(cfg, replication=2)
    np.testing.assert_array_equal(a.x, b.x)
    np.testing.assert_array_equal(a.y, b.y)
    c = generate_scenario(cfg, replication=3)
    assert not np.array_equal(a.x, c.x)
    with pytest.raises(ValueError):
        generate_scenario(cfg, replication=-1)


def test_selection_metrics_hand_example():
    m = evaluate_selection([0.5, 0.2, 0.0], [1.0, 0.0, -1.0], np.eye(3))
    assert (m.tp, m.fp, m.ms, m.mc) == (1, 1, 2, 2)
    assert m.tm is False
    assert m.mse == pytest.approx(1.29, rel=1e-12)


def test_selection_metrics_weighted_error():
    m = evaluate_selection([1.1, 0.0], [1.0, 0.0], np.eye(2))
    assert m.mse == pytest.approx(0.01, rel=1e-10)
    sigma = np.array([[1.0, 0.5], [0.5, 1.0]])
    m2 = evaluate_selection([1.1, 0.1], [1.0, 0.0], sigma)
    assert m2.mse == pytest.approx(0.01 + 2 * 0.5 * 0.01 + 0.01, rel=1e-10)


def test_selection_metrics_exact_recovery():
    m = evaluate_selection([2.0, 0.0, -1.0], [1.0, 0.0, -3.0], np.eye(3))
    assert m.tm is True
    assert (m.tp, m.fp, m.mc) == (2, 0, 0)


def test_selection_metrics_shape_mismatch():
    with pytest.raises(ValueError):
        evaluate_selection([1.0, 2.0], [1.0], np.eye(2))


def test_selection_size_identity_on_random_draws():
    rng = np.random.default_rng(0)
    for _ in range(20):
        hat = rng.choice([0.0, 1.0], 12) * rng.standard_normal(12)
        true = rng.choice([0.0, 1.0], 12)
        m = evaluate_selection(hat, true, np.eye(12))
        assert m.ms == m.tp + m.fp
        assert m.mc == int(np.sum(true != 0)) - m.tp + m.fp


@pytest.mark.parametrize("name,family,weak", [("s1", "logistic", False), ("s2", "logistic", True), ("s4", "poisson", False)])
def test_preset_signal_patterns(name, family, weak):
    cfg = scenario_preset(name, n=400, p=50)
    assert cfg.family == family
    assert cfg.p == 50
    assert np.count_nonzero(cfg.beta0) == 5
    assert np.count_nonzero(cfg.beta0[:2]) == 2
    assert np.count_nonzero(cfg.beta0[-3:]) == 3
    assert len(cfg.psi_names) == 4
    assert cfg.alpha0.shape == (5,)
    if weak:
        assert np.min(np.abs(cfg.beta0[cfg.beta0 != 0.0])) < 0.5


def test_preset_rejects_unknown_or_tiny():
    with pytest.raises(ValueError):
        scenario_preset("s3", n=100, p=10)
    with pytest.raises(ValueError):
        scenario_preset("s1", n=100, p=3)


def test_single_replication_study_matches_direct_fit():
    cfg = small_config(n=200, replications=1)
    res = run_replications(cfg, methods=("bar-bic",), keep_fits=True)
    assert res.methods == ("bar-bic", "oracle")
    assert res.failures == {"bar-bic": 0, "oracle": 0}

    data = generate_scenario(cfg, 0)
    design = build_design(data, specs=cfg.basis_specs())
    direct = bar_fit_design(design, data.y, LOGISTIC, BarControls(criterion="bic"))
    recorded = res.fits["bar-bic"][0]
    np.testing.assert_array_equal(recorded.beta, direct.coeffs.beta)
    np.testing.assert_array_equal(recorded.alpha, direct.coeffs.alpha)
    assert recorded.chosen_lambda == pytest.approx(math.log(200), rel=1e-15)

    sel = evaluate_selection(direct.coeffs.beta, cfg.beta0, sigma_ar(cfg.p, cfg.rho))
    m = res.metrics["bar-bic"]
    assert m.tp == float(sel.tp) and m.fp == float(sel.fp)
    assert m.mmse == pytest.approx(sel.mse, rel=1e-12)
    assert m.r_effective == 1


def test_oracle_never_selects_noise():
    cfg = small_config(n=200, replications=3)
    res = run_replications(cfg, methods=("bar-bic",))
    oracle = res.metrics["oracle"]
    assert oracle.fp == 0.0
    assert oracle.tm == 1.0
    assert res.nonconverged["oracle"] == 0


def test_study_reruns_bitwise_and_worker_invariant():
    cfg = small_config(n=150, replications=4)
    a = run_replications(cfg, methods=("bar-bic",), include_oracle=False)
    b = run_replications(cfg, methods=("bar-bic",), include_oracle=False)
    c = run_replications(cfg, methods=("bar-bic",), include_oracle=False, workers=2)
    for other in (b, c):
        assert a.metrics["bar-bic"].mmse == other.metrics["bar-bic"].mmse
        assert a.metrics["bar-bic"].tp == other.metrics["bar-bic"].tp
        np.testing.assert_array_equal(a.metrics["bar-bic"].bias_mean, other.metrics["bar-bic"].bias_mean)


def test_study_rejects_unknown_method():
    cfg = small_config()
    with pytest.raises(ValueError):
        run_replications(cfg, methods=("ridge",))


def test_summary_bias_rows_cover_the_true_support():
    cfg = small_config(n=200, replications=2)
    res = run_replications(cfg, methods=("bar-bic",), include_oracle=False)
    m = res.metrics["bar-bic"]
    np.testing.assert_array_equal(m.bias_positions, [0, 1])
    assert m.bias_mean.shape == (2,)
    assert m.alpha_bias_mean.shape == (1,)


def test_average_of_one_curve_is_the_curve():
    cfg = small_config(n=200)
    data = generate_scenario(cfg, 0)
    design = build_design(data, specs=cfg.basis_specs())
    fit = bar_fit_design(design, data.y, LOGISTIC)
    spec = cfg.basis_specs()[0]
    curves = average_curves([fit.coeffs.gamma], cfg.basis_specs())
    grid, mean = curves[0]
    np.testing.assert_array_equal(mean, evaluate_psi(fit.coeffs.gamma, spec, grid))
    assert grid[0] == spec.lower and grid[-1] == spec.upper


def test_average_curves_checks_gamma_length():
    cfg = small_config()
    with pytest.raises(ValueError):
        average_curves([np.zeros(5)], cfg.basis_specs())


def test_fitted_and_true_curves_vanish_at_midpoints():
    cfg = scenario_preset("s1", n=300, p=10)
    tc = true_curves(cfg)
    assert len(tc) == 4
    for j, name in enumerate(cfg.psi_names):
        grid, vals = tc[j]
        lo, hi = psi_domain(name)
        assert grid[100] == 0.5 * (lo + hi)
        assert vals[100] == 0.0

    data = generate_scenario(cfg, 0)
    design = build_design(data, specs=cfg.basis_specs())
    fit = bar_fit_design(design, data.y, LOGISTIC)
    fitted = average_curves([fit.coeffs.gamma], cfg.basis_specs())
    for j in range(4):
        assert fitted[j][1][100] == 0.0
