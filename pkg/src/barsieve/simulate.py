"""Simulation scenarios, replication studies and selection metrics.

Covariates follow a fixed recipe: the penalized block is multivariate
normal with an autoregressive correlation, the linear block is made of
balanced binary indicators, and each continuous covariate is uniform
on the support of its nonlinear effect. Every replication draws from
counter-based substreams keyed by (seed, replication, variable block),
so results are reproducible regardless of worker count and adding
methods never perturbs the data.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .bar import BarControls, bar_fit_design
from .baselines import cv_fit
from .bernstein import BasisSpec, evaluate_psi
from .ccd import CcdControls, PenaltyMap, ccd_fit
from .design import Dataset, build_design
from .family import Family, get_family

__all__ = [
    "MethodFit",
    "MetricsSummary",
    "PSI_FUNCTIONS",
    "ScenarioConfig",
    "SelectionMetrics",
    "StudyResult",
    "average_curves",
    "evaluate_selection",
    "generate_scenario",
    "psi_domain",
    "psi_true",
    "run_replications",
    "scenario_preset",
    "sigma_ar",
    "true_curves",
]

METHOD_NAMES = ("bar-aic", "bar-bic", "lasso", "alasso", "oracle")

# name -> (callable, support interval); each curve is zero at the
# interval midpoint, which keeps the additive model identified
PSI_FUNCTIONS = {
    "shifted_square": (lambda z: 0.1 * (z - 3.0) ** 2, (1.0, 5.0)),
    "raised_cosine": (lambda z: 0.2 * (np.cos(2.0 * np.pi * z) + 1.0), (0.0, 1.0)),
    "sine_wave": (lambda z: 0.2 * np.sin(2.0 * np.pi * z), (0.0, 1.0)),
    "shifted_cube": (lambda z: 0.2 * (z + 1.0) ** 3, (-3.0, 1.0)),
    "shifted_cube_damped": (lambda z: 0.1 * (z + 1.0) ** 3, (-3.0, 1.0)),
}

# substream tags per variable block
_STREAM_X, _STREAM_W, _STREAM_Z, _STREAM_Y = 0, 1, 2, 3


def psi_true(name: str, z):
    """Evaluate a registered nonlinear effect."""
    try:
        fn, _ = PSI_FUNCTIONS[name]
    except KeyError:
        raise ValueError(f"unknown effect {name!r}; expected one of {sorted(PSI_FUNCTIONS)}") from None
    return fn(np.asarray(z, dtype=np.float64))


def psi_domain(name: str) -> tuple[float, float]:
    """Support interval of a registered nonlinear effect."""
    try:
        return PSI_FUNCTIONS[name][1]
    except KeyError:
        raise ValueError(f"unknown effect {name!r}; expected one of {sorted(PSI_FUNCTIONS)}") from None


@dataclass(frozen=True)
class ScenarioConfig:
    """Data-generating configuration of one simulation scenario."""

    name: str
    family: str
    n: int
    p: int
    beta0: np.ndarray
    alpha0: np.ndarray
    psi_names: tuple[str, ...]
    rho: float = 0.25
    replications: int = 200
    seed: int = 0
    degree: int = 3

    def __post_init__(self) -> None:
        beta0 = np.asarray(self.beta0, dtype=np.float64)
        alpha0 = np.asarray(self.alpha0, dtype=np.float64)
        object.__setattr__(self, "beta0", beta0)
        object.__setattr__(self, "alpha0", alpha0)
        object.__setattr__(self, "psi_names", tuple(self.psi_names))
        if self.n < 1 or self.p < 1:
            raise ValueError("n and p must be positive")
        if beta0.shape != (self.p,):
            raise ValueError(f"beta0 must have shape ({self.p},)")
        if not -1.0 < self.rho < 1.0:
            raise ValueError("rho must sit inside (-1, 1)")
        if self.replications < 1:
            raise ValueError("replications must be positive")
        get_family(self.family)
        for name in self.psi_names:
            psi_domain(name)

    def basis_specs(self) -> tuple[BasisSpec, ...]:
        """Basis specs on the generative supports, shared by all fits."""
        return tuple(BasisSpec(self.degree, *psi_domain(name)) for name in self.psi_names)


def _pattern(p: int, head: tuple[float, ...], tail: tuple[float, ...]) -> np.ndarray:
    if p < len(head) + len(tail):
        raise ValueError(f"p = {p} too small for {len(head) + len(tail)} signal positions")
    beta = np.zeros(p)
    beta[: len(head)] = head
    beta[p - len(tail):] = tail
    return beta


def scenario_preset(name: str, n: int, p: int, replications: int = 200, seed: int = 0) -> ScenarioConfig:
    """Named benchmark scenarios.

    ``s1`` and ``s2`` are logistic designs with strong and weakened
    signal patterns; ``s4`` is the Poisson design with a damped cubic
    effect.
    """
    key = name.lower()
    if key == "s1":
        return ScenarioConfig(
            name=key, family="logistic", n=n, p=p,
            beta0=_pattern(p, (1.0, -1.0), (-1.0, 0.75, 0.75)),
            alpha0=np.array([1.0, -0.5, -0.5, 0.75, -1.0]),
            psi_names=("shifted_square", "raised_cosine", "sine_wave", "shifted_cube"),
            replications=replications, seed=seed,
        )
    if key == "s2":
        return ScenarioConfig(
            name=key, family="logistic", n=n, p=p,
            beta0=_pattern(p, (1.0, -0.5), (-1.0, 0.4, 0.75)),
            alpha0=np.array([1.0, -0.5, -0.5, 0.75, -1.0]),
            psi_names=("shifted_square", "raised_cosine", "sine_wave", "shifted_cube"),
            replications=replications, seed=seed,
        )
    if key == "s4":
        return ScenarioConfig(
            name=key, family="poisson", n=n, p=p,
            beta0=_pattern(p, (1.0, -0.75), (-1.0, 0.75, -0.75)),
            alpha0=np.array([0.75, -0.5, -0.5, 0.75, -1.0]),
            psi_names=("shifted_square", "raised_cosine", "sine_wave", "shifted_cube_damped"),
            replications=replications, seed=seed,
        )
    raise ValueError(f"unknown scenario {name!r}; expected 's1', 's2' or 's4'")


def sigma_ar(p: int, rho: float) -> np.ndarray:
    """Autoregressive covariance with entries rho^|i - j|."""
    idx = np.arange(p)
    return rho ** np.abs(idx[:, None] - idx[None, :])


def _rng(config: ScenarioConfig, replication: int, stream: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=(config.seed, replication, stream)))


def generate_scenario(config: ScenarioConfig, replication: int = 0) -> Dataset:
    """Draw one replication of a scenario.

    The penalized block is standard normal columns mixed through the
    transposed lower Cholesky factor of the autoregressive covariance,
    in natural column order.
    """
    if replication < 0:
        raise ValueError("replication index must be nonnegative")
    n, p = config.n, config.p
    chol = np.linalg.cholesky(sigma_ar(p, config.rho))
    x = _rng(config, replication, _STREAM_X).standard_normal((n, p)) @ chol.T
    w = _rng(config, replication, _STREAM_W).integers(0, 2, size=(n, config.alpha0.size)).astype(np.float64)
    rng_z = _rng(config, replication, _STREAM_Z)
    z = np.empty((n, len(config.psi_names)))
    psi_sum = np.zeros(n)
    for j, name in enumerate(config.psi_names):
        lo, hi = psi_domain(name)
        z[:, j] = rng_z.uniform(lo, hi, size=n)
        psi_sum += psi_true(name, z[:, j])
    lin = x @ config.beta0 + w @ config.alpha0 + psi_sum
    rng_y = _rng(config, replication, _STREAM_Y)
    family = get_family(config.family)
    if family.code == 0:
        y = (rng_y.random(n) < family.mean(lin)).astype(np.float64)
    else:
        y = rng_y.poisson(np.exp(lin)).astype(np.float64)
    return Dataset(y=y, x=x, w=w, z=z)


@dataclass(frozen=True)
class SelectionMetrics:
    """Support recovery and estimation error of one fitted block."""

    tp: int
    fp: int
    ms: int
    mc: int
    tm: bool
    mse: float


def evaluate_selection(beta_hat, beta0, sigma) -> SelectionMetrics:
    """Compare a fitted penalized block against the truth.

    ``mse`` is the covariance-weighted quadratic error of the block;
    ``ms = tp + fp`` and ``mc`` counts missed signals plus false
    positives. ``tm`` is exact support recovery.
    """
    beta_hat = np.asarray(beta_hat, dtype=np.float64)
    beta0 = np.asarray(beta0, dtype=np.float64)
    if beta_hat.shape != beta0.shape:
        raise ValueError(f"shape mismatch: {beta_hat.shape} vs {beta0.shape}")
    hot = beta_hat != 0.0
    true = beta0 != 0.0
    tp = int(np.sum(hot & true))
    fp = int(np.sum(hot & ~true))
    diff = beta_hat - beta0
    mse = float(diff @ (np.asarray(sigma) @ diff))
    return SelectionMetrics(
        tp=tp,
        fp=fp,
        ms=tp + fp,
        mc=int(np.sum(true)) - tp + fp,
        tm=bool(np.array_equal(hot, true)),
        mse=mse,
    )


@dataclass
class MethodFit:
    """Light record of one method's fit inside a replication."""

    beta: np.ndarray
    alpha: np.ndarray
    gamma: np.ndarray
    intercept: float
    converged: bool
    chosen_lambda: float | None = None


@dataclass
class MetricsSummary:
    """Aggregated selection metrics of one method across replications."""

    method: str
    mmse: float
    mmse_sd: float
    tp: float
    fp: float
    ms: float
    mc: float
    tm: float
    r_effective: int
    bias_positions: np.ndarray
    bias_mean: np.ndarray
    bias_sd: np.ndarray
    alpha_bias_mean: np.ndarray
    alpha_bias_sd: np.ndarray


@dataclass
class StudyResult:
    """All replication outputs of one scenario run."""

    config: ScenarioConfig
    methods: tuple[str, ...]
    metrics: dict[str, MetricsSummary]
    selections: dict[str, list[SelectionMetrics]]
    failures: dict[str, int]
    nonconverged: dict[str, int]
    fits: dict[str, list[MethodFit]] = field(default_factory=dict)


def _fit_method(
    method: str,
    design,
    y,
    family: Family,
    config: ScenarioConfig,
    ccd_controls: CcdControls | None,
    cv_folds: int,
    cv_grid_length: int,
    cv_grid_ratio: float,
) -> MethodFit:
    if method in ("bar-aic", "bar-bic"):
        fit = bar_fit_design(
            design, y, family,
            BarControls(criterion=method.split("-")[1]),
            ccd_controls,
        )
        c = fit.coeffs
        return MethodFit(c.beta, c.alpha, c.gamma, c.intercept, fit.converged, fit.lam)
    if method in ("lasso", "alasso"):
        res, cv = cv_fit(
            design, family, method=method, y=y, ccd_controls=ccd_controls,
            grid_length=cv_grid_length, grid_ratio=cv_grid_ratio,
            folds=cv_folds, fold_seed=config.seed,
        )
        c = res.coeffs
        return MethodFit(c.beta, c.alpha, c.gamma, c.intercept, res.converged and cv.converged, cv.best_lambda)
    if method == "oracle":
        pen = PenaltyMap.frozen_beta(design.block, config.beta0 == 0.0)
        res = ccd_fit(design, y, family, pen, ccd_controls)
        c = res.coeffs
        return MethodFit(c.beta, c.alpha, c.gamma, c.intercept, res.converged, None)
    raise ValueError(f"unknown method {method!r}; expected one of {METHOD_NAMES}")


def _summarize(method: str, sels: list[SelectionMetrics], fits: list[MethodFit], config: ScenarioConfig) -> MetricsSummary:
    positions = np.flatnonzero(config.beta0)
    if not sels:
        empty = np.full(positions.size, np.nan)
        alpha_empty = np.full(config.alpha0.size, np.nan)
        return MetricsSummary(
            method=method, mmse=np.nan, mmse_sd=np.nan, tp=np.nan, fp=np.nan,
            ms=np.nan, mc=np.nan, tm=np.nan, r_effective=0,
            bias_positions=positions, bias_mean=empty, bias_sd=empty,
            alpha_bias_mean=alpha_empty, alpha_bias_sd=alpha_empty,
        )
    mses = np.array([s.mse for s in sels])
    beta_err = np.stack([f.beta[positions] - config.beta0[positions] for f in fits])
    alpha_err = np.stack([f.alpha - config.alpha0 for f in fits])
    ddof = 1 if len(sels) > 1 else 0
    return MetricsSummary(
        method=method,
        mmse=float(np.median(mses)),
        mmse_sd=float(np.std(mses, ddof=ddof)),
        tp=float(np.mean([s.tp for s in sels])),
        fp=float(np.mean([s.fp for s in sels])),
        ms=float(np.mean([s.ms for s in sels])),
        mc=float(np.mean([s.mc for s in sels])),
        tm=float(np.mean([s.tm for s in sels])),
        r_effective=len(sels),
        bias_positions=positions,
        bias_mean=beta_err.mean(axis=0),
        bias_sd=beta_err.std(axis=0, ddof=ddof),
        alpha_bias_mean=alpha_err.mean(axis=0),
        alpha_bias_sd=alpha_err.std(axis=0, ddof=ddof),
    )


def run_replications(
    config: ScenarioConfig,
    methods=("bar-bic",),
    workers: int = 1,
    ccd_controls: CcdControls | None = None,
    cv_folds: int = 10,
    cv_grid_length: int = 100,
    cv_grid_ratio: float = 1e-3,
    keep_fits: bool = False,
    include_oracle: bool = True,
) -> StudyResult:
    """Run every replication of a scenario over the requested methods.

    The oracle (an unpenalized refit on the true support) is appended
    as a reference row unless switched off. Replications run on a
    thread pool; results are aggregated in replication order, so the
    output does not depend on the worker count. A replication whose
    fit raises is recorded as a failure for that method and excluded
    from its metrics.
    """
    methods = tuple(methods)
    for m in methods:
        if m not in METHOD_NAMES:
            raise ValueError(f"unknown method {m!r}; expected one of {METHOD_NAMES}")
    all_methods = methods + (("oracle",) if include_oracle and "oracle" not in methods else ())
    family = get_family(config.family)
    specs = config.basis_specs()
    sigma = sigma_ar(config.p, config.rho)

    def one(rep: int) -> dict[str, MethodFit | Exception]:
        data = generate_scenario(config, rep)
        design = build_design(data, specs=specs)
        out: dict[str, MethodFit | Exception] = {}
        for m in all_methods:
            try:
                out[m] = _fit_method(
                    m, design, data.y, family, config, ccd_controls,
                    cv_folds, cv_grid_length, cv_grid_ratio,
                )
            except Exception as exc:  # noqa: BLE001 - replication isolation
                out[m] = exc
        return out

    reps = range(config.replications)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(one, reps))
    else:
        rows = [one(r) for r in reps]

    metrics: dict[str, MetricsSummary] = {}
    selections: dict[str, list[SelectionMetrics]] = {}
    failures: dict[str, int] = {}
    nonconverged: dict[str, int] = {}
    kept: dict[str, list[MethodFit]] = {}
    for m in all_methods:
        fits = [row[m] for row in rows if not isinstance(row[m], Exception)]
        failures[m] = len(rows) - len(fits)
        nonconverged[m] = sum(1 for f in fits if not f.converged)
        sels = [evaluate_selection(f.beta, config.beta0, sigma) for f in fits]
        selections[m] = sels
        metrics[m] = _summarize(m, sels, fits, config)
        if keep_fits:
            kept[m] = fits
    return StudyResult(
        config=config,
        methods=all_methods,
        metrics=metrics,
        selections=selections,
        failures=failures,
        nonconverged=nonconverged,
        fits=kept,
    )


def average_curves(gammas, specs, grid_size: int = 201) -> dict[int, tuple[np.ndarray, np.ndarray]]:
    """Pointwise mean of centered component curves across fits.

    Parameters
    ----------
    gammas : iterable of ndarray
        Flat sieve coefficient vectors from fits sharing ``specs``.
    specs : sequence of BasisSpec
    grid_size : int
        Number of evaluation points per component.

    Returns
    -------
    dict mapping component index to (grid, mean curve).
    """
    specs = tuple(specs)
    gammas = [np.asarray(g, dtype=np.float64) for g in gammas]
    total = sum(s.degree for s in specs)
    for g in gammas:
        if g.shape != (total,):
            raise ValueError(f"gamma vector of shape {g.shape} does not match specs total {total}")
    out: dict[int, tuple[np.ndarray, np.ndarray]] = {}
    start = 0
    for j, spec in enumerate(specs):
        grid = np.linspace(spec.lower, spec.upper, grid_size)
        local = slice(start, start + spec.degree)
        stack = np.stack([evaluate_psi(g[local], spec, grid) for g in gammas])
        out[j] = (grid, stack.mean(axis=0))
        start += spec.degree
    return out


def true_curves(config: ScenarioConfig, grid_size: int = 201) -> dict[int, tuple[np.ndarray, np.ndarray]]:
    """Centered true component curves on the same grids."""
    out: dict[int, tuple[np.ndarray, np.ndarray]] = {}
    for j, name in enumerate(config.psi_names):
        lo, hi = psi_domain(name)
        grid = np.linspace(lo, hi, grid_size)
        vals = psi_true(name, grid) - psi_true(name, 0.5 * (lo + hi))
        out[j] = (grid, vals)
    return out
