"""LASSO and adaptive LASSO baselines on the same descent engine.

Both baselines penalize only the high-dimensional block; the tuning
scale is chosen by k-fold cross-validated deviance over a geometric
grid anchored at the smallest scale that zeroes the whole block.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .ccd import CcdControls, CcdResult, PenaltyMap, ccd_fit
from .design import Dataset, SieveDesign, build_design
from .family import Family

__all__ = [
    "CvResult",
    "CvSpec",
    "adaptive_lasso_fit",
    "cross_validate",
    "cv_fit",
    "lambda_grid",
    "lambda_max",
    "lasso_fit",
    "lasso_path",
    "make_folds",
    "ridge_pilot",
]

PILOT_FREEZE = 1e-8


def _resolve(dataset_or_design, y, specs, degree):
    if isinstance(dataset_or_design, Dataset):
        return build_design(dataset_or_design, specs=specs, degree=degree), dataset_or_design.y
    if y is None:
        raise ValueError("y is required when passing a prebuilt design")
    return dataset_or_design, np.asarray(y, dtype=np.float64)


def null_fit(design: SieveDesign, y, family: Family, ccd_controls: CcdControls | None = None) -> CcdResult:
    """Fit with the penalized block held at zero."""
    return ccd_fit(design, y, family, PenaltyMap.frozen_beta(design.block), ccd_controls)


def lambda_max(
    design: SieveDesign,
    y,
    family: Family,
    multipliers=None,
    ccd_controls: CcdControls | None = None,
) -> float:
    """Smallest L1 scale at which the whole penalized block is zero.

    This is the largest absolute score component of the penalized
    block at the null fit (multiplier-scaled for adaptive weights),
    which is the boundary of the zero-solution condition.
    """
    y = np.asarray(y, dtype=np.float64)
    res = null_fit(design, y, family, ccd_controls)
    mu = family.mean(res.eta)
    score = design.matrix[:, design.block.beta].T @ (y - mu)
    score = np.abs(score)
    if multipliers is not None:
        score = score / np.asarray(multipliers, dtype=np.float64)
    return float(np.max(score)) if score.size else 0.0


def lambda_grid(lam_max: float, length: int = 100, ratio: float = 1e-3) -> np.ndarray:
    """Geometric grid from ``lam_max`` down to ``ratio * lam_max``."""
    if not lam_max > 0.0:
        raise ValueError("lam_max must be positive")
    if length < 1:
        raise ValueError("grid length must be positive")
    if not 0.0 < ratio < 1.0:
        raise ValueError("ratio must sit inside (0, 1)")
    if length == 1:
        return np.array([lam_max])
    return lam_max * ratio ** (np.arange(length) / (length - 1))


@dataclass(frozen=True)
class CvSpec:
    """Fold count, tuning grid and fold seed for cross-validation."""

    grid: np.ndarray
    folds: int = 10
    seed: int = 0

    def __post_init__(self) -> None:
        grid = np.asarray(self.grid, dtype=np.float64)
        if grid.ndim != 1 or grid.size == 0:
            raise ValueError("grid must be a nonempty vector")
        if not np.all(np.isfinite(grid) & (grid > 0.0)):
            raise ValueError("grid values must be positive and finite")
        if np.any(np.diff(grid) > 0.0):
            raise ValueError("grid must be non-increasing")
        object.__setattr__(self, "grid", grid)
        if self.folds < 2:
            raise ValueError("folds must be at least 2")


def lasso_fit(
    dataset_or_design,
    family: Family,
    lam: float,
    y=None,
    ccd_controls: CcdControls | None = None,
    specs=None,
    degree: int = 3,
    warm=None,
) -> CcdResult:
    """L1 fit of the penalized block at one tuning scale.

    Zeros in the returned block are exact; the soft-threshold update
    lands there rather than near there.
    """
    design, y = _resolve(dataset_or_design, y, specs, degree)
    pen = PenaltyMap.l1_on_beta(design.block, lam)
    return ccd_fit(design, y, family, pen, ccd_controls, warm=warm)


def adaptive_lasso_fit(
    dataset_or_design,
    family: Family,
    lam: float,
    pilot,
    y=None,
    ccd_controls: CcdControls | None = None,
    specs=None,
    degree: int = 3,
    warm=None,
) -> CcdResult:
    """Weighted L1 fit with multipliers one over the absolute pilot.

    Coordinates whose pilot estimate sits below the freeze threshold
    are held at exactly zero.
    """
    design, y = _resolve(dataset_or_design, y, specs, degree)
    pilot = np.asarray(pilot, dtype=np.float64)
    if pilot.shape != (design.block.p,):
        raise ValueError(f"pilot must have shape ({design.block.p},)")
    dead = np.abs(pilot) < PILOT_FREEZE
    mult = np.ones(design.block.p)
    mult[~dead] = 1.0 / np.abs(pilot[~dead])
    pen = PenaltyMap.l1_on_beta(design.block, lam, multipliers=mult, frozen_beta=dead)
    return ccd_fit(design, y, family, pen, ccd_controls, warm=warm)


def ridge_pilot(
    design: SieveDesign,
    y,
    family: Family,
    xi: float = 1.0,
    ccd_controls: CcdControls | None = None,
) -> np.ndarray:
    """Ridge estimate of the penalized block used as adaptive pilot."""
    res = ccd_fit(design, y, family, PenaltyMap.ridge_on_beta(design.block, xi), ccd_controls)
    return res.coeffs.beta


def lasso_path(
    design: SieveDesign,
    y,
    family: Family,
    grid,
    multipliers=None,
    frozen_beta=None,
    ccd_controls: CcdControls | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Warm-started fits down a non-increasing tuning grid.

    Returns
    -------
    coefs : ndarray of shape (len(grid), total columns)
        Full coefficient vectors per grid point.
    converged : ndarray of bool
    """
    y = np.asarray(y, dtype=np.float64)
    grid = np.asarray(grid, dtype=np.float64)
    block = design.block
    base = null_fit(design, y, family, ccd_controls)
    warm = base.vector
    coefs = np.empty((grid.size, block.total))
    converged = np.empty(grid.size, dtype=bool)
    for g, lam in enumerate(grid):
        pen = PenaltyMap.l1_on_beta(block, float(lam), multipliers=multipliers, frozen_beta=frozen_beta)
        res = ccd_fit(design, y, family, pen, ccd_controls, warm=warm)
        coefs[g] = res.vector
        converged[g] = res.converged
        warm = res.vector
    return coefs, converged


def make_folds(y, folds: int, seed: int, stratify: bool) -> np.ndarray:
    """Fold labels, stratified by response class when requested.

    Stratified assignment deals each shuffled class round-robin, so
    per-fold class counts stay within one of proportionality.
    """
    y = np.asarray(y)
    n = y.size
    if folds > n:
        raise ValueError(f"cannot split {n} rows into {folds} folds")
    rng = np.random.default_rng(np.random.SeedSequence((seed, 0x0F01D)))
    labels = np.empty(n, dtype=np.int64)
    if stratify:
        order = np.concatenate([rng.permutation(np.flatnonzero(y == v)) for v in np.unique(y)])
    else:
        order = rng.permutation(n)
    labels[order] = np.arange(n) % folds
    return labels


@dataclass
class CvResult:
    """Cross-validated deviance curve and the selected scale."""

    grid: np.ndarray
    mean_deviance: np.ndarray
    best_index: int
    best_lambda: float
    fold_labels: np.ndarray
    pilot: np.ndarray | None = None
    converged: bool = True


def cross_validate(
    dataset_or_design,
    family: Family,
    method: str = "lasso",
    spec: CvSpec | None = None,
    y=None,
    ccd_controls: CcdControls | None = None,
    specs=None,
    degree: int = 3,
    grid_length: int = 100,
    grid_ratio: float = 1e-3,
    folds: int = 10,
    fold_seed: int = 0,
) -> CvResult:
    """Select the L1 scale by k-fold cross-validated deviance.

    For the adaptive method a single full-data ridge pilot supplies
    the weights for every fold. Grid ties resolve to the larger scale.
    Folds whose training rows carry a single response class are redrawn
    with a shifted seed, five attempts at most.
    """
    design, y = _resolve(dataset_or_design, y, specs, degree)
    if method not in ("lasso", "alasso"):
        raise ValueError(f"unknown method {method!r}; expected 'lasso' or 'alasso'")
    multipliers = None
    frozen = None
    pilot = None
    if method == "alasso":
        pilot = ridge_pilot(design, y, family, xi=1.0, ccd_controls=ccd_controls)
        frozen = np.abs(pilot) < PILOT_FREEZE
        multipliers = np.ones(design.block.p)
        multipliers[~frozen] = 1.0 / np.abs(pilot[~frozen])
        if np.all(frozen):
            raise ValueError("adaptive pilot froze every penalized coordinate")
    if spec is None:
        top = lambda_max(design, y, family, multipliers=multipliers, ccd_controls=ccd_controls)
        spec = CvSpec(grid=lambda_grid(top, grid_length, grid_ratio), folds=folds, seed=fold_seed)

    binary = family.code == 0
    fold_labels = None
    for attempt in range(5):
        candidate = make_folds(y, spec.folds, spec.seed + attempt, stratify=binary)
        ok = True
        if binary:
            for f in range(spec.folds):
                if np.unique(y[candidate != f]).size < 2:
                    ok = False
                    break
        if ok:
            fold_labels = candidate
            break
    if fold_labels is None:
        raise ValueError("could not build folds with both response classes in every training set")

    deviance = np.zeros(spec.grid.size)
    all_converged = True
    for f in range(spec.folds):
        test = fold_labels == f
        train_design = design.take(np.flatnonzero(~test))
        coefs, conv = lasso_path(
            train_design, y[~test], family, spec.grid,
            multipliers=multipliers, frozen_beta=frozen, ccd_controls=ccd_controls,
        )
        all_converged = all_converged and bool(np.all(conv))
        etas = design.matrix[test] @ coefs.T
        for g in range(spec.grid.size):
            deviance[g] += family.deviance(y[test], family.mean(etas[:, g]))
    deviance /= spec.folds
    best = int(np.argmin(deviance))
    return CvResult(
        grid=spec.grid,
        mean_deviance=deviance,
        best_index=best,
        best_lambda=float(spec.grid[best]),
        fold_labels=fold_labels,
        pilot=pilot,
        converged=all_converged,
    )


def cv_fit(
    dataset_or_design,
    family: Family,
    method: str = "lasso",
    spec: CvSpec | None = None,
    y=None,
    ccd_controls: CcdControls | None = None,
    specs=None,
    degree: int = 3,
    grid_length: int = 100,
    grid_ratio: float = 1e-3,
    folds: int = 10,
    fold_seed: int = 0,
) -> tuple[CcdResult, CvResult]:
    """Cross-validate, then refit on all rows at the selected scale."""
    design, y = _resolve(dataset_or_design, y, specs, degree)
    cv = cross_validate(
        design, family, method=method, spec=spec, y=y, ccd_controls=ccd_controls,
        grid_length=grid_length, grid_ratio=grid_ratio, folds=folds, fold_seed=fold_seed,
    )
    if method == "alasso":
        fit = adaptive_lasso_fit(design, family, cv.best_lambda, cv.pilot, y=y, ccd_controls=ccd_controls)
    else:
        fit = lasso_fit(design, family, cv.best_lambda, y=y, ccd_controls=ccd_controls)
    return fit, cv
