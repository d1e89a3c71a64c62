"""Broken adaptive ridge: iteratively reweighted ridge selection.

The estimator starts from a ridge fit of the penalized block and then
repeatedly solves a ridge problem whose per-coordinate weight is the
tuning scale divided by the squared previous estimate. Coordinates
whose estimate falls below a freeze threshold are fixed at exactly
zero and never revived, so the surviving support shrinks monotonically
toward the fixed point, which mimics best-subset selection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .ccd import CcdControls, CcdResult, CoefficientBlocks, PenaltyMap, ccd_fit
from .design import Dataset, SieveDesign, build_design
from .family import Family, coordinate_derivatives, make_state

__all__ = [
    "BarControls",
    "FitResult",
    "PathPoint",
    "bar_fit",
    "bar_fit_design",
    "bar_path",
    "select_lambda_fixed",
    "stationarity_check",
]

_CRITERION_NAMES = ("aic", "bic")


def select_lambda_fixed(criterion: str, n: int) -> float:
    """Fixed tuning scale for a sample size: 2 under the AIC rule,
    log(n) under the BIC rule."""
    crit = criterion.lower()
    if crit not in _CRITERION_NAMES:
        raise ValueError(f"unknown criterion {criterion!r}; expected 'aic' or 'bic'")
    if n < 2:
        raise ValueError(f"sample size must be at least 2, got {n}")
    return 2.0 if crit == "aic" else math.log(n)


@dataclass(frozen=True)
class BarControls:
    """Outer-loop controls.

    ``lam`` overrides the criterion when given. The loop stops when
    the largest coefficient change falls below ``outer_tol``, or early
    once the support has been stable for ``stable_iters`` iterations
    with changes below ``stable_tol``; in both cases no unfrozen
    coefficient may remain below the freeze threshold.
    """

    xi: float = 1.0
    lam: float | None = None
    criterion: str = "bic"
    outer_tol: float = 1e-6
    max_outer: int = 100
    freeze_tol: float = 1e-8
    stable_iters: int = 3
    stable_tol: float = 1e-4

    def __post_init__(self) -> None:
        if not (np.isfinite(self.xi) and self.xi > 0.0):
            raise ValueError("xi must be positive and finite")
        if self.lam is not None and not (np.isfinite(self.lam) and self.lam > 0.0):
            raise ValueError("lam must be positive and finite when given")
        if self.lam is None and self.criterion.lower() not in _CRITERION_NAMES:
            raise ValueError(f"unknown criterion {self.criterion!r}")
        if not self.outer_tol > 0.0:
            raise ValueError("outer_tol must be positive")
        if self.max_outer < 1:
            raise ValueError("max_outer must be positive")
        if not 0.0 < self.freeze_tol < self.outer_tol:
            raise ValueError("freeze_tol must sit strictly inside (0, outer_tol)")
        if self.stable_iters < 1 or not self.stable_tol > 0.0:
            raise ValueError("stability controls must be positive")


@dataclass
class FitResult:
    """A converged (or capped) broken adaptive ridge fit."""

    coeffs: CoefficientBlocks
    support: np.ndarray
    converged: bool
    lam: float
    xi: float
    outer_iterations: int
    max_changes: list[float] = field(default_factory=list)
    beta_history: list[np.ndarray] = field(default_factory=list)
    ridge_beta: np.ndarray | None = None
    ccd: CcdResult | None = None


def bar_fit(
    dataset: Dataset,
    family: Family,
    controls: BarControls | None = None,
    ccd_controls: CcdControls | None = None,
    specs=None,
    degree: int = 3,
) -> FitResult:
    """Fit the model to a dataset; see :func:`bar_fit_design`."""
    design = build_design(dataset, specs=specs, degree=degree)
    return bar_fit_design(design, dataset.y, family, controls, ccd_controls)


def bar_fit_design(
    design: SieveDesign,
    y,
    family: Family,
    controls: BarControls | None = None,
    ccd_controls: CcdControls | None = None,
) -> FitResult:
    """Run the reweighted ridge iteration on a prebuilt design.

    Returns
    -------
    FitResult
        ``support`` holds the indices of exactly nonzero penalized
        coefficients; frozen coordinates are stored as exact zeros.
        ``converged`` is False when the outer cap is reached.
    """
    controls = controls or BarControls()
    block = design.block
    n = design.n
    lam = controls.lam if controls.lam is not None else select_lambda_fixed(controls.criterion, n)

    init = ccd_fit(
        design, y, family,
        PenaltyMap.ridge_on_beta(block, controls.xi) if block.p else PenaltyMap.unpenalized(block),
        ccd_controls,
    )
    ridge_beta = init.coeffs.beta.copy()
    prev = ridge_beta.copy()
    res = init
    converged = block.p == 0
    max_changes: list[float] = []
    beta_history: list[np.ndarray] = []
    supports: list[tuple[int, ...]] = []
    iterations = 0
    while not converged and iterations < controls.max_outer:
        iterations += 1
        pen = PenaltyMap.bar_on_beta(block, lam, prev, controls.freeze_tol)
        warm = res.vector.copy()
        warm[pen.frozen] = 0.0
        res = ccd_fit(design, y, family, pen, ccd_controls, warm=warm)
        cur = res.coeffs.beta
        change = float(np.max(np.abs(cur - prev))) if block.p else 0.0
        max_changes.append(change)
        beta_history.append(cur.copy())
        supports.append(tuple(np.flatnonzero(cur)))
        # a coordinate still shrinking through the freeze zone must be
        # frozen on a later iteration before the fit can stop
        pending = bool(np.any((cur != 0.0) & (np.abs(cur) < controls.freeze_tol)))
        if not pending:
            stable = (
                len(supports) >= controls.stable_iters
                and len(set(supports[-controls.stable_iters:])) == 1
            )
            if change < controls.outer_tol or (stable and change < controls.stable_tol):
                converged = True
        prev = cur.copy()

    return FitResult(
        coeffs=res.coeffs,
        support=np.flatnonzero(res.coeffs.beta),
        converged=converged and res.converged,
        lam=float(lam),
        xi=float(controls.xi),
        outer_iterations=iterations,
        max_changes=max_changes,
        beta_history=beta_history,
        ridge_beta=ridge_beta,
        ccd=res,
    )


def stationarity_check(fit: FitResult, design: SieveDesign, y, family: Family) -> float:
    """Largest normalized stationarity residual over the support.

    At the fixed point the doubled-likelihood gradient of a surviving
    coordinate equals minus twice the tuning scale over the estimate.
    Returns 0.0 for an empty support.
    """
    if fit.support.size == 0:
        return 0.0
    vec = fit.coeffs.to_vector(design.block)
    state = make_state(family, np.asarray(y, dtype=np.float64), design.matrix @ vec)
    worst = 0.0
    for j in fit.support:
        col = design.matrix[:, design.block.beta.start + j]
        g1, _ = coordinate_derivatives(family, state, col)
        b = fit.coeffs.beta[j]
        num = abs(2.0 * g1 + 2.0 * fit.lam / b)
        den = 1.0 + 2.0 * fit.lam / abs(b)
        worst = max(worst, num / den)
    return worst


@dataclass
class PathPoint:
    """One grid point of a ridge-scale path."""

    xi: float
    criterion: str
    fit: FitResult | None
    error: str | None = None


def bar_path(
    dataset_or_design,
    y=None,
    family: Family | None = None,
    xi_grid=(0.1, 1.0, 10.0),
    criteria=("aic", "bic"),
    ccd_controls: CcdControls | None = None,
    base_controls: BarControls | None = None,
    specs=None,
    degree: int = 3,
) -> list[PathPoint]:
    """Fit across a grid of ridge initialization scales.

    A failure at one grid point is recorded on its PathPoint and the
    remaining grid continues.
    """
    if isinstance(dataset_or_design, Dataset):
        design = build_design(dataset_or_design, specs=specs, degree=degree)
        y = dataset_or_design.y
    else:
        design = dataset_or_design
        if y is None:
            raise ValueError("y is required when passing a prebuilt design")
    if family is None:
        raise ValueError("family is required")
    base = base_controls or BarControls()
    points: list[PathPoint] = []
    for crit in criteria:
        for xi in xi_grid:
            try:
                controls = BarControls(
                    xi=float(xi),
                    lam=base.lam,
                    criterion=crit,
                    outer_tol=base.outer_tol,
                    max_outer=base.max_outer,
                    freeze_tol=base.freeze_tol,
                    stable_iters=base.stable_iters,
                    stable_tol=base.stable_tol,
                )
                fit = bar_fit_design(design, y, family, controls, ccd_controls)
                points.append(PathPoint(xi=float(xi), criterion=crit, fit=fit))
            except Exception as exc:  # noqa: BLE001 - per-point isolation
                points.append(PathPoint(xi=float(xi), criterion=crit, fit=None, error=str(exc)))
    return points
