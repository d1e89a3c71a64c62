"""Penalized cyclic coordinate descent for the augmented design.

One engine serves every estimator in the package: unpenalized and
ridge fits, the reweighted ridge iterations of broken adaptive ridge,
and the soft-thresholded L1 updates of the LASSO baselines. Penalties
only ever attach to the high-dimensional block; the intercept, the
linear covariates and the sieve columns are never penalized.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from ._kernels import PEN_BAR, PEN_L1, PEN_NONE, PEN_RIDGE
from .design import BlockMap, SieveDesign
from .family import Family, WorkingState, curvature_bound, make_state, update_state

__all__ = [
    "CcdControls",
    "CcdResult",
    "CoefficientBlocks",
    "PEN_BAR",
    "PEN_L1",
    "PEN_NONE",
    "PEN_RIDGE",
    "PenaltyMap",
    "ccd_fit",
    "newton_coordinate_update",
    "penalized_objective",
    "penalty_value",
]


@dataclass
class CoefficientBlocks:
    """Fitted coefficients split by design block."""

    intercept: float
    beta: np.ndarray
    alpha: np.ndarray
    gamma: np.ndarray

    @classmethod
    def from_vector(cls, vec: np.ndarray, block: BlockMap) -> "CoefficientBlocks":
        return cls(
            intercept=float(vec[block.intercept]),
            beta=np.array(vec[block.beta]),
            alpha=np.array(vec[block.alpha]),
            gamma=np.array(vec[block.gamma]),
        )

    def to_vector(self, block: BlockMap) -> np.ndarray:
        vec = np.empty(block.total)
        vec[block.intercept] = self.intercept
        vec[block.beta] = self.beta
        vec[block.alpha] = self.alpha
        vec[block.gamma] = self.gamma
        return vec


@dataclass(frozen=True)
class CcdControls:
    """Solver controls.

    Attributes
    ----------
    max_passes : int
        Cap on full cyclic passes.
    tol : float
        Relative objective-change tolerance; a fit converges once one
        full pass changes the penalized objective by less than
        ``tol * (1 + |objective|)``.  Both the measured difference of
        pass objectives and the sweep's own running estimate of its
        improvement must clear the threshold, so convergence stays
        meaningful below the resolution of the difference.
    trust_init : float
        Initial per-coordinate trust radius.
    trust_grow, trust_shrink : float
        After each visit the radius becomes
        ``max(grow * |step|, shrink * radius)``.
    max_inner : int
        Cap on active-set sweeps between full passes of an L1 fit.
    """

    max_passes: int = 500
    tol: float = 1e-10
    trust_init: float = 1.0
    trust_grow: float = 2.0
    trust_shrink: float = 0.5
    max_inner: int = 100

    def __post_init__(self) -> None:
        if self.max_passes < 1:
            raise ValueError("max_passes must be positive")
        if not self.tol > 0.0:
            raise ValueError("tol must be positive")
        if not self.trust_init > 0.0:
            raise ValueError("trust_init must be positive")
        if not (self.trust_grow > 0.0 and 0.0 < self.trust_shrink < 1.0):
            raise ValueError("trust factors must satisfy grow > 0 and 0 < shrink < 1")


class PenaltyMap:
    """Per-column penalty assignment over the augmented design.

    Kinds are ``PEN_NONE``, ``PEN_RIDGE`` (value ``xi``, contribution
    ``xi * b^2``), ``PEN_BAR`` (value ``lam / prev^2``, contribution
    ``lam * b^2 / prev^2``) and ``PEN_L1`` (value ``lam``, contribution
    ``2 * lam * |b|``), all on the doubled-likelihood objective scale.
    Frozen columns are held at exactly zero and never swept.

    Only the constructors below exist, and each of them penalizes the
    high-dimensional block alone, which makes the unpenalized status of
    the intercept, linear and sieve columns structural.
    """

    def __init__(self, block: BlockMap, kind=None, value=None, frozen=None):
        total = block.total
        self.block = block
        self.kind = np.zeros(total, dtype=np.int8) if kind is None else kind
        self.value = np.zeros(total) if value is None else value
        self.frozen = np.zeros(total, dtype=np.bool_) if frozen is None else frozen
        outside = np.ones(total, dtype=bool)
        outside[block.beta] = False
        if np.any(self.kind[outside] != PEN_NONE) or np.any(self.frozen[outside]):
            raise ValueError("penalties and freezes may only touch the penalized block")

    @classmethod
    def unpenalized(cls, block: BlockMap) -> "PenaltyMap":
        return cls(block)

    @classmethod
    def frozen_beta(cls, block: BlockMap, mask=None) -> "PenaltyMap":
        """Hold penalized coordinates at zero without penalizing the
        rest; the whole block is frozen when no mask is given."""
        frozen = np.zeros(block.total, dtype=np.bool_)
        if mask is None:
            frozen[block.beta] = True
        else:
            mask = np.asarray(mask, dtype=np.bool_)
            if mask.shape != (block.p,):
                raise ValueError(f"frozen mask must have shape ({block.p},)")
            frozen[block.beta] = mask
        return cls(block, frozen=frozen)

    @classmethod
    def ridge_on_beta(cls, block: BlockMap, xi: float) -> "PenaltyMap":
        if not (np.isfinite(xi) and xi > 0.0):
            raise ValueError(f"ridge scale must be positive and finite, got {xi!r}")
        pen = cls(block)
        pen.kind[block.beta] = PEN_RIDGE
        pen.value[block.beta] = xi
        return pen

    @classmethod
    def bar_on_beta(cls, block: BlockMap, lam: float, prev_beta, freeze_tol: float) -> "PenaltyMap":
        """Reweighted ridge around a previous estimate.

        Coordinates with ``|prev| < freeze_tol`` are frozen at zero;
        the rest get weight ``lam / prev^2``, so the previous estimate
        is nonzero wherever a weight is formed.
        """
        if not (np.isfinite(lam) and lam > 0.0):
            raise ValueError(f"penalty scale must be positive and finite, got {lam!r}")
        prev = np.asarray(prev_beta, dtype=np.float64)
        if prev.shape != (block.p,):
            raise ValueError(f"previous estimate must have shape ({block.p},)")
        pen = cls(block)
        dead = np.abs(prev) < freeze_tol
        pen.frozen[block.beta] = dead
        kind = pen.kind[block.beta]
        value = pen.value[block.beta]
        kind[~dead] = PEN_BAR
        value[~dead] = lam / prev[~dead] ** 2
        pen.kind[block.beta] = kind
        pen.value[block.beta] = value
        return pen

    @classmethod
    def l1_on_beta(cls, block: BlockMap, lam: float, multipliers=None, frozen_beta=None) -> "PenaltyMap":
        """L1 on the penalized block, optionally with per-column
        multipliers (adaptive weights) and pre-frozen coordinates."""
        if not (np.isfinite(lam) and lam > 0.0):
            raise ValueError(f"penalty scale must be positive and finite, got {lam!r}")
        pen = cls(block)
        value = np.full(block.p, lam)
        if multipliers is not None:
            mult = np.asarray(multipliers, dtype=np.float64)
            if mult.shape != (block.p,):
                raise ValueError(f"multipliers must have shape ({block.p},)")
            if not np.all(np.isfinite(mult) & (mult > 0.0)):
                raise ValueError("multipliers must be positive and finite")
            value = value * mult
        pen.kind[block.beta] = PEN_L1
        pen.value[block.beta] = value
        if frozen_beta is not None:
            dead = np.asarray(frozen_beta, dtype=np.bool_)
            if dead.shape != (block.p,):
                raise ValueError(f"frozen mask must have shape ({block.p},)")
            pen.frozen[block.beta] = dead
            kind = pen.kind[block.beta]
            kind[dead] = PEN_NONE
            pen.kind[block.beta] = kind
        return pen


def penalty_value(penalties: PenaltyMap, vec: np.ndarray) -> float:
    """Penalty contribution of a coefficient vector."""
    quad = (penalties.kind == PEN_RIDGE) | (penalties.kind == PEN_BAR)
    lone = penalties.kind == PEN_L1
    total = float(np.sum(penalties.value[quad] * vec[quad] ** 2))
    total += float(np.sum(2.0 * penalties.value[lone] * np.abs(vec[lone])))
    return total


def penalized_objective(
    coeffs: CoefficientBlocks | np.ndarray,
    state: WorkingState,
    family: Family,
    penalties: PenaltyMap,
) -> float:
    """Twice the negative log-likelihood plus the penalty terms."""
    vec = coeffs.to_vector(penalties.block) if isinstance(coeffs, CoefficientBlocks) else np.asarray(coeffs)
    return -2.0 * family.loglik(state.y, state.eta) + penalty_value(penalties, vec)


def newton_coordinate_update(
    j: int,
    coef: np.ndarray,
    design: SieveDesign,
    state: WorkingState,
    family: Family,
    penalties: PenaltyMap,
    controls: CcdControls,
    trust: np.ndarray,
) -> tuple[float, float]:
    """One trust-clipped Newton update of coordinate ``j``.

    Shares its step rule with the compiled sweep kernel: the proposed
    step is minus gradient over curvature (bounded over the trust
    interval), clipped to the trust radius, with quadratic penalties
    folded into both numerator and denominator and L1 handled by
    soft thresholding that never crosses zero.

    Mutates ``coef[j]``, the working state and ``trust[j]``; returns
    ``(new value, applied step)``.
    """
    if penalties.frozen[j]:
        return float(coef[j]), 0.0
    col = design.matrix[:, j]
    g1 = -float(col @ (state.y - state.mu))
    g2 = curvature_bound(family, state, col, float(trust[j]))
    delta = float(
        _kernels.coordinate_delta(
            g1, g2, float(coef[j]), int(penalties.kind[j]), float(penalties.value[j]), float(trust[j])
        )
    )
    if delta != 0.0:
        coef[j] += delta
        update_state(family, state, col, delta)
    trust[j] = max(
        controls.trust_grow * abs(delta),
        controls.trust_shrink * trust[j],
        _kernels.TRUST_FLOOR,
    )
    return float(coef[j]), delta


@dataclass
class CcdResult:
    """Converged (or capped) state of one coordinate descent fit."""

    coeffs: CoefficientBlocks
    vector: np.ndarray
    eta: np.ndarray
    objective: float
    converged: bool
    passes: int
    pass_objectives: list[float] = field(default_factory=list)
    clip_events: int = 0
    skip_events: int = 0


def _check_matrix(design: SieveDesign, y: np.ndarray) -> None:
    if y.shape != (design.n,):
        raise ValueError(f"response length {y.shape} does not match design rows {design.n}")
    if not np.all(np.isfinite(design.matrix)):
        raise ValueError("design matrix contains non-finite values")
    if not np.all(np.isfinite(y)):
        raise ValueError("response contains non-finite values")


def ccd_fit(
    design: SieveDesign,
    y,
    family: Family,
    penalties: PenaltyMap,
    controls: CcdControls | None = None,
    warm=None,
    sweep_order=None,
) -> CcdResult:
    """Minimize the penalized objective by cyclic coordinate descent.

    Parameters
    ----------
    design : SieveDesign
    y : ndarray
        Response vector.
    family : Family
    penalties : PenaltyMap
    controls : CcdControls, optional
    warm : CoefficientBlocks or ndarray, optional
        Starting coefficients; zeros when omitted. Frozen coordinates
        are projected to exactly zero before the first pass.
    sweep_order : ndarray of int, optional
        Visit order of the columns; defaults to intercept, linear
        block, sieve block, then the penalized block.

    Returns
    -------
    CcdResult
        ``converged`` is False when the pass cap is reached; the
        coefficients achieved so far are still returned.
    """
    controls = controls or CcdControls()
    block = design.block
    y = np.asarray(y, dtype=np.float64)
    _check_matrix(design, y)

    if warm is None:
        vec = np.zeros(block.total)
    elif isinstance(warm, CoefficientBlocks):
        vec = warm.to_vector(block)
    else:
        vec = np.array(warm, dtype=np.float64)
        if vec.shape != (block.total,):
            raise ValueError(f"warm start must have shape ({block.total},)")
    vec[penalties.frozen] = 0.0

    if sweep_order is None:
        order = block.sweep_order()
    else:
        order = np.asarray(sweep_order, dtype=np.int64)

    matrix = design.matrix
    colmax = np.max(np.abs(matrix), axis=0) if matrix.size else np.zeros(block.total)
    eta = matrix @ vec
    emabs = np.empty_like(eta)
    mu = np.empty_like(eta)
    fam = family.code
    clips = _kernels.refresh_state(eta, emabs, mu, fam)
    skips = 0
    trust = np.full(block.total, controls.trust_init)
    kind = penalties.kind
    value = penalties.value
    frozen = penalties.frozen
    has_l1 = bool(np.any(kind == PEN_L1))

    def objective() -> float:
        return float(_kernels.neg2_loglik(y, eta, fam)) + penalty_value(penalties, vec)

    obj = objective()
    pass_objectives: list[float] = []
    converged = False
    passes = 0
    for passes in range(1, controls.max_passes + 1):
        if has_l1 and passes > 1:
            # iterate the current active set to convergence before the
            # next full pass; glmnet-style working set refinement
            active = ~frozen & ((kind != PEN_L1) | (vec != 0.0))
            inner_order = order[active[order]]
            for _ in range(controls.max_inner):
                c, s, dec = _kernels.cd_sweep(
                    matrix, colmax, y, eta, emabs, mu, fam, vec, kind, value,
                    frozen, trust, inner_order, controls.trust_grow, controls.trust_shrink,
                )
                clips += c
                skips += s
                inner_obj = objective()
                gate = controls.tol * (1.0 + abs(inner_obj))
                done = abs(obj - inner_obj) < gate and dec < gate
                obj = inner_obj
                if done:
                    break
        before = obj
        c, s, dec = _kernels.cd_sweep(
            matrix, colmax, y, eta, emabs, mu, fam, vec, kind, value,
            frozen, trust, order, controls.trust_grow, controls.trust_shrink,
        )
        clips += c
        skips += s
        obj = objective()
        pass_objectives.append(obj)
        # the analytic per-step decrement keeps its resolution after the
        # measured difference of two near-equal objectives underflows,
        # so tiny tolerances still mean what they say
        gate = controls.tol * (1.0 + abs(obj))
        if abs(before - obj) < gate and dec < gate:
            converged = True
            break

    if not np.isfinite(obj):
        raise FloatingPointError("penalized objective became non-finite")
    if clips > 0:
        warnings.warn(
            f"capped {clips} Poisson linear predictor evaluations at {_kernels.ETA_CLIP}",
            RuntimeWarning,
            stacklevel=2,
        )
    if skips > 0:
        warnings.warn(
            f"skipped {skips} coordinate updates with zero curvature and nonzero gradient",
            RuntimeWarning,
            stacklevel=2,
        )
    return CcdResult(
        coeffs=CoefficientBlocks.from_vector(vec, block),
        vector=vec,
        eta=eta,
        objective=obj,
        converged=converged,
        passes=passes,
        pass_objectives=pass_objectives,
        clip_events=clips,
        skip_events=skips,
    )
