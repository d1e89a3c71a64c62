"""Model families and the working state updated by coordinate moves.

Both families use their canonical link with dispersion one, so the
observed and expected information coincide and the coordinate
derivatives below are exact.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "ETA_CLIP",
    "Family",
    "LOGISTIC",
    "POISSON",
    "WorkingState",
    "coordinate_derivatives",
    "curvature_bound",
    "get_family",
    "log_likelihood",
    "make_state",
    "update_state",
]

# Poisson linear predictors are capped here inside the mean so a wild
# intermediate step cannot overflow the exponential.
ETA_CLIP = 30.0


@dataclass(frozen=True)
class Family:
    """A one-parameter exponential family with canonical link.

    Attributes
    ----------
    name : str
        ``"logistic"`` or ``"poisson"``.
    code : int
        Dispatch tag shared with the compiled sweep kernels.
    """

    name: str
    code: int

    def mean(self, eta) -> np.ndarray:
        """Inverse link, computed through overflow-safe branches."""
        eta = np.asarray(eta, dtype=np.float64)
        if self.code == 0:
            u = np.exp(-np.abs(eta))
            return np.where(eta >= 0.0, 1.0 / (1.0 + u), u / (1.0 + u))
        return np.exp(np.minimum(eta, ETA_CLIP))

    def unit_curvature(self, mu) -> np.ndarray:
        """Variance function evaluated at the mean."""
        mu = np.asarray(mu, dtype=np.float64)
        return mu * (1.0 - mu) if self.code == 0 else mu

    def loglik(self, y, eta) -> float:
        """Log-likelihood up to terms that depend on the data only."""
        y = np.asarray(y, dtype=np.float64)
        eta = np.asarray(eta, dtype=np.float64)
        if self.code == 0:
            # log(1 + e^eta) = max(eta, 0) + log1p(e^-|eta|)
            return float(np.sum(y * eta - np.maximum(eta, 0.0) - np.log1p(np.exp(-np.abs(eta)))))
        return float(np.sum(y * eta - np.exp(np.minimum(eta, ETA_CLIP))))

    def deviance(self, y, mu) -> float:
        """Deviance of the fitted means against the saturated model."""
        y = np.asarray(y, dtype=np.float64)
        mu = np.asarray(mu, dtype=np.float64)
        with np.errstate(divide="ignore", invalid="ignore"):
            if self.code == 0:
                a = np.where(y > 0.0, y * np.log(y / mu), 0.0)
                b = np.where(y < 1.0, (1.0 - y) * np.log((1.0 - y) / (1.0 - mu)), 0.0)
                return float(2.0 * np.sum(a + b))
            a = np.where(y > 0.0, y * np.log(y / mu), 0.0)
            return float(2.0 * np.sum(a - (y - mu)))


LOGISTIC = Family("logistic", 0)
POISSON = Family("poisson", 1)

_FAMILIES = {f.name: f for f in (LOGISTIC, POISSON)}


def get_family(name: str) -> Family:
    try:
        return _FAMILIES[name]
    except KeyError:
        raise ValueError(f"unknown family {name!r}; expected one of {sorted(_FAMILIES)}") from None


@dataclass
class WorkingState:
    """Response, linear predictor and fitted mean kept in lockstep.

    A single fit owns its state; the arrays are mutated in place by
    ``update_state`` and must never be shared across concurrent fits.
    """

    y: np.ndarray
    eta: np.ndarray
    mu: np.ndarray


def make_state(family: Family, y, eta=None) -> WorkingState:
    """Build a WorkingState from a response and linear predictor."""
    y = np.asarray(y, dtype=np.float64)
    eta = np.zeros_like(y) if eta is None else np.array(eta, dtype=np.float64)
    if eta.shape != y.shape:
        raise ValueError(f"eta shape {eta.shape} does not match y shape {y.shape}")
    if not np.all(np.isfinite(eta)):
        raise ValueError("linear predictor contains non-finite values")
    return WorkingState(y=y, eta=eta, mu=family.mean(eta))


def log_likelihood(family: Family, state: WorkingState) -> float:
    """Log-likelihood of the current state, data-only terms dropped."""
    return family.loglik(state.y, state.eta)


def coordinate_derivatives(family: Family, state: WorkingState, column) -> tuple[float, float]:
    """First and second derivative of the negative log-likelihood
    along one design column.

    Returns
    -------
    (first, second) : tuple of float
        ``first = -sum(col * (y - mu))`` and
        ``second = sum(col^2 * v(mu))`` with ``v`` the variance
        function, both exact at the current state.
    """
    col = np.asarray(column, dtype=np.float64)
    first = -float(col @ (state.y - state.mu))
    second = float((col * col) @ family.unit_curvature(state.mu))
    return first, second


def update_state(family: Family, state: WorkingState, column, delta: float) -> WorkingState:
    """Shift the linear predictor along a column and refresh the mean.

    Mutates ``state`` in place and returns it. Raises if the shifted
    predictor is no longer finite.
    """
    if delta != 0.0:
        state.eta += delta * np.asarray(column, dtype=np.float64)
        if not np.all(np.isfinite(state.eta)):
            raise FloatingPointError("linear predictor became non-finite during an update")
        state.mu = family.mean(state.eta)
    return state


def curvature_bound(family: Family, state: WorkingState, column, halfwidth: float) -> float:
    """Upper bound of the second derivative over a trust interval.

    Bounds ``sum(col^2 * v(mu(eta + t * col)))`` over ``|t| <=
    halfwidth`` using the column-level excursion ``halfwidth *
    max|col|``. Using this bound as the Newton denominator makes every
    coordinate step a descent step of the objective; it tightens to the
    exact curvature as the trust region shrinks. Mirrors the compiled
    sweep kernel arithmetic.
    """
    col = np.asarray(column, dtype=np.float64)
    dbar = halfwidth * float(np.max(np.abs(col))) if col.size else 0.0
    if family.code == 0:
        c1 = np.exp(-dbar) if dbar < 745.0 else 0.0
        a = np.abs(state.eta)
        u = np.exp(-a)
        with np.errstate(divide="ignore"):
            far = np.where(
                (u > 0.0) & (c1 > 0.0),
                1.0 / (2.0 + c1 / np.where(u > 0.0, u, 1.0) + u / (c1 if c1 > 0.0 else 1.0)),
                0.0,
            )
        b = np.where(a <= dbar, 0.25, far)
        return float((col * col) @ b)
    boost = np.exp(min(dbar, ETA_CLIP))
    return boost * float((col * col) @ state.mu)
