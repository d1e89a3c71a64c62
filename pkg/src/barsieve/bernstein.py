"""Bernstein polynomial sieve bases for continuous model components.

Each continuous covariate is expanded in Bernstein polynomials of a
fixed degree on a declared support interval. The zero-order basis is
dropped from every component and a single global intercept absorbs the
constant direction, so component curves are identified only up to a
constant and are reported centered at the interval midpoint.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "BasisSpec",
    "SieveBlock",
    "bernstein_basis",
    "build_sieve_block",
    "evaluate_psi",
]


@dataclass(frozen=True)
class BasisSpec:
    """Degree and support interval of one Bernstein expansion.

    Parameters
    ----------
    degree : int
        Polynomial degree ``m``; the retained columns are the basis
        polynomials of index ``1..m``.
    lower, upper : float
        Endpoints of the support interval. Observations must fall
        inside ``[lower, upper]``.
    """

    degree: int
    lower: float
    upper: float

    def __post_init__(self) -> None:
        if int(self.degree) != self.degree or self.degree < 1:
            raise ValueError(f"degree must be a positive integer, got {self.degree!r}")
        if not (np.isfinite(self.lower) and np.isfinite(self.upper)):
            raise ValueError("support endpoints must be finite")
        if not self.lower < self.upper:
            raise ValueError(
                f"lower endpoint {self.lower!r} must be strictly below upper endpoint {self.upper!r}"
            )

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.lower + self.upper)


@dataclass(frozen=True)
class SieveBlock:
    """Evaluated sieve columns for a panel of continuous covariates.

    Attributes
    ----------
    specs : tuple of BasisSpec
        One spec per component, in column order of the input panel.
    matrix : ndarray of shape (n, sum of degrees)
        Concatenated basis columns, indices ``1..m`` per component.
    slices : tuple of slice
        Column range of each component inside ``matrix``.
    """

    specs: tuple[BasisSpec, ...]
    matrix: np.ndarray
    slices: tuple[slice, ...]


def _binomials(m: int) -> np.ndarray:
    # multiplicative recurrence, exact in double precision for small m
    out = np.empty(m + 1)
    out[0] = 1.0
    for k in range(1, m + 1):
        out[k] = out[k - 1] * (m - k + 1) / k
    return out


def _to_unit(z: np.ndarray, spec: BasisSpec, component: int | None) -> np.ndarray:
    bad = ~np.isfinite(z) | (z < spec.lower) | (z > spec.upper)
    if np.any(bad):
        value = np.asarray(z).reshape(-1)[np.flatnonzero(np.asarray(bad).reshape(-1))[0]]
        where = "" if component is None else f" (component {component})"
        raise ValueError(
            f"value {value!r} outside basis support [{spec.lower}, {spec.upper}]{where}"
        )
    return (z - spec.lower) / (spec.upper - spec.lower)


def _basis_matrix(z: np.ndarray, spec: BasisSpec, component: int | None = None) -> np.ndarray:
    """All basis polynomials ``0..m`` evaluated at ``z``, shape (n, m + 1)."""
    t = _to_unit(np.asarray(z, dtype=np.float64), spec, component)
    m = spec.degree
    coef = _binomials(m)
    s = 1.0 - t
    out = np.empty(t.shape + (m + 1,))
    tp = np.ones_like(t)
    for k in range(m + 1):
        out[..., k] = coef[k] * tp * s ** (m - k)
        tp = tp * t
    return out


def bernstein_basis(z, k: int, spec: BasisSpec):
    """Evaluate the Bernstein basis polynomial of index ``k``.

    The polynomial is ``C(m, k) t^k (1 - t)^(m - k)`` with ``t`` the
    affine map of ``z`` onto ``[0, 1]``.

    Parameters
    ----------
    z : float or array_like
        Evaluation points inside ``[spec.lower, spec.upper]``.
    k : int
        Basis index in ``0..spec.degree``.
    spec : BasisSpec

    Returns
    -------
    float or ndarray
        Basis values, scalar when ``z`` is scalar.
    """
    m = spec.degree
    if not 0 <= k <= m:
        raise ValueError(f"basis index {k} outside 0..{m}")
    scalar = np.ndim(z) == 0
    vals = _basis_matrix(np.atleast_1d(z), spec)[..., k]
    return float(vals[0]) if scalar else vals


def build_sieve_block(z, specs) -> SieveBlock:
    """Assemble retained sieve columns for a continuous covariate panel.

    Parameters
    ----------
    z : ndarray of shape (n, q)
        Continuous covariates, one column per component.
    specs : sequence of BasisSpec
        One spec per column of ``z``.

    Returns
    -------
    SieveBlock
        The zero-order polynomial of every component is dropped, so
        component ``j`` contributes ``specs[j].degree`` columns.
    """
    z = np.asarray(z, dtype=np.float64)
    if z.ndim == 1:
        z = z[:, None]
    specs = tuple(specs)
    if z.shape[1] != len(specs):
        raise ValueError(f"{z.shape[1]} covariate columns but {len(specs)} basis specs")
    pieces = []
    slices = []
    start = 0
    for j, spec in enumerate(specs):
        full = _basis_matrix(z[:, j], spec, component=j)
        pieces.append(full[:, 1:])
        slices.append(slice(start, start + spec.degree))
        start += spec.degree
    matrix = np.hstack(pieces) if pieces else np.empty((z.shape[0], 0))
    return SieveBlock(specs, matrix, tuple(slices))


def evaluate_psi(gamma, spec: BasisSpec, grid) -> np.ndarray:
    """Reconstruct one centered component curve on a grid.

    The curve is the linear combination of retained basis polynomials
    shifted so that it is exactly zero at the interval midpoint.

    Parameters
    ----------
    gamma : ndarray of shape (spec.degree,)
        Coefficients of basis indices ``1..m``.
    spec : BasisSpec
    grid : array_like
        Evaluation points inside the support interval.

    Returns
    -------
    ndarray
        Centered curve values, same length as ``grid``.
    """
    gamma = np.asarray(gamma, dtype=np.float64)
    if gamma.shape != (spec.degree,):
        raise ValueError(
            f"expected {spec.degree} coefficients for degree {spec.degree}, got shape {gamma.shape}"
        )
    grid = np.atleast_1d(np.asarray(grid, dtype=np.float64))
    # evaluating the midpoint through the same matrix product keeps the
    # centered value at an on-grid midpoint exactly zero
    pts = np.concatenate([grid, [spec.midpoint]])
    vals = _basis_matrix(pts, spec)[:, 1:] @ gamma
    return vals[:-1] - vals[-1]
