"""Dataset container and assembly of the sieve-augmented design."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .bernstein import BasisSpec, build_sieve_block

__all__ = ["BlockMap", "Dataset", "SieveDesign", "build_design"]


def _as_matrix(a, n: int, what: str) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    if a.size == 0:
        return np.empty((n, 0))
    if a.ndim == 1:
        a = a[:, None]
    if a.ndim != 2 or a.shape[0] != n:
        raise ValueError(f"{what} must have {n} rows, got shape {a.shape}")
    return a


@dataclass(frozen=True)
class Dataset:
    """Response and the three covariate panels of a partly linear model.

    Attributes
    ----------
    y : ndarray of shape (n,)
        Response vector.
    x : ndarray of shape (n, p)
        High-dimensional block subject to selection penalties.
    w : ndarray of shape (n, q_w)
        Unpenalized covariates entering linearly.
    z : ndarray of shape (n, q_z)
        Continuous covariates entering through sieve expansions.
    """

    y: np.ndarray
    x: np.ndarray
    w: np.ndarray = field(default_factory=lambda: np.empty((0, 0)))
    z: np.ndarray = field(default_factory=lambda: np.empty((0, 0)))
    x_names: tuple[str, ...] | None = None
    w_names: tuple[str, ...] | None = None
    z_names: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        y = np.asarray(self.y, dtype=np.float64)
        if y.ndim != 1 or y.size == 0:
            raise ValueError(f"y must be a nonempty vector, got shape {y.shape}")
        n = y.size
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "x", _as_matrix(self.x, n, "x"))
        object.__setattr__(self, "w", _as_matrix(self.w, n, "w"))
        object.__setattr__(self, "z", _as_matrix(self.z, n, "z"))
        for panel, name in ((self.y, "y"), (self.x, "x"), (self.w, "w"), (self.z, "z")):
            if not np.all(np.isfinite(panel)):
                raise ValueError(f"panel {name} contains non-finite values")
        for names, panel, label in (
            (self.x_names, self.x, "x_names"),
            (self.w_names, self.w, "w_names"),
            (self.z_names, self.z, "z_names"),
        ):
            if names is not None and len(names) != panel.shape[1]:
                raise ValueError(f"{label} has {len(names)} entries for {panel.shape[1]} columns")

    @property
    def n(self) -> int:
        return self.y.size

    @property
    def p(self) -> int:
        return self.x.shape[1]

    @property
    def q_w(self) -> int:
        return self.w.shape[1]

    @property
    def q_z(self) -> int:
        return self.z.shape[1]

    def take(self, rows) -> "Dataset":
        """Row subset (or resample) preserving column metadata."""
        rows = np.asarray(rows)
        return Dataset(
            y=self.y[rows],
            x=self.x[rows],
            w=self.w[rows],
            z=self.z[rows],
            x_names=self.x_names,
            w_names=self.w_names,
            z_names=self.z_names,
        )


@dataclass(frozen=True)
class BlockMap:
    """Column layout of the augmented design matrix.

    Column 0 is the global intercept, followed by the penalized block,
    the unpenalized linear block, then the sieve columns per component.
    """

    p: int
    q_w: int
    gamma_sizes: tuple[int, ...]

    @property
    def intercept(self) -> int:
        return 0

    @property
    def beta(self) -> slice:
        return slice(1, 1 + self.p)

    @property
    def alpha(self) -> slice:
        return slice(1 + self.p, 1 + self.p + self.q_w)

    @property
    def gamma(self) -> slice:
        return slice(1 + self.p + self.q_w, self.total)

    @property
    def total(self) -> int:
        return 1 + self.p + self.q_w + sum(self.gamma_sizes)

    def gamma_component(self, j: int) -> slice:
        """Columns of sieve component ``j`` inside the full vector."""
        start = 1 + self.p + self.q_w + sum(self.gamma_sizes[:j])
        return slice(start, start + self.gamma_sizes[j])

    def gamma_local(self, j: int) -> slice:
        """Columns of sieve component ``j`` inside the gamma block."""
        start = sum(self.gamma_sizes[:j])
        return slice(start, start + self.gamma_sizes[j])

    def sweep_order(self) -> np.ndarray:
        """Default coordinate sweep: intercept, alpha, gamma, beta."""
        return np.concatenate(
            [
                np.array([self.intercept], dtype=np.int64),
                np.arange(self.alpha.start, self.alpha.stop, dtype=np.int64),
                np.arange(self.gamma.start, self.gamma.stop, dtype=np.int64),
                np.arange(self.beta.start, self.beta.stop, dtype=np.int64),
            ]
        )


@dataclass(frozen=True)
class SieveDesign:
    """Augmented design: intercept, penalized, linear and sieve columns.

    ``matrix`` is Fortran ordered so the sweep kernels read contiguous
    columns.
    """

    matrix: np.ndarray
    block: BlockMap
    specs: tuple[BasisSpec, ...]

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def take(self, rows) -> "SieveDesign":
        """Row subset sharing the block map and basis specs."""
        rows = np.asarray(rows)
        return SieveDesign(np.asfortranarray(self.matrix[rows]), self.block, self.specs)


def build_design(dataset: Dataset, specs=None, degree: int = 3) -> SieveDesign:
    """Assemble the augmented design matrix for a dataset.

    Parameters
    ----------
    dataset : Dataset
    specs : sequence of BasisSpec, optional
        Basis spec per continuous covariate. When omitted, each
        component gets the given degree on its observed range.
    degree : int
        Default polynomial degree used when ``specs`` is omitted.

    Returns
    -------
    SieveDesign
    """
    if specs is None:
        specs = tuple(
            BasisSpec(degree, float(np.min(dataset.z[:, j])), float(np.max(dataset.z[:, j])))
            for j in range(dataset.q_z)
        )
    else:
        specs = tuple(specs)
        if len(specs) != dataset.q_z:
            raise ValueError(f"{len(specs)} basis specs for {dataset.q_z} continuous covariates")
    sieve = build_sieve_block(dataset.z, specs) if dataset.q_z else None
    n = dataset.n
    pieces = [np.ones((n, 1)), dataset.x, dataset.w]
    if sieve is not None:
        pieces.append(sieve.matrix)
    matrix = np.asfortranarray(np.hstack(pieces))
    block = BlockMap(
        p=dataset.p,
        q_w=dataset.q_w,
        gamma_sizes=tuple(s.degree for s in specs),
    )
    return SieveDesign(matrix=matrix, block=block, specs=specs)
