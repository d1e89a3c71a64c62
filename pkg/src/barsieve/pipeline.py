"""Preprocessing and inference utilities for genotype-style panels.

Minor-allele-frequency filtering, column-mean imputation, univariate
regression screening with Wald p-values, nonparametric bootstrap
standard errors, and delimited-text ingestion joined on sample ids.
"""

from __future__ import annotations

import csv
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .ccd import CcdControls, PenaltyMap, ccd_fit
from .design import BlockMap, Dataset, SieveDesign
from .family import ETA_CLIP, Family, LOGISTIC

__all__ = [
    "BootstrapResult",
    "MafReport",
    "ScreenReport",
    "Table",
    "bootstrap_se",
    "impute_missing",
    "load_table",
    "maf_filter",
    "merge_tables",
    "resample_indices",
    "univariate_screen",
]

GENOTYPE_CODES = (0.0, 1.0, 2.0)


@dataclass(frozen=True)
class MafReport:
    """Per-column allele frequencies and the filtering outcome.

    Attributes
    ----------
    freq : ndarray of shape (m,)
        Allele frequency, column mean of observed entries over two.
        NaN for all-missing columns.
    maf : ndarray of shape (m,)
        min(freq, 1 - freq), symmetric under recoding x -> 2 - x.
    missing : ndarray of shape (m,)
        Count of missing entries per column.
    retained : ndarray
        Indices with maf >= threshold.
    all_missing : ndarray
        Indices dropped because every entry was missing.
    threshold : float
    """

    freq: np.ndarray
    maf: np.ndarray
    missing: np.ndarray
    retained: np.ndarray
    all_missing: np.ndarray
    threshold: float


def maf_filter(x, threshold: float = 0.1) -> tuple[np.ndarray, MafReport]:
    """Drop genotype columns whose minor allele frequency is below threshold.

    Columns code allele counts 0/1/2 with NaN marking missing entries.
    Returns the retained column indices and a full report.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError(f"genotype matrix must be 2-d, got shape {x.shape}")
    if not 0.0 <= threshold <= 0.5:
        raise ValueError(f"threshold must lie in [0, 0.5], got {threshold}")
    observed = np.isfinite(x)
    bad = observed & ~np.isin(x, GENOTYPE_CODES)
    if np.any(bad):
        i, j = np.argwhere(bad)[0]
        raise ValueError(
            f"genotype entries must be 0, 1, 2 or missing; found {x[i, j]!r} at row {i}, column {j}"
        )
    counts = observed.sum(axis=0)
    freq = np.full(x.shape[1], np.nan)
    seen = counts > 0
    freq[seen] = np.nansum(x, axis=0)[seen] / counts[seen] / 2.0
    maf = np.minimum(freq, 1.0 - freq)
    empty = np.flatnonzero(~seen)
    if empty.size:
        warnings.warn(
            f"dropping {empty.size} all-missing genotype column(s): {empty.tolist()}",
            stacklevel=2,
        )
    keep = np.zeros(x.shape[1], dtype=bool)
    keep[seen] = maf[seen] >= threshold
    report = MafReport(
        freq=freq,
        maf=maf,
        missing=x.shape[0] - counts,
        retained=np.flatnonzero(keep),
        all_missing=empty,
        threshold=float(threshold),
    )
    return report.retained, report


def impute_missing(x) -> tuple[np.ndarray, np.ndarray]:
    """Fill missing entries with their column means.

    Returns the filled copy and the per-column count of imputed cells.
    All-missing columns stay untouched; drop those with maf_filter first.
    """
    x = np.array(x, dtype=np.float64)
    missing = ~np.isfinite(x)
    counts = missing.sum(axis=0)
    for j in np.flatnonzero((counts > 0) & (counts < x.shape[0])):
        hole = missing[:, j]
        x[hole, j] = x[~hole, j].mean()
    return x, counts


@dataclass(frozen=True)
class ScreenReport:
    """Univariate single-column regression screen.

    Attributes
    ----------
    coef : ndarray of shape (m,)
        Slope of the intercept-plus-column fit.
    se : ndarray of shape (m,)
        Model-based standard error from the 2 x 2 observed information.
    p_value : ndarray of shape (m,)
        Two-sided Wald p-value against the standard normal. Forced to 0
        for separated columns and to 1 for constant columns.
    retained : ndarray
        Indices with p_value < threshold, constant columns excluded.
    separated : ndarray of bool
        Columns whose fit diverged (perfect prediction); retained.
    constant : ndarray of bool
        Columns with no variation; removed.
    threshold : float
    """

    coef: np.ndarray
    se: np.ndarray
    p_value: np.ndarray
    retained: np.ndarray
    separated: np.ndarray
    constant: np.ndarray
    threshold: float


def _pair_design(col: np.ndarray) -> SieveDesign:
    matrix = np.ones((col.size, 2), order="F")
    matrix[:, 1] = col
    return SieveDesign(matrix, BlockMap(p=1, q_w=0, gamma_sizes=()), ())


def univariate_screen(
    x,
    y,
    family: Family = LOGISTIC,
    threshold: float = 0.1,
    controls: CcdControls | None = None,
) -> tuple[np.ndarray, ScreenReport]:
    """Retain columns whose single-covariate Wald p-value beats threshold.

    Each column is fit on its own next to an intercept, unpenalized.
    Columns that separate the response keep a p-value of 0 and survive;
    constant columns get p = 1 and are removed. Deterministic given the
    data and threshold, assembled in column order.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] != y.size:
        raise ValueError(f"x must have {y.size} rows, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("x contains non-finite entries; impute before screening")
    if family.name == "logistic" and not np.all((y == 0.0) | (y == 1.0)):
        raise ValueError("logistic screening needs a 0/1 response")
    m = x.shape[1]
    coef = np.zeros(m)
    se = np.full(m, np.inf)
    p_value = np.ones(m)
    separated = np.zeros(m, dtype=bool)
    constant = np.zeros(m, dtype=bool)
    for j in range(m):
        col = x[:, j]
        if np.ptp(col) == 0.0:
            constant[j] = True
            continue
        design = _pair_design(col)
        res = ccd_fit(design, y, family, PenaltyMap.unpenalized(design.block), controls)
        coef[j] = res.vector[1]
        # weights collapse under separation, so flag on predictor blowup
        if not res.converged or np.max(np.abs(res.eta)) >= 0.8 * ETA_CLIP:
            separated[j] = True
            p_value[j] = 0.0
            continue
        w = family.unit_curvature(family.mean(res.eta))
        a = w.sum()
        b = w @ col
        c = w @ (col * col)
        det = a * c - b * b
        if det <= 0.0 or not np.isfinite(det):
            separated[j] = True
            p_value[j] = 0.0
            continue
        se[j] = math.sqrt(a / det)
        p_value[j] = math.erfc(abs(coef[j] / se[j]) / math.sqrt(2.0))
    retained = np.flatnonzero((p_value < threshold) & ~constant)
    report = ScreenReport(
        coef=coef,
        se=se,
        p_value=p_value,
        retained=retained,
        separated=separated,
        constant=constant,
        threshold=float(threshold),
    )
    return retained, report


@dataclass(frozen=True)
class BootstrapResult:
    """Resampled coefficient estimates and their spread.

    Attributes
    ----------
    estimates : ndarray of shape (effective, k)
        One row per successful resample fit.
    se : ndarray of shape (k,)
        Sample standard deviation across resamples, ddof 1.
    selection_freq : ndarray of shape (k,)
        Fraction of resamples in which each coordinate is nonzero.
    requested, effective, failures : int
        Resamples asked for, kept, and dropped to fit errors.
    """

    estimates: np.ndarray
    se: np.ndarray
    selection_freq: np.ndarray
    requested: int
    effective: int
    failures: int


def resample_indices(y, rng: np.random.Generator, stratify: bool = True) -> np.ndarray:
    """Row indices for one bootstrap resample, drawn with replacement.

    With stratify each response class is resampled within itself, so
    class counts match the original data exactly.
    """
    y = np.asarray(y)
    if stratify:
        parts = [
            rows[rng.integers(0, rows.size, rows.size)]
            for v in np.unique(y)
            for rows in (np.flatnonzero(y == v),)
        ]
        return np.sort(np.concatenate(parts))
    return np.sort(rng.integers(0, y.size, y.size))


def bootstrap_se(
    dataset: Dataset,
    fit_fn: Callable[[Dataset], np.ndarray],
    b: int,
    seed: int = 0,
    stratify: bool | None = None,
    workers: int = 1,
) -> BootstrapResult:
    """Nonparametric bootstrap standard errors for an arbitrary fit recipe.

    fit_fn maps a Dataset to a flat coefficient vector and is rerun on
    each of b row resamples. Resampling is stratified by response class
    whenever the response is binary (pass stratify to override), keeping
    case/control balance. Failing resample fits are dropped and counted.

    Resample i draws from seed sequence (seed, i), so results do not
    depend on the worker count.
    """
    if b < 2:
        raise ValueError(f"need at least 2 resamples, got {b}")
    if stratify is None:
        stratify = np.unique(dataset.y).size <= 2

    def one(i: int):
        rng = np.random.default_rng(np.random.SeedSequence((seed, i)))
        rows = resample_indices(dataset.y, rng, stratify)
        try:
            return np.asarray(fit_fn(dataset.take(rows)), dtype=np.float64)
        except Exception as exc:  # noqa: BLE001 one bad resample must not kill the study
            warnings.warn(f"bootstrap resample {i} failed: {exc}", stacklevel=2)
            return None

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, range(b)))
    else:
        results = [one(i) for i in range(b)]
    kept = [v for v in results if v is not None]
    if len(kept) < 2:
        raise ValueError(f"only {len(kept)} of {b} bootstrap fits succeeded")
    estimates = np.vstack(kept)
    return BootstrapResult(
        estimates=estimates,
        se=estimates.std(axis=0, ddof=1),
        selection_freq=np.mean(estimates != 0.0, axis=0),
        requested=b,
        effective=len(kept),
        failures=b - len(kept),
    )


@dataclass(frozen=True)
class Table:
    """Rectangular numeric table keyed by a leading sample-id column."""

    ids: tuple[str, ...]
    names: tuple[str, ...]
    values: np.ndarray

    @property
    def n(self) -> int:
        return len(self.ids)


def load_table(path, delimiter: str | None = None) -> Table:
    """Read a delimited text table with a header and leading id column.

    Lines starting with # are comments and skipped, so emitted tables
    load back directly. The delimiter defaults to tab when the header
    line contains one, comma otherwise. Blank fields become NaN; any
    other non-numeric field raises an error naming the file, line and
    column.
    """
    with open(path, newline="") as fh:
        lineno = 0
        first = ""
        for line in fh:
            lineno += 1
            if line.strip() and not line.startswith("#"):
                first = line
                break
        if not first:
            raise ValueError(f"{path}: empty file")
        if delimiter is None:
            delimiter = "\t" if "\t" in first else ","
        header = next(csv.reader([first], delimiter=delimiter))
        if len(header) < 2:
            raise ValueError(f"{path}: header needs an id column plus data columns")
        names = tuple(h.strip() for h in header[1:])
        ids: list[str] = []
        rows: list[np.ndarray] = []
        for lineno, rec in enumerate(csv.reader(fh, delimiter=delimiter), start=lineno + 1):
            if not rec or all(not cell.strip() for cell in rec) or rec[0].startswith("#"):
                continue
            if len(rec) != len(header):
                raise ValueError(
                    f"{path}, line {lineno}: expected {len(header)} fields, got {len(rec)}"
                )
            ids.append(rec[0].strip())
            row = np.empty(len(names))
            for j, cell in enumerate(rec[1:]):
                cell = cell.strip()
                if not cell:
                    row[j] = np.nan
                    continue
                try:
                    row[j] = float(cell)
                except ValueError:
                    raise ValueError(
                        f"{path}, line {lineno}, column {names[j]}: "
                        f"cannot parse {cell!r} as a number"
                    ) from None
            rows.append(row)
    if not rows:
        raise ValueError(f"{path}: no data rows")
    if len(set(ids)) != len(ids):
        raise ValueError(f"{path}: duplicate sample ids")
    return Table(tuple(ids), names, np.vstack(rows))


def merge_tables(left: Table, right: Table) -> Table:
    """Join the right table onto the left by sample id, left order kept.

    Every left id must appear on the right; unmatched ids are listed in
    the error. Extra right rows are ignored.
    """
    pos = {s: i for i, s in enumerate(right.ids)}
    unmatched = [s for s in left.ids if s not in pos]
    if unmatched:
        shown = ", ".join(unmatched[:10])
        extra = "" if len(unmatched) <= 10 else f" and {len(unmatched) - 10} more"
        raise ValueError(f"{len(unmatched)} unmatched sample id(s): {shown}{extra}")
    order = np.array([pos[s] for s in left.ids], dtype=np.int64)
    return Table(
        left.ids,
        left.names + right.names,
        np.hstack([left.values, right.values[order]]),
    )
