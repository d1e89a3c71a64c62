"""Command line interface.

Subcommands
-----------
fit        one model fit on a data file or a generated benchmark dataset
simulate   replication study emitting summary, curve and bias tables
path       coefficient paths across ridge initialization scales
screen     allele-frequency and univariate p-value filtering of a panel
bootstrap  resampled standard errors for a full fit recipe

Configuration comes from an optional JSON file plus flag overrides;
flags win. Every emitted table starts with a comment line carrying the
tool version and a 12-hex-digit hash of the resolved configuration
(worker count and output directory excluded), so a rerun with the same
configuration and seed is byte-identical at any thread count. The
BARSIEVE_THREADS environment variable overrides the worker count.
Machine tables carry 17 significant digits; the terminal summary is
rounded to 4. Exit status is 0 when every requested fit converged and
all outputs were written, 1 on non-convergence or runtime failure, and
2 on configuration errors, which are detected before anything is
written.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .bar import BarControls, bar_fit_design, bar_path
from .baselines import adaptive_lasso_fit, cv_fit, lasso_fit, ridge_pilot
from .bernstein import BasisSpec, evaluate_psi
from .ccd import PenaltyMap, ccd_fit
from .design import Dataset, SieveDesign, build_design
from .family import Family, get_family
from .pipeline import (
    Table,
    bootstrap_se,
    impute_missing,
    load_table,
    maf_filter,
    merge_tables,
    univariate_screen,
)
from .simulate import (
    METHOD_NAMES,
    ScenarioConfig,
    average_curves,
    generate_scenario,
    run_replications,
    scenario_preset,
    true_curves,
)

__all__ = ["ConfigError", "RunConfig", "main"]

SUBCOMMANDS = ("fit", "simulate", "path", "screen", "bootstrap")
PRESETS = ("s1", "s2", "s4")


class ConfigError(Exception):
    """Invalid configuration; reported before any output is written."""


@dataclass(frozen=True)
class ContinuousSpec:
    """Declared continuous column: name, optional range and degree."""

    name: str
    lower: float | None = None
    upper: float | None = None
    degree: int | None = None


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved run configuration of one subcommand."""

    subcommand: str
    out: str
    seed: int = 0
    threads: int = 1
    family: str = "logistic"
    scenario: str | None = None
    n: int | None = None
    p: int | None = None
    rep: int = 0
    data: str | None = None
    response: str | None = None
    penalized: tuple[str, ...] = ()
    linear: tuple[str, ...] = ()
    continuous: tuple[ContinuousSpec, ...] = ()
    degree: int = 3
    method: str = "bar-bic"
    methods: tuple[str, ...] = ("bar-aic", "bar-bic", "lasso", "alasso")
    xi: float = 1.0
    lam: float | None = None
    cv_folds: int = 10
    grid_length: int = 100
    grid_ratio: float = 1e-3
    bootstrap: int = 0
    resamples: int = 100
    stratify: bool | None = None
    xi_grid: tuple[float, ...] = (0.1, 1.0, 10.0)
    replications: int = 50
    bias: bool = False
    beta0: tuple[float, ...] | None = None
    alpha0: tuple[float, ...] | None = None
    psi_names: tuple[str, ...] | None = None
    rho: float = 0.25
    genotype: str | None = None
    pheno: str | None = None
    maf_threshold: float = 0.1
    p_threshold: float = 0.1


_COMMON_KEYS = ("out", "seed", "threads", "family")
_SOURCE_KEYS = (
    "scenario", "n", "p", "rep",
    "data", "response", "penalized", "linear", "continuous", "degree",
)
_TUNING_KEYS = ("method", "xi", "lam", "cv_folds", "grid_length", "grid_ratio")
_ALLOWED_KEYS = {
    "fit": _COMMON_KEYS + _SOURCE_KEYS + _TUNING_KEYS + ("bootstrap", "stratify"),
    "simulate": _COMMON_KEYS + (
        "scenario", "n", "p", "degree", "replications", "methods", "bias",
        "cv_folds", "grid_length", "grid_ratio",
        "beta0", "alpha0", "psi_names", "rho",
    ),
    "path": _COMMON_KEYS + _SOURCE_KEYS + ("xi_grid",),
    "screen": _COMMON_KEYS + (
        "genotype", "pheno", "response", "maf_threshold", "p_threshold",
    ),
    "bootstrap": _COMMON_KEYS + _SOURCE_KEYS + _TUNING_KEYS + ("resamples", "stratify"),
}


def _csv_strings(text: str) -> tuple[str, ...]:
    return tuple(s.strip() for s in text.split(",") if s.strip())


def _csv_floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(s) for s in _csv_strings(text))
    except ValueError as exc:
        raise ConfigError(f"bad numeric list {text!r}: {exc}") from None


def _parse_continuous_flag(text: str) -> tuple[ContinuousSpec, ...]:
    """Parse name[:lower:upper[:degree]] items joined by commas."""
    specs = []
    for item in _csv_strings(text):
        parts = item.split(":")
        if len(parts) == 1:
            specs.append(ContinuousSpec(parts[0]))
        elif len(parts) in (3, 4):
            try:
                lower, upper = float(parts[1]), float(parts[2])
                degree = int(parts[3]) if len(parts) == 4 else None
            except ValueError as exc:
                raise ConfigError(f"bad continuous spec {item!r}: {exc}") from None
            specs.append(ContinuousSpec(parts[0], lower, upper, degree))
        else:
            raise ConfigError(
                f"bad continuous spec {item!r}; expected name, name:lower:upper "
                f"or name:lower:upper:degree"
            )
    return tuple(specs)


def _continuous_from_config(value) -> tuple[ContinuousSpec, ...]:
    if isinstance(value, str):
        return _parse_continuous_flag(value)
    specs = []
    for item in value:
        if isinstance(item, str):
            specs.append(ContinuousSpec(item))
        elif isinstance(item, dict):
            extra = set(item) - {"name", "lower", "upper", "degree"}
            if extra or "name" not in item:
                raise ConfigError(f"bad continuous entry {item!r}")
            specs.append(
                ContinuousSpec(
                    str(item["name"]),
                    None if item.get("lower") is None else float(item["lower"]),
                    None if item.get("upper") is None else float(item["upper"]),
                    None if item.get("degree") is None else int(item["degree"]),
                )
            )
        else:
            raise ConfigError(f"bad continuous entry {item!r}")
    return tuple(specs)


def _parse_args(argv) -> argparse.Namespace:
    parser = argparse.ArgumentParser(
        prog="barsieve",
        description="Sparse generalized partly linear model fitting and benchmarks.",
    )
    parser.add_argument("--version", action="version", version=f"barsieve {__version__}")
    subs = parser.add_subparsers(dest="subcommand", required=True)

    def common(sp):
        sp.add_argument("--config", help="JSON configuration file; flags override it")
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--threads", type=int)
        sp.add_argument("--family", choices=("logistic", "poisson"))

    def source(sp):
        sp.add_argument("--scenario", help=f"benchmark preset, one of {', '.join(PRESETS)}")
        sp.add_argument("--n", type=int, help="rows for a generated dataset")
        sp.add_argument("--p", type=int, help="penalized columns for a generated dataset")
        sp.add_argument("--rep", type=int, help="replication index of the generated dataset")
        sp.add_argument("--data", help="delimited data file with header and id column")
        sp.add_argument("--response", help="response column name")
        sp.add_argument("--penalized", help="penalized column names, comma separated; trailing * matches by prefix")
        sp.add_argument("--linear", help="unpenalized linear column names, comma separated")
        sp.add_argument("--continuous", help="smooth columns as name[:lower:upper[:degree]], comma separated")
        sp.add_argument("--degree", type=int, help="default basis degree")

    def tuning(sp):
        sp.add_argument("--method", choices=METHOD_NAMES)
        sp.add_argument("--xi", type=float, help="ridge initialization scale")
        sp.add_argument("--lam", type=float, help="fixed tuning scale overriding the default rule")
        sp.add_argument("--cv-folds", type=int, dest="cv_folds")
        sp.add_argument("--grid-length", type=int, dest="grid_length")
        sp.add_argument("--grid-ratio", type=float, dest="grid_ratio")

    sp = subs.add_parser("fit", help="fit one model and write coefficient tables")
    common(sp); source(sp); tuning(sp)
    sp.add_argument("--bootstrap", type=int, help="bootstrap resamples for standard errors, 0 to skip")
    sp.add_argument("--stratify", choices=("auto", "yes", "no"))

    sp = subs.add_parser("simulate", help="run a replication study")
    common(sp)
    sp.add_argument("--scenario")
    sp.add_argument("--n", type=int)
    sp.add_argument("--p", type=int)
    sp.add_argument("--degree", type=int)
    sp.add_argument("--replications", "-R", type=int)
    sp.add_argument("--methods", help="comma separated subset of " + ", ".join(METHOD_NAMES))
    sp.add_argument("--bias", action=argparse.BooleanOptionalAction, default=None)
    sp.add_argument("--cv-folds", type=int, dest="cv_folds")
    sp.add_argument("--grid-length", type=int, dest="grid_length")
    sp.add_argument("--grid-ratio", type=float, dest="grid_ratio")

    sp = subs.add_parser("path", help="coefficient paths over a ridge-scale grid")
    common(sp); source(sp)
    sp.add_argument("--xi-grid", dest="xi_grid", help="comma separated positive scales")

    sp = subs.add_parser("screen", help="filter a genotype panel by MAF and p-value")
    common(sp)
    sp.add_argument("--genotype", help="genotype table, columns coded 0/1/2, blanks missing")
    sp.add_argument("--pheno", help="phenotype table sharing sample ids")
    sp.add_argument("--response", help="response column in the phenotype table")
    sp.add_argument("--maf-threshold", type=float, dest="maf_threshold")
    sp.add_argument("--p-threshold", type=float, dest="p_threshold")

    sp = subs.add_parser("bootstrap", help="bootstrap standard errors for a fit recipe")
    common(sp); source(sp); tuning(sp)
    sp.add_argument("--resamples", type=int, help="bootstrap resamples, at least 2")
    sp.add_argument("--stratify", choices=("auto", "yes", "no"))

    return parser.parse_args(argv)


def _merge_config(args: argparse.Namespace) -> RunConfig:
    sub = args.subcommand
    allowed = _ALLOWED_KEYS[sub]
    merged: dict = {}

    if args.config is not None:
        try:
            with open(args.config) as fh:
                loaded = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{args.config}: invalid JSON: {exc}") from None
        if not isinstance(loaded, dict):
            raise ConfigError(f"{args.config}: top level must be an object")
        file_sub = loaded.pop("subcommand", sub)
        if file_sub != sub:
            raise ConfigError(f"config file is for subcommand {file_sub!r}, not {sub!r}")
        unknown = sorted(set(loaded) - set(allowed))
        if unknown:
            raise ConfigError(f"unknown config key(s) for {sub}: {', '.join(unknown)}")
        merged.update(loaded)

    for key in allowed:
        flag = getattr(args, key, None)
        if flag is not None:
            merged[key] = flag

    for key, cast in (
        ("penalized", _csv_strings), ("linear", _csv_strings),
        ("methods", _csv_strings), ("psi_names", _csv_strings),
        ("xi_grid", _csv_floats),
        ("beta0", None), ("alpha0", None),
    ):
        if key in merged:
            value = merged[key]
            if isinstance(value, str):
                if cast is None:
                    raise ConfigError(f"{key} must be a numeric list")
                merged[key] = cast(value)
            else:
                merged[key] = tuple(value)
    if "continuous" in merged:
        merged["continuous"] = _continuous_from_config(merged["continuous"])
    if "stratify" in merged and isinstance(merged["stratify"], str):
        merged["stratify"] = {"auto": None, "yes": True, "no": False}[merged["stratify"]]

    env_threads = os.environ.get("BARSIEVE_THREADS")
    if env_threads:
        try:
            merged["threads"] = int(env_threads)
        except ValueError:
            raise ConfigError(f"BARSIEVE_THREADS must be an integer, got {env_threads!r}") from None

    # JSON carries 600.0 as readily as 600; normalize scalar types here
    int_keys = (
        "seed", "threads", "n", "p", "rep", "degree", "cv_folds",
        "grid_length", "bootstrap", "resamples", "replications",
    )
    float_keys = ("xi", "lam", "grid_ratio", "maf_threshold", "p_threshold", "rho")
    try:
        for key in int_keys:
            if merged.get(key) is not None:
                merged[key] = int(merged[key])
        for key in float_keys:
            if merged.get(key) is not None:
                merged[key] = float(merged[key])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value for {key}: {exc}") from None
    if merged.get("bias") is not None:
        merged["bias"] = bool(merged["bias"])

    if "out" not in merged or not merged["out"]:
        raise ConfigError("an output directory is required (--out or config key 'out')")
    try:
        return RunConfig(subcommand=sub, **merged)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def _validate(config: RunConfig) -> None:
    if config.threads < 1:
        raise ConfigError(f"threads must be at least 1, got {config.threads}")
    if config.seed < 0:
        raise ConfigError(f"seed must be non-negative, got {config.seed}")
    try:
        get_family(config.family)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    sub = config.subcommand

    if sub in ("fit", "path", "bootstrap"):
        if (config.scenario is None) == (config.data is None):
            raise ConfigError("give exactly one data source: --scenario or --data")
        if config.scenario is not None:
            if config.scenario not in PRESETS:
                raise ConfigError(
                    f"unknown scenario {config.scenario!r}; valid presets: {', '.join(PRESETS)}"
                )
            if config.n is None or config.p is None:
                raise ConfigError("a generated dataset needs --n and --p")
            if config.rep < 0:
                raise ConfigError("rep must be non-negative")
        else:
            if not config.response:
                raise ConfigError("a data file needs --response")
            if not config.penalized:
                raise ConfigError("a data file needs at least one penalized column")
    if sub in ("fit", "bootstrap"):
        if config.method == "oracle" and config.scenario is None:
            raise ConfigError("the oracle method needs a generated scenario with known truth")
        if config.lam is not None and config.lam <= 0:
            raise ConfigError("lam must be positive")
        if config.xi <= 0:
            raise ConfigError("xi must be positive")
    if sub == "fit" and config.bootstrap < 0:
        raise ConfigError("bootstrap count must be non-negative")
    if sub == "bootstrap" and config.resamples < 2:
        raise ConfigError("bootstrap needs at least 2 resamples")
    if sub == "path":
        if not config.xi_grid:
            raise ConfigError("xi_grid must not be empty")
        if any(x <= 0 for x in config.xi_grid):
            raise ConfigError("xi_grid entries must be positive")
    if sub == "simulate":
        if config.scenario is None:
            raise ConfigError(f"simulate needs --scenario; valid presets: {', '.join(PRESETS)} or custom")
        if config.scenario != "custom" and config.scenario not in PRESETS:
            raise ConfigError(
                f"unknown scenario {config.scenario!r}; valid presets: "
                f"{', '.join(PRESETS)} or custom"
            )
        if config.scenario == "custom" and (config.beta0 is None or config.psi_names is None):
            raise ConfigError("a custom scenario needs beta0, alpha0 and psi_names")
        if config.n is None or config.p is None:
            raise ConfigError("simulate needs --n and --p")
        if config.replications < 1:
            raise ConfigError("replications must be positive")
        if not config.methods:
            raise ConfigError("methods must not be empty")
        for m in config.methods:
            if m not in METHOD_NAMES:
                raise ConfigError(f"unknown method {m!r}; expected one of {', '.join(METHOD_NAMES)}")
    if sub == "screen":
        if not config.genotype or not config.pheno or not config.response:
            raise ConfigError("screen needs --genotype, --pheno and --response")
        if not 0.0 <= config.maf_threshold <= 0.5:
            raise ConfigError("maf threshold must lie in [0, 0.5]")
        if not 0.0 < config.p_threshold <= 1.0:
            raise ConfigError("p threshold must lie in (0, 1]")


_MANIFEST_SKIP = ("out", "threads")


def _jsonable(value):
    if dataclasses.is_dataclass(value) and not isinstance(value, type):
        return {k: _jsonable(v) for k, v in dataclasses.asdict(value).items()}
    if isinstance(value, (tuple, list)):
        return [_jsonable(v) for v in value]
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    return value


def _manifest_config(config: RunConfig) -> dict:
    keys = [k for k in _ALLOWED_KEYS[config.subcommand] if k not in _MANIFEST_SKIP]
    out = {"subcommand": config.subcommand}
    for key in sorted(keys):
        out[key] = _jsonable(getattr(config, key))
    return out


def _manifest_hash(cfg: dict) -> str:
    canon = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()[:12]


def _cell(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (float, np.floating)):
        return "%.17g" % value
    return str(value)


def _write_table(path: str, sha: str, names, rows) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(f"# barsieve {__version__} manifest={sha}\n")
        fh.write("\t".join(names) + "\n")
        for row in rows:
            fh.write("\t".join(_cell(v) for v in row) + "\n")


def _write_manifest(outdir: str, cfg: dict, sha: str, diagnostics: dict) -> None:
    doc = {
        "tool": "barsieve",
        "version": __version__,
        "manifest": sha,
        "config": cfg,
        "diagnostics": _jsonable(diagnostics),
    }
    with open(os.path.join(outdir, "manifest.json"), "w", newline="\n") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _human(value: float) -> str:
    return "%.4g" % value


@dataclass
class ResolvedData:
    """A ready-to-fit dataset with its basis specs and column names."""

    dataset: Dataset
    specs: tuple[BasisSpec, ...]
    x_names: tuple[str, ...]
    w_names: tuple[str, ...]
    z_names: tuple[str, ...]
    beta0: np.ndarray | None = None


def _expand_wildcards(requested, available, claimed, role: str) -> tuple[str, ...]:
    """Resolve a role's column list; trailing-* entries match by prefix."""
    out: list[str] = []
    for name in requested:
        if name.endswith("*"):
            prefix = name[:-1]
            hits = [c for c in available if c.startswith(prefix) and c not in claimed and c not in out]
            if not hits:
                raise ConfigError(f"{role} pattern {name!r} matches no unclaimed column")
            out.extend(hits)
        else:
            if name not in available:
                raise ConfigError(f"{role} column {name!r} not found in the data file")
            if name in claimed or name in out:
                raise ConfigError(f"column {name!r} is claimed by two roles")
            out.append(name)
    return tuple(out)


def _dataset_from_table(config: RunConfig, table: Table) -> ResolvedData:
    available = table.names
    if config.response not in available:
        raise ConfigError(f"response column {config.response!r} not found in the data file")
    claimed = {config.response}
    x_names = _expand_wildcards(config.penalized, available, claimed, "penalized")
    claimed.update(x_names)
    w_names = _expand_wildcards(config.linear, available, claimed, "linear")
    claimed.update(w_names)
    if any(c.name.endswith("*") for c in config.continuous):
        raise ConfigError("continuous entries must be explicit column names, not patterns")
    z_entries = {c.name: c for c in config.continuous}
    if len(z_entries) != len(config.continuous):
        raise ConfigError("duplicate continuous column name")
    z_names = _expand_wildcards(tuple(z_entries), available, claimed, "continuous")

    col = {name: i for i, name in enumerate(available)}
    values = table.values
    for name in (config.response, *x_names, *w_names, *z_names):
        if not np.all(np.isfinite(values[:, col[name]])):
            raise ConfigError(
                f"column {name!r} has missing entries; screen or impute before fitting"
            )
    y = values[:, col[config.response]]
    x = values[:, [col[c] for c in x_names]] if x_names else np.empty((table.n, 0))
    w = values[:, [col[c] for c in w_names]] if w_names else np.empty((table.n, 0))
    z = values[:, [col[c] for c in z_names]] if z_names else np.empty((table.n, 0))
    specs = []
    for name in z_names:
        entry = z_entries[name]
        zc = values[:, col[name]]
        lower = entry.lower if entry.lower is not None else float(zc.min())
        upper = entry.upper if entry.upper is not None else float(zc.max())
        specs.append(BasisSpec(entry.degree or config.degree, lower, upper))
    try:
        dataset = Dataset(y=y, x=x, w=w, z=z, x_names=x_names, w_names=w_names, z_names=z_names)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return ResolvedData(dataset, tuple(specs), x_names, w_names, z_names)


def _scenario_config(config: RunConfig, replications: int) -> ScenarioConfig:
    try:
        if config.scenario == "custom":
            return ScenarioConfig(
                name="custom", family=config.family, n=config.n, p=config.p,
                beta0=np.asarray(config.beta0, dtype=np.float64),
                alpha0=np.asarray(config.alpha0 or (), dtype=np.float64),
                psi_names=config.psi_names, rho=config.rho,
                replications=replications, seed=config.seed, degree=config.degree,
            )
        return scenario_preset(
            config.scenario, config.n, config.p,
            replications=replications, seed=config.seed,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _resolve_data(config: RunConfig) -> ResolvedData:
    if config.data is not None:
        try:
            table = load_table(config.data)
        except OSError as exc:
            raise ConfigError(f"cannot read data file: {exc}") from None
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        return _dataset_from_table(config, table)
    scen = _scenario_config(config, replications=config.rep + 1)
    data = generate_scenario(scen, config.rep)
    q_z = len(scen.psi_names)
    return ResolvedData(
        dataset=data,
        specs=scen.basis_specs(),
        x_names=tuple(f"x{j + 1}" for j in range(scen.p)),
        w_names=tuple(f"w{j + 1}" for j in range(scen.alpha0.size)),
        z_names=tuple(f"z{j + 1}" for j in range(q_z)),
        beta0=scen.beta0,
    )


@dataclass
class SingleFit:
    """One full-data fit in flat-vector form plus diagnostics."""

    vector: np.ndarray
    converged: bool
    diagnostics: dict = field(default_factory=dict)


def _fit_single(
    config: RunConfig,
    design: SieveDesign,
    y: np.ndarray,
    family: Family,
    beta0: np.ndarray | None,
) -> SingleFit:
    method = config.method
    if method in ("bar-aic", "bar-bic"):
        controls = BarControls(xi=config.xi, lam=config.lam, criterion=method.split("-")[1])
        fit = bar_fit_design(design, y, family, controls)
        return SingleFit(
            vector=fit.coeffs.to_vector(design.block),
            converged=fit.converged,
            diagnostics={
                "method": method, "lambda": fit.lam, "xi": fit.xi,
                "outer_iterations": fit.outer_iterations,
                "support_size": int(fit.support.size),
            },
        )
    if method in ("lasso", "alasso"):
        if config.lam is not None:
            if method == "alasso":
                pilot = ridge_pilot(design, y, family, xi=config.xi)
                res = adaptive_lasso_fit(design, family, config.lam, pilot, y=y)
            else:
                res = lasso_fit(design, family, config.lam, y=y)
            conv = res.converged
            lam = config.lam
        else:
            res, cv = cv_fit(
                design, family, method=method, y=y,
                grid_length=config.grid_length, grid_ratio=config.grid_ratio,
                folds=config.cv_folds, fold_seed=config.seed,
            )
            conv = res.converged and cv.converged
            lam = cv.best_lambda
        support = int(np.count_nonzero(res.coeffs.beta))
        return SingleFit(
            vector=res.vector,
            converged=conv,
            diagnostics={
                "method": method, "lambda": lam,
                "passes": res.passes, "support_size": support,
            },
        )
    if method == "oracle":
        pen = PenaltyMap.frozen_beta(design.block, beta0 == 0.0)
        res = ccd_fit(design, y, family, pen)
        return SingleFit(
            vector=res.vector,
            converged=res.converged,
            diagnostics={
                "method": method, "lambda": None, "passes": res.passes,
                "support_size": int(np.count_nonzero(res.coeffs.beta)),
            },
        )
    raise ConfigError(f"unknown method {method!r}")


def _coefficient_rows(vector, block, resolved: ResolvedData, se=None, freq=None):
    """Long-format coefficient rows: block label, index, name, estimate."""
    labels: list[tuple[str, int, str]] = [("intercept", 1, "intercept")]
    labels += [("beta", j + 1, resolved.x_names[j]) for j in range(block.p)]
    labels += [("alpha", j + 1, resolved.w_names[j]) for j in range(block.q_w)]
    for j, size in enumerate(block.gamma_sizes):
        labels += [("gamma", k + 1, f"{resolved.z_names[j]}:b{k + 1}") for k in range(size)]
    rows = []
    for i, (label, idx, name) in enumerate(labels):
        row = [label, idx, name, float(vector[i])]
        if se is not None:
            row.append(float(se[i]))
        if freq is not None:
            row.append(float(freq[i]))
        rows.append(row)
    return rows


def _bootstrap_run(config: RunConfig, resolved: ResolvedData, family: Family, b: int):
    specs = resolved.specs
    beta0 = resolved.beta0

    def recipe(ds: Dataset) -> np.ndarray:
        design = build_design(ds, specs=specs)
        return _fit_single(config, design, ds.y, family, beta0).vector

    return bootstrap_se(
        resolved.dataset, recipe, b,
        seed=config.seed, stratify=config.stratify, workers=config.threads,
    )


def cmd_fit(config: RunConfig) -> int:
    family = get_family(config.family)
    resolved = _resolve_data(config)
    design = build_design(resolved.dataset, specs=resolved.specs)
    cfg = _manifest_config(config)
    sha = _manifest_hash(cfg)

    fit = _fit_single(config, design, resolved.dataset.y, family, resolved.beta0)
    boot = None
    if config.subcommand == "bootstrap" or config.bootstrap > 0:
        b = config.resamples if config.subcommand == "bootstrap" else config.bootstrap
        boot = _bootstrap_run(config, resolved, family, b)

    os.makedirs(config.out, exist_ok=True)
    block = design.block
    se = boot.se if boot is not None else None
    freq = boot.selection_freq if boot is not None else None
    coef_names = ["block", "index", "name", "estimate"]
    if boot is not None:
        coef_names += ["se", "selection_freq"]
    table_name = "bootstrap.tsv" if config.subcommand == "bootstrap" else "coefficients.tsv"
    _write_table(
        os.path.join(config.out, table_name), sha, coef_names,
        _coefficient_rows(fit.vector, block, resolved, se, freq),
    )

    beta = fit.vector[block.beta]
    support = np.flatnonzero(beta)
    _write_table(
        os.path.join(config.out, "support.tsv"), sha,
        ["index", "name", "estimate"],
        [[j + 1, resolved.x_names[j], float(beta[j])] for j in support],
    )
    for j, spec in enumerate(resolved.specs):
        grid = np.linspace(spec.lower, spec.upper, 200)
        local = block.gamma_local(j)
        curve = evaluate_psi(fit.vector[block.gamma][local], spec, grid)
        _write_table(
            os.path.join(config.out, f"curve_{resolved.z_names[j]}.tsv"), sha,
            ["z", "psi"], list(zip(grid, curve)),
        )

    diagnostics = dict(fit.diagnostics)
    diagnostics["converged"] = fit.converged
    diagnostics["n"] = resolved.dataset.n
    diagnostics["columns"] = block.total
    if boot is not None:
        diagnostics["bootstrap"] = {
            "requested": boot.requested,
            "effective": boot.effective,
            "failures": boot.failures,
        }
    _write_manifest(config.out, cfg, sha, diagnostics)

    lam = fit.diagnostics.get("lambda")
    print(
        f"{config.subcommand}: method={config.method} converged={fit.converged} "
        f"support={diagnostics['support_size']}"
        + (f" lambda={_human(lam)}" if lam is not None else "")
    )
    print(f"wrote {config.out}")
    return 0 if fit.converged else 1


def cmd_simulate(config: RunConfig) -> int:
    scen = _scenario_config(config, replications=config.replications)
    cfg = _manifest_config(config)
    sha = _manifest_hash(cfg)

    study = run_replications(
        scen,
        methods=config.methods,
        workers=config.threads,
        cv_folds=config.cv_folds,
        cv_grid_length=config.grid_length,
        cv_grid_ratio=config.grid_ratio,
        keep_fits=True,
        include_oracle=False,
    )

    os.makedirs(config.out, exist_ok=True)
    summary_names = [
        "method", "replications", "mmse", "mmse_sd",
        "tp", "fp", "ms", "mc", "tm", "failures", "nonconverged",
    ]
    rows = []
    for m in study.methods:
        s = study.metrics[m]
        rows.append([
            m, s.r_effective, s.mmse, s.mmse_sd,
            s.tp, s.fp, s.ms, s.mc, s.tm,
            study.failures[m], study.nonconverged[m],
        ])
    _write_table(os.path.join(config.out, "summary.tsv"), sha, summary_names, rows)

    truth = true_curves(scen, grid_size=200)
    per_method = {
        m: average_curves([f.gamma for f in study.fits[m]], scen.basis_specs(), grid_size=200)
        if study.fits[m] else None
        for m in study.methods
    }
    for j in range(len(scen.psi_names)):
        grid, true_vals = truth[j]
        names = ["z", "true"] + [m for m in study.methods]
        cols = [grid, true_vals]
        for m in study.methods:
            curves = per_method[m]
            cols.append(curves[j][1] if curves is not None else np.full(grid.size, np.nan))
        _write_table(
            os.path.join(config.out, f"curve_z{j + 1}.tsv"), sha, names,
            list(zip(*cols)),
        )

    if config.bias:
        bias_rows = []
        for m in study.methods:
            s = study.metrics[m]
            for k, pos in enumerate(s.bias_positions):
                bias_rows.append([
                    m, "beta", int(pos) + 1, scen.beta0[pos],
                    s.bias_mean[k], s.bias_sd[k],
                ])
            for k in range(scen.alpha0.size):
                bias_rows.append([
                    m, "alpha", k + 1, scen.alpha0[k],
                    s.alpha_bias_mean[k], s.alpha_bias_sd[k],
                ])
        _write_table(
            os.path.join(config.out, "bias.tsv"), sha,
            ["method", "block", "index", "true", "bias_mean", "bias_sd"],
            bias_rows,
        )

    diagnostics = {
        "replications": scen.replications,
        "failures": study.failures,
        "nonconverged": study.nonconverged,
        "metrics": {
            m: {
                "mmse": study.metrics[m].mmse, "tp": study.metrics[m].tp,
                "fp": study.metrics[m].fp, "tm": study.metrics[m].tm,
            }
            for m in study.methods
        },
    }
    _write_manifest(config.out, cfg, sha, diagnostics)

    print("method      tp      fp      ms      mc      tm     mmse")
    for m in study.methods:
        s = study.metrics[m]
        print(
            f"{m:<9}"
            + "".join(f"{_human(v):>8}" for v in (s.tp, s.fp, s.ms, s.mc, s.tm, s.mmse))
        )
    print(f"wrote {config.out}")
    clean = all(study.failures[m] == 0 and study.nonconverged[m] == 0 for m in study.methods)
    return 0 if clean else 1


def cmd_path(config: RunConfig) -> int:
    family = get_family(config.family)
    resolved = _resolve_data(config)
    design = build_design(resolved.dataset, specs=resolved.specs)
    cfg = _manifest_config(config)
    sha = _manifest_hash(cfg)

    points = bar_path(
        design, resolved.dataset.y, family,
        xi_grid=config.xi_grid, criteria=("aic", "bic"),
    )
    failures = [p for p in points if p.fit is None]
    if failures:
        first = failures[0]
        print(f"error: path point xi={first.xi} {first.criterion} failed: {first.error}", file=sys.stderr)

    os.makedirs(config.out, exist_ok=True)
    rows = []
    converged = True
    for point in points:
        if point.fit is None:
            converged = False
            continue
        converged = converged and point.fit.converged
        beta = point.fit.coeffs.beta
        for j in range(design.block.p):
            rows.append([
                point.criterion, point.xi, point.fit.lam,
                j + 1, resolved.x_names[j], float(beta[j]),
            ])
    _write_table(
        os.path.join(config.out, "path.tsv"), sha,
        ["criterion", "xi", "lambda", "index", "name", "coefficient"],
        rows,
    )
    supports = {
        crit: [
            tuple(np.flatnonzero(p.fit.coeffs.beta)) for p in points
            if p.criterion == crit and p.fit is not None
        ]
        for crit in ("aic", "bic")
    }
    diagnostics = {
        "grid": list(config.xi_grid),
        "support_stable": {
            crit: bool(sups) and len(set(sups)) == 1 for crit, sups in supports.items()
        },
        "failed_points": len(failures),
    }
    _write_manifest(config.out, cfg, sha, diagnostics)
    for crit in ("aic", "bic"):
        stable = diagnostics["support_stable"][crit]
        print(f"path {crit}: {len(supports[crit])} fits, support {'stable' if stable else 'varies'}")
    print(f"wrote {config.out}")
    return 0 if converged and not failures else 1


def cmd_screen(config: RunConfig) -> int:
    family = get_family(config.family)
    try:
        geno = load_table(config.genotype)
        pheno = load_table(config.pheno)
    except OSError as exc:
        raise ConfigError(f"cannot read input: {exc}") from None
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if config.response not in pheno.names:
        raise ConfigError(f"response column {config.response!r} not found in {config.pheno}")
    try:
        merged = merge_tables(geno, pheno)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    m = len(geno.names)
    pheno_vals = merged.values[:, m:]
    y = pheno_vals[:, pheno.names.index(config.response)]
    if not np.all(np.isfinite(y)):
        raise ConfigError(f"response column {config.response!r} has missing entries")

    cfg = _manifest_config(config)
    sha = _manifest_hash(cfg)

    try:
        maf_keep, maf_rep = maf_filter(geno.values, config.maf_threshold)
        imputed, imputed_counts = impute_missing(geno.values[:, maf_keep])
        local_keep, screen_rep = univariate_screen(
            imputed, y, family, config.p_threshold,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    final = maf_keep[local_keep]

    os.makedirs(config.out, exist_ok=True)
    local = {int(c): i for i, c in enumerate(maf_keep)}
    final_set = set(final.tolist())
    rows = []
    for j, name in enumerate(geno.names):
        i = local.get(j)
        passed_maf = i is not None
        rows.append([
            name,
            maf_rep.maf[j], int(maf_rep.missing[j]), passed_maf,
            screen_rep.coef[i] if passed_maf else float("nan"),
            screen_rep.se[i] if passed_maf else float("nan"),
            screen_rep.p_value[i] if passed_maf else float("nan"),
            bool(screen_rep.separated[i]) if passed_maf else False,
            bool(screen_rep.constant[i]) if passed_maf else False,
            j in final_set,
        ])
    _write_table(
        os.path.join(config.out, "screen.tsv"), sha,
        ["name", "maf", "missing", "kept_maf", "coef", "se", "p_value",
         "separated", "constant", "kept"],
        rows,
    )

    kept_names = [geno.names[j] for j in final]
    kept_local = [local[int(j)] for j in final]
    out_names = ["id", *pheno.names, *kept_names]
    out_rows = []
    for r in range(merged.n):
        row = [merged.ids[r]]
        row.extend(float(v) for v in pheno_vals[r])
        row.extend(float(imputed[r, i]) for i in kept_local)
        out_rows.append(row)
    _write_table(os.path.join(config.out, "filtered.tsv"), sha, out_names, out_rows)

    diagnostics = {
        "columns": m,
        "all_missing": int(maf_rep.all_missing.size),
        "kept_maf": int(maf_keep.size),
        "kept": int(final.size),
        "separated": int(screen_rep.separated.sum()),
        "constant": int(screen_rep.constant.sum()),
        "imputed_cells": int(imputed_counts.sum()),
    }
    _write_manifest(config.out, cfg, sha, diagnostics)
    print(
        f"screen: {m} columns, {maf_keep.size} past MAF {_human(config.maf_threshold)}, "
        f"{final.size} past p {_human(config.p_threshold)}"
    )
    print(f"wrote {config.out}")
    return 0


COMMANDS = {
    "fit": cmd_fit,
    "simulate": cmd_simulate,
    "path": cmd_path,
    "screen": cmd_screen,
    "bootstrap": cmd_fit,
}


def main(argv=None) -> int:
    try:
        args = _parse_args(argv)
        config = _merge_config(args)
        _validate(config)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        return COMMANDS[config.subcommand](config)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 runtime failure, outputs may be partial
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
