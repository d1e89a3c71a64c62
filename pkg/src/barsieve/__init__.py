"""Sparse generalized partly linear models.

Linear covariates enter a logistic or Poisson model through a
high-dimensional coefficient block selected by broken adaptive ridge
(iteratively reweighted ridge that approximates an L0 penalty), while
continuous covariates enter through unpenalized Bernstein polynomial
sieve expansions. LASSO and adaptive LASSO baselines, simulation
benchmarks, and a genotype screening pipeline share the same
coordinate descent engine.
"""

__version__ = "0.1.0"

from .bernstein import BasisSpec, SieveBlock, bernstein_basis, build_sieve_block, evaluate_psi
from .family import (
    Family,
    LOGISTIC,
    POISSON,
    WorkingState,
    coordinate_derivatives,
    get_family,
    log_likelihood,
    make_state,
    update_state,
)
from .design import BlockMap, Dataset, SieveDesign, build_design
from .ccd import (
    CcdControls,
    CcdResult,
    CoefficientBlocks,
    PenaltyMap,
    ccd_fit,
    newton_coordinate_update,
    penalized_objective,
)
from .bar import (
    BarControls,
    FitResult,
    bar_fit,
    bar_fit_design,
    bar_path,
    select_lambda_fixed,
    stationarity_check,
)
from .baselines import (
    CvResult,
    CvSpec,
    adaptive_lasso_fit,
    cross_validate,
    cv_fit,
    lambda_grid,
    lambda_max,
    lasso_fit,
    lasso_path,
    ridge_pilot,
)
from .simulate import (
    MetricsSummary,
    ScenarioConfig,
    SelectionMetrics,
    StudyResult,
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
from .pipeline import (
    BootstrapResult,
    MafReport,
    ScreenReport,
    bootstrap_se,
    impute_missing,
    load_table,
    maf_filter,
    merge_tables,
    resample_indices,
    univariate_screen,
)

__all__ = [
    "__version__",
    "BasisSpec", "SieveBlock", "bernstein_basis", "build_sieve_block", "evaluate_psi",
    "Family", "LOGISTIC", "POISSON", "WorkingState", "get_family", "make_state",
    "log_likelihood", "coordinate_derivatives", "update_state",
    "BlockMap", "Dataset", "SieveDesign", "build_design",
    "CcdControls", "CcdResult", "CoefficientBlocks", "PenaltyMap",
    "ccd_fit", "newton_coordinate_update", "penalized_objective",
    "BarControls", "FitResult", "bar_fit", "bar_fit_design", "bar_path",
    "select_lambda_fixed", "stationarity_check",
    "CvResult", "CvSpec", "adaptive_lasso_fit", "cross_validate", "cv_fit",
    "lambda_grid", "lambda_max", "lasso_fit", "lasso_path", "ridge_pilot",
    "MetricsSummary", "ScenarioConfig", "SelectionMetrics", "StudyResult",
    "average_curves", "evaluate_selection", "generate_scenario",
    "psi_domain", "psi_true", "run_replications", "scenario_preset",
    "sigma_ar", "true_curves",
    "BootstrapResult", "MafReport", "ScreenReport", "bootstrap_se",
    "impute_missing", "load_table", "maf_filter", "merge_tables",
    "resample_indices", "univariate_screen",
]
