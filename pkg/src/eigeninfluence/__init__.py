"""Influence of individual observations on eigenvector subspaces of symmetric
matrix estimators, with fast leave-one-out approximations for p >> n data."""

__version__ = "0.1.0"

from .data import (
    Dataset,
    InfluenceReport,
    StandardizationRecord,
    SyntheticSpec,
    generate_gaussian,
    load_csv,
    read_report,
    standardize,
    write_csv,
    write_report,
)
from .influence import (
    ESTIMATORS,
    Contaminant,
    CorrelationModel,
    PhdModel,
    PopulationModel,
    eif,
    empirical_correlation_model,
    empirical_phd_model,
    if_correlation,
    if_covariance,
    if_phd,
    sample_mean_cov,
)
from .measures import (
    InfluenceValue,
    component_influence,
    corr_subspace_influence,
    cov_subspace_influence,
    finite_epsilon_influence,
    mahalanobis,
    phd_subspace_influence,
    subspace_influence,
    two_block_closed_form,
)
from .sample import (
    approx_influence,
    exact_loo,
    iteration_counts,
    shortcut_influence,
    spearman,
)
from .spectral import (
    EigenSystem,
    GapViolation,
    Ordering,
    SubspaceGapError,
    SubspaceSelection,
    benasseni_coefficient,
    check_separation,
    eigendecompose,
    require_separation,
    rv_gcd,
    squared_residual_identity,
    symmetrize,
    trace_product,
    validate_frame,
)

__all__ = [
    "__version__",
    # spectral
    "Ordering",
    "EigenSystem",
    "SubspaceSelection",
    "GapViolation",
    "SubspaceGapError",
    "symmetrize",
    "eigendecompose",
    "check_separation",
    "require_separation",
    "trace_product",
    "rv_gcd",
    "benasseni_coefficient",
    "squared_residual_identity",
    "validate_frame",
    # influence functions
    "ESTIMATORS",
    "Contaminant",
    "PopulationModel",
    "CorrelationModel",
    "PhdModel",
    "if_covariance",
    "if_correlation",
    "if_phd",
    "eif",
    "sample_mean_cov",
    "empirical_correlation_model",
    "empirical_phd_model",
    # measures
    "InfluenceValue",
    "subspace_influence",
    "cov_subspace_influence",
    "corr_subspace_influence",
    "phd_subspace_influence",
    "component_influence",
    "two_block_closed_form",
    "mahalanobis",
    "finite_epsilon_influence",
    # sample-level detection
    "exact_loo",
    "approx_influence",
    "shortcut_influence",
    "iteration_counts",
    "spearman",
    # data handling
    "Dataset",
    "StandardizationRecord",
    "SyntheticSpec",
    "InfluenceReport",
    "load_csv",
    "write_csv",
    "standardize",
    "generate_gaussian",
    "write_report",
    "read_report",
]
