"""Sparse Gaussian DAG estimation by l0-penalized maximum likelihood.

Structure search over orderings with per-node penalized local scores,
triangular (Gram-Schmidt) representations of covariance matrices,
identifiability condition checks, closed-form tuning constants, and a
reproducible simulation harness.
"""

from ._backend import active_backend, use_backend
from ._version import __version__
from .conditions import (
    ConditionCheck,
    ConditionReport,
    TheoremConstants,
    check_basic,
    check_beta_min,
    check_degree,
    check_omega_min,
    cond_edges_alpha,
    connected_components,
    theorem_constants,
)
from .cpdag import cpdag, cpdag_shd, shd
from .errors import CycleError, NotPositiveDefiniteError, NumericalError
from .experiments import (
    ExperimentConfig,
    ExperimentReport,
    Record,
    aggregate,
    frobenius_error,
    run_equal_variance_experiment,
    run_rate_experiment,
    run_experiment,
)
from .model import (
    CovarianceMatrix,
    DagModel,
    Dataset,
    Ordering,
    PrecisionMatrix,
    compatible_order,
    covariance_of,
    neg_log_likelihood,
    penalized_score,
    precision_of,
    topological_order,
)
from .representation import (
    EdgeProfile,
    edge_profile,
    equivalent,
    gram_schmidt_representation,
    minimal_edge_imap,
)
from .scoring import (
    LocalScoreTable,
    bic_lambda2,
    build_score_table,
    default_max_parents,
    local_score_equal_variance,
    local_score_profile,
    residual_variance,
)
from .search import FitResult, fit_exact, fit_greedy, refit_parameters
from .simulate import (
    GAUSSIAN_ID,
    SimConfig,
    ar1_model,
    random_sparse_dag,
    sample_covariance,
    sample_sem,
)

__all__ = [
    "__version__",
    "active_backend",
    "use_backend",
    "ConditionCheck",
    "ConditionReport",
    "TheoremConstants",
    "check_basic",
    "check_beta_min",
    "check_degree",
    "check_omega_min",
    "cond_edges_alpha",
    "connected_components",
    "theorem_constants",
    "cpdag",
    "cpdag_shd",
    "shd",
    "CycleError",
    "NotPositiveDefiniteError",
    "NumericalError",
    "ExperimentConfig",
    "ExperimentReport",
    "Record",
    "aggregate",
    "frobenius_error",
    "run_equal_variance_experiment",
    "run_rate_experiment",
    "run_experiment",
    "CovarianceMatrix",
    "DagModel",
    "Dataset",
    "Ordering",
    "PrecisionMatrix",
    "compatible_order",
    "covariance_of",
    "neg_log_likelihood",
    "penalized_score",
    "precision_of",
    "topological_order",
    "EdgeProfile",
    "edge_profile",
    "equivalent",
    "gram_schmidt_representation",
    "minimal_edge_imap",
    "LocalScoreTable",
    "bic_lambda2",
    "build_score_table",
    "default_max_parents",
    "local_score_equal_variance",
    "local_score_profile",
    "residual_variance",
    "FitResult",
    "fit_exact",
    "fit_greedy",
    "refit_parameters",
    "GAUSSIAN_ID",
    "SimConfig",
    "ar1_model",
    "random_sparse_dag",
    "sample_covariance",
    "sample_sem",
]
