"""Multi-resolution approximation of Gaussian processes."""
from .covariance import CovarianceModel, cov_matrix, exponential, matern15
from .errors import ConfigurationError, DomainError, FactorizationError, MRAError, OracleCapError
from .geometry import Domain, KnotStrategy, PartitionTree, build_partition, make_tree, place_knots
from .inference import FitResult, fit, loglikelihood, upward_sweep
from .metrics import ScoreReport, crps_normal, rmspe, score
from .predict import PredictiveDistribution, predict
from .prior import compute_prior, dense_mra_cov_matrix, mra_covariance

__all__ = [
    "CovarianceModel", "cov_matrix", "exponential", "matern15",
    "ConfigurationError", "DomainError", "FactorizationError", "MRAError", "OracleCapError",
    "Domain", "KnotStrategy", "PartitionTree", "build_partition", "make_tree", "place_knots",
    "FitResult", "fit", "loglikelihood", "upward_sweep",
    "ScoreReport", "crps_normal", "rmspe", "score",
    "PredictiveDistribution", "predict",
    "compute_prior", "dense_mra_cov_matrix", "mra_covariance",
]
