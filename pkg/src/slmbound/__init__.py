"""Variance lower bounds for sparse linear models, with the machinery
to check them: reference estimators, a reproducible Monte Carlo engine,
and an independent finite-test-point oracle.

The model is y = H x + n with n ~ N(0, sigma^2 I) and x restricted to at
most S nonzero entries; H = I is the direct denoising special case.  The
central objects are lower bounds on the variance of any estimator whose
componentwise means are prescribed functions of x, evaluated at a chosen
parameter vector.
"""

from .bounds import (
    BoundResult,
    bound_L_K,
    bound_L_star,
    crb_lgm,
    crb_restricted,
    ssnm_s1_estimator_bound,
    ssnm_unbiased_bound,
    theorem_bound,
)
from .errors import (
    BudgetExceededError,
    ConfigError,
    GradientAccuracyWarning,
    IllConditionedGramError,
    SingularMatrixError,
    UnsupportedConfigurationError,
)
from .estimators import (
    Estimator,
    HardThreshold,
    Identity,
    LeastSquares,
    LmvuS1,
    MlSlm,
    MlSsnm,
    ht,
    lmvu_s1,
    ls_lgm,
    ml_slm,
    ml_ssnm,
)
from .linalg import projector, pseudo_inverse, spark_exceeds
from .means import (
    AffineMean,
    HTInducedMean,
    MeanFunction,
    MLInducedMean,
    QuadratureConfig,
    UnbiasedMean,
    affine,
    gradient_r,
    ht_induced,
    ht_mean,
    ml_induced,
    ml_mean,
    tilde_gamma,
    unbiased,
)
from .model import (
    IsometryData,
    LinearGaussianModel,
    SparseLinearModel,
    Support,
    embed,
    gaussian_matrix,
    isometry_data,
    kernel_lgm,
    kernel_slm,
    restrict,
    ssnm,
    submatrix,
    support_of,
    whiten,
    xi_and_j,
)
from .montecarlo import (
    EstimatorStats,
    MeanFunctionEstimate,
    SimulationSpec,
    estimate_mean_function,
    simulate,
)
from .oracle import (
    OracleDiagnostics,
    TestPointSet,
    finite_point_bound,
    grid_points,
    oracle_diagnostics,
)

__version__ = "0.1.0"

__all__ = [
    "AffineMean",
    "BoundResult",
    "BudgetExceededError",
    "ConfigError",
    "Estimator",
    "EstimatorStats",
    "GradientAccuracyWarning",
    "HTInducedMean",
    "HardThreshold",
    "Identity",
    "IllConditionedGramError",
    "IsometryData",
    "LeastSquares",
    "LinearGaussianModel",
    "LmvuS1",
    "MLInducedMean",
    "MeanFunction",
    "MeanFunctionEstimate",
    "MlSlm",
    "MlSsnm",
    "OracleDiagnostics",
    "QuadratureConfig",
    "SimulationSpec",
    "SingularMatrixError",
    "SparseLinearModel",
    "Support",
    "TestPointSet",
    "UnbiasedMean",
    "UnsupportedConfigurationError",
    "affine",
    "bound_L_K",
    "bound_L_star",
    "crb_lgm",
    "crb_restricted",
    "embed",
    "estimate_mean_function",
    "finite_point_bound",
    "gaussian_matrix",
    "gradient_r",
    "grid_points",
    "ht",
    "ht_induced",
    "ht_mean",
    "isometry_data",
    "kernel_lgm",
    "kernel_slm",
    "lmvu_s1",
    "ls_lgm",
    "ml_induced",
    "ml_mean",
    "ml_slm",
    "ml_ssnm",
    "oracle_diagnostics",
    "projector",
    "pseudo_inverse",
    "restrict",
    "simulate",
    "spark_exceeds",
    "ssnm",
    "ssnm_s1_estimator_bound",
    "ssnm_unbiased_bound",
    "submatrix",
    "support_of",
    "theorem_bound",
    "tilde_gamma",
    "unbiased",
    "whiten",
    "xi_and_j",
]
