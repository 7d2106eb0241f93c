"""Robust sparse generalized linear models via gamma-divergence.

Fits linear, logistic, and Poisson regressions by minimizing a
density-power-weighted loss with an L1 penalty, using randomized
stochastic projected gradient descent; includes an offline weighted
coordinate-descent reference solver, consensus initialization, robust
cross-validation, simulators, and evaluation metrics.
"""

from .data import (
    CsvSchema,
    Dataset,
    MiniBatchStream,
    SimSpec,
    SimTruth,
    contaminate_poisson,
    load_csv,
    predict_poisson_counts,
    rtmspe,
    save_csv,
    simulate_linear,
    true_theta,
)
from .errors import (
    CsvParseError,
    GammaGlmError,
    InvalidScheduleError,
    InvalidTrimError,
    NumericalOverflowError,
    SeriesTruncationError,
)
from .families import (
    SIGMA2_MIN,
    Family,
    GradientBundle,
    Observation,
    Theta,
    gamma_kernel,
    gamma_kernel_batch,
    gradient,
    linear_gradient,
    logistic_gradient,
    poisson_gradient,
)
from .initialize import RansacConfig, ml_fit, ransac_init, rocv_select
from .mm import MmState, mm_coordinate_descent, mm_weights
from .objective import RiskValue, emp_risk, empirical_gamma_cross_entropy, exp_risk
from .optimizer import (
    FitReport,
    RspgConfig,
    estimate_smoothness_variance,
    minibatch_policy,
    projected_gradient_norm,
    prox_step,
    rspg_run,
    sgd_run,
    soft_threshold,
    stopping_distribution,
    two_phase_rspg_run,
)
from .pipeline import fit, fit_theta
from .poisson_series import SeriesTolerance, power_normalizer, weighted_sum

__version__ = "0.1.0"

__all__ = [
    "CsvParseError",
    "CsvSchema",
    "Dataset",
    "Family",
    "FitReport",
    "GammaGlmError",
    "GradientBundle",
    "InvalidScheduleError",
    "InvalidTrimError",
    "MiniBatchStream",
    "MmState",
    "NumericalOverflowError",
    "Observation",
    "RansacConfig",
    "RiskValue",
    "RspgConfig",
    "SIGMA2_MIN",
    "SeriesTolerance",
    "SeriesTruncationError",
    "SimSpec",
    "SimTruth",
    "Theta",
    "contaminate_poisson",
    "emp_risk",
    "empirical_gamma_cross_entropy",
    "estimate_smoothness_variance",
    "exp_risk",
    "fit",
    "fit_theta",
    "gamma_kernel",
    "gamma_kernel_batch",
    "gradient",
    "linear_gradient",
    "load_csv",
    "logistic_gradient",
    "minibatch_policy",
    "ml_fit",
    "mm_coordinate_descent",
    "mm_weights",
    "poisson_gradient",
    "power_normalizer",
    "predict_poisson_counts",
    "projected_gradient_norm",
    "prox_step",
    "ransac_init",
    "rocv_select",
    "rspg_run",
    "rtmspe",
    "save_csv",
    "sgd_run",
    "simulate_linear",
    "soft_threshold",
    "stopping_distribution",
    "true_theta",
    "two_phase_rspg_run",
    "weighted_sum",
]
