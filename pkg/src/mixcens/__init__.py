"""Patience-time estimation from served, reported-leave and silent-leave records."""

from .distributions import DistributionSpec, exponential, weibull
from .errors import (
    EstimationError,
    InsufficientDataError,
    InvalidObservationError,
    MixcensError,
    ModelDegeneracyError,
    QuadratureError,
    WindowExceededError,
)
from .evaluation import MseSummary, mse, rate_slope, table1_harness
from .model import (
    Category,
    Dataset,
    Observation,
    ReportingPolicy,
    category_prob,
    category_probs,
    classify,
    conditional_density_r,
    constant,
    exp_decay,
    exp_rise,
    population_F_reconstruct,
    population_survival_U,
    report_integral_A,
    sub_density_h,
)
from .nonparametric import (
    KernelSpec,
    StepCurve,
    SurvivalCurve,
    a_hat_curve,
    at_risk_Y,
    counting_N,
    empirical_category_probs,
    estimate_F,
    estimation_window,
    kernel_density,
    km_waiting_survival,
    report_cdf_A_hat,
)
from .parametric import (
    FitResult,
    bootstrap_theta_ci,
    fit_parametric,
    full_loglik_gamma,
    mle_gamma,
    mle_theta_partial,
    partial_loglik_theta,
)
from .simulate import SimulationConfig, draw_latent, observe, run_replications, setting, simulate_dataset

__version__ = "0.1.0"

__all__ = [
    "a_hat_curve",
    "at_risk_Y",
    "bootstrap_theta_ci",
    "Category",
    "category_prob",
    "category_probs",
    "classify",
    "conditional_density_r",
    "constant",
    "counting_N",
    "Dataset",
    "DistributionSpec",
    "draw_latent",
    "empirical_category_probs",
    "estimate_F",
    "estimation_window",
    "EstimationError",
    "exp_decay",
    "exp_rise",
    "exponential",
    "fit_parametric",
    "FitResult",
    "full_loglik_gamma",
    "InsufficientDataError",
    "InvalidObservationError",
    "kernel_density",
    "KernelSpec",
    "km_waiting_survival",
    "MixcensError",
    "mle_gamma",
    "mle_theta_partial",
    "ModelDegeneracyError",
    "mse",
    "MseSummary",
    "Observation",
    "observe",
    "partial_loglik_theta",
    "population_F_reconstruct",
    "population_survival_U",
    "QuadratureError",
    "rate_slope",
    "report_cdf_A_hat",
    "report_integral_A",
    "ReportingPolicy",
    "run_replications",
    "setting",
    "simulate_dataset",
    "SimulationConfig",
    "StepCurve",
    "sub_density_h",
    "SurvivalCurve",
    "table1_harness",
    "weibull",
    "WindowExceededError",
]

