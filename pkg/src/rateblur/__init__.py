"""Evaluation metrics as random variables under rating uncertainty.

Observed ratings are noisy draws from per-(user, item) Gaussian laws, so
any metric computed from them (RMSE, MAE, sRMSE, ...) is itself a random
variable. This package samples those metric distributions reproducibly,
quantifies when one system's advantage over another is real (error
probabilities, density overlap), propagates parameter uncertainty
through confidence-interval edge scenarios, and answers how large a
published score gap must be before it survives the blur.
"""

from .analytic import (
    AnalyticRmseModel,
    DivergenceReport,
    analytic_vs_mc_check,
    derive_analytic_model,
    ks_statistic,
)
from .dataio import (
    DEFAULT_PROFILE,
    CalibrationProfile,
    ParameterEstimate,
    RatingScale,
    RatingTensor,
    ValidationReport,
    estimate_ks_power,
    estimate_parameters,
    load_tensor,
    save_tensor,
    synthesize_tensor,
    validate_tensor,
)
from .engine import (
    BLOCK_SIZE,
    DEFAULT_BINS,
    DEFAULT_TRIALS,
    ComparisonResult,
    EmpiricalDensity,
    MetricKind,
    MetricSample,
    PredictorSet,
    RatingDistributionSet,
    check_alignment,
    compare_predictors,
    density_intersection,
    density_pair,
    error_probability,
    estimate_density,
    exceedance_probability,
    overlap_area,
    sample_metric,
)
from .errors import (
    DataFormatError,
    DegenerateDistributionError,
    IndexMismatchError,
    NumericalError,
    RateblurError,
)
from .noisysim import (
    AdaptiveNoiseResult,
    LeaderboardCell,
    NoiseSpec,
    ThresholdReport,
    adaptive_noise_for_metric_gap,
    distort,
    noise_threshold_curve,
    offset_resolution_curves,
    optimal_recommender,
    rating_set_from_tensor,
    resolve_leaderboard,
)
from .significance import (
    SignificanceInterval,
    critical_interval,
    rejection_mass,
    sample_conditional,
    sample_srmse,
)
from .statmath import (
    GaussianParams,
    NakagamiParams,
    RandomSeed,
    nakagami_mean_var,
    stream_generator,
)
from .uncertainty import (
    BorderlineScenario,
    BorderlineStudy,
    ConfidenceIntervalPair,
    build_borderline,
    ci_width_exponents,
    confidence_intervals,
    convergence_error_probability,
    convergence_intersection,
    convergence_to_stationary,
    simulate_borderline_rmse,
    tensor_recommenders,
)

__version__ = "0.1.0"

__all__ = [
    "AdaptiveNoiseResult",
    "AnalyticRmseModel",
    "BLOCK_SIZE",
    "BorderlineScenario",
    "BorderlineStudy",
    "CalibrationProfile",
    "ComparisonResult",
    "ConfidenceIntervalPair",
    "DEFAULT_BINS",
    "DEFAULT_PROFILE",
    "DEFAULT_TRIALS",
    "DataFormatError",
    "DegenerateDistributionError",
    "DivergenceReport",
    "EmpiricalDensity",
    "GaussianParams",
    "IndexMismatchError",
    "LeaderboardCell",
    "MetricKind",
    "MetricSample",
    "NakagamiParams",
    "NoiseSpec",
    "NumericalError",
    "ParameterEstimate",
    "PredictorSet",
    "RandomSeed",
    "RateblurError",
    "RatingDistributionSet",
    "RatingScale",
    "RatingTensor",
    "SignificanceInterval",
    "ThresholdReport",
    "ValidationReport",
    "adaptive_noise_for_metric_gap",
    "analytic_vs_mc_check",
    "build_borderline",
    "check_alignment",
    "ci_width_exponents",
    "compare_predictors",
    "confidence_intervals",
    "convergence_error_probability",
    "convergence_intersection",
    "convergence_to_stationary",
    "critical_interval",
    "density_intersection",
    "density_pair",
    "derive_analytic_model",
    "distort",
    "error_probability",
    "estimate_density",
    "estimate_ks_power",
    "estimate_parameters",
    "exceedance_probability",
    "ks_statistic",
    "load_tensor",
    "nakagami_mean_var",
    "noise_threshold_curve",
    "offset_resolution_curves",
    "optimal_recommender",
    "overlap_area",
    "rating_set_from_tensor",
    "rejection_mass",
    "resolve_leaderboard",
    "sample_conditional",
    "sample_metric",
    "sample_srmse",
    "save_tensor",
    "simulate_borderline_rmse",
    "stream_generator",
    "synthesize_tensor",
    "tensor_recommenders",
    "validate_tensor",
]
