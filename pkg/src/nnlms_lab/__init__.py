"""Non-negative LMS adaptive filters: update rules, steady-state EMSE theory and Monte Carlo validation."""

from .errors import (
    ConfigError,
    DivergenceError,
    EnsembleFailureError,
    InvalidArgumentError,
    NNLMSLabError,
    NoConvergenceError,
    PredictedInstabilityError,
)
from .filters import Algorithm, AlgorithmKind, FilterState, predict_error, update
from .montecarlo import ComparisonReport, EnsembleResult, ExperimentConfig, compare, run_ensemble
from .signal import Ar1Process, SamplePair, SystemModel, generate_ar1, stream_samples
from .theory import (
    CorrelationModel,
    SteadyStatePrediction,
    build_correlation,
    classify_support,
    emse_bias_term,
    predict,
    predict_emse_exponential,
    predict_emse_nnlms,
    predict_emse_normalized,
    predict_emse_signsign,
    solve_constrained_wiener,
)

__version__ = "0.1.0"
