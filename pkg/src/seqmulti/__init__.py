"""Sequential multiple testing across K independent data streams."""

from .bounds import (
    Bounded,
    ErrorSpec,
    Exact,
    KlSummary,
    conservative_threshold_gap,
    conservative_thresholds_gi,
    ess_lower_bound,
    first_order_ess,
    fwe_bound_gap,
    fwe_bounds_gi,
    gamma,
    phi,
)
from .config import ExperimentConfig, load_config
from .importance import (
    DEFENSIVE_WEIGHT,
    Proposal,
    build_proposal,
    is_estimate_fwe,
    likelihood_ratio_at_stop,
)
from .llr import LlrState, pairwise_llr
from .models import Bernoulli, GaussianMeanShift, GenericIncrement, Panel, signal_set
from .montecarlo import (
    CalibrationResult,
    ThresholdCalibrator,
    calibrate,
    estimate_ess,
    max_fwe_over_class,
    mc_estimate_fwe,
)
from .procedures import (
    GapIntersectionRule,
    GapRule,
    IncompleteRule,
    IntersectionRule,
    TrialOutcome,
    run_procedure,
)
from .rng import KeyedRng
from .simulation import Estimate, simulate

__version__ = "0.1.0"

__all__ = [
    "DEFENSIVE_WEIGHT",
    "Bernoulli",
    "Bounded",
    "CalibrationResult",
    "ErrorSpec",
    "Estimate",
    "Exact",
    "ExperimentConfig",
    "GapIntersectionRule",
    "GapRule",
    "GaussianMeanShift",
    "GenericIncrement",
    "IncompleteRule",
    "IntersectionRule",
    "KeyedRng",
    "KlSummary",
    "LlrState",
    "Panel",
    "Proposal",
    "ThresholdCalibrator",
    "TrialOutcome",
    "build_proposal",
    "calibrate",
    "conservative_threshold_gap",
    "conservative_thresholds_gi",
    "ess_lower_bound",
    "estimate_ess",
    "first_order_ess",
    "fwe_bound_gap",
    "fwe_bounds_gi",
    "gamma",
    "is_estimate_fwe",
    "likelihood_ratio_at_stop",
    "load_config",
    "max_fwe_over_class",
    "mc_estimate_fwe",
    "pairwise_llr",
    "phi",
    "run_procedure",
    "signal_set",
    "simulate",
]
