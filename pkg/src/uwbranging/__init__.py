"""TOA ranging from UWB channel soundings.

Processing chain: frequency sweeps (or time-domain impulse responses) are
converted into thresholded power delay profiles, eight channel propagation
parameters are extracted per sounding, and a fitted statistical model turns
arrivals into calibrated range estimates: a bias correction when the link is
unobstructed, a quadratic error correction over the maximum excess delay when
it is wall-blocked, and a soft two-component Gaussian-mixture likelihood over
distance when the obstruction state is uncertain (the common case, decided
from the rise time).  A parametric synthetic tunnel-channel generator closes
the loop for verification.
"""

from .diagnostics import FeatureDiagnostics, build_diagnostics, correlation, overlap_metric
from .features import (
    FEATURE_COLUMNS,
    ChannelFeatureExtractor,
    ChannelFeatures,
    FeatureTable,
    extract_feature_table,
    extract_features,
)
from .pipeline import RunConfig, RunResult, run_pipeline
from .processing import (
    DEFAULT_THRESHOLD_DBM,
    SPEED_OF_LIGHT_M_PER_NS,
    SPEED_OF_LIGHT_M_PER_S,
    FrequencyResponse,
    ImpulseResponse,
    PowerDelayProfile,
    SweepConfig,
    SweepRecord,
    compute_pdp,
    hann_window,
    impulse_to_frequency_response,
    ingest_frequency_response,
)
from .ranging import (
    LOS,
    NLOS,
    RangeLikelihood,
    RangingEstimator,
    RangingModel,
    fit_ranging_model,
)
from .synth import (
    ProfileReport,
    SynthProfile,
    generate_campaign,
    mine_tunnel_profile,
    default_tunnel_profile,
    verify_profile,
)
from .threshold import NoiseStats, ThresholdCurve, estimate_noise_stats, sweep_thresholds

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_THRESHOLD_DBM",
    "FEATURE_COLUMNS",
    "LOS",
    "NLOS",
    "SPEED_OF_LIGHT_M_PER_NS",
    "SPEED_OF_LIGHT_M_PER_S",
    "ChannelFeatureExtractor",
    "ChannelFeatures",
    "FeatureDiagnostics",
    "FeatureTable",
    "FrequencyResponse",
    "ImpulseResponse",
    "NoiseStats",
    "PowerDelayProfile",
    "ProfileReport",
    "RangeLikelihood",
    "RangingEstimator",
    "RangingModel",
    "RunConfig",
    "RunResult",
    "SweepConfig",
    "SweepRecord",
    "SynthProfile",
    "ThresholdCurve",
    "build_diagnostics",
    "compute_pdp",
    "correlation",
    "estimate_noise_stats",
    "extract_feature_table",
    "extract_features",
    "fit_ranging_model",
    "generate_campaign",
    "hann_window",
    "impulse_to_frequency_response",
    "ingest_frequency_response",
    "mine_tunnel_profile",
    "default_tunnel_profile",
    "overlap_metric",
    "run_pipeline",
    "sweep_thresholds",
    "verify_profile",
]
