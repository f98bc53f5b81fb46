"""Adaptive rPPG heart-rate extraction from RGB traces.

Pipeline: smoothing-spline detrending of each color channel, projection of
the normalized channels onto a pulse axis, windowed FFT heart-rate
estimation, and a grid search that picks the smoothing weight and projection
axis by a spectral-quality objective, with a dual-band rule that guards
against harmonic doubling.
"""

from .detrend import (
    BaselineFit,
    NormalizedTrace,
    SplineConfig,
    fit_baseline,
    fit_smoothing_spline,
    normalize_trace,
)
from .errors import (
    AlignmentError,
    AllCandidatesFailedError,
    BaselineNonPositiveError,
    CoverageError,
    DegenerateProjectionError,
    EmptyBandError,
    EmptyInputError,
    NumericalError,
    ParseError,
    PrismError,
    SpecError,
    TooFewSamplesError,
    TooFewWindowsError,
    TooShortError,
    ValidationError,
    WindowTooSmallError,
    ZeroPowerError,
)
from .metrics import EvalReport, PerWindow, aggregate, evaluate
from .optimizer import (
    AblationMode,
    BandPair,
    DualBandResult,
    GridCell,
    OnlineEstimate,
    OnlineRefresh,
    ParamChoice,
    ParamGrid,
    dual_band_select,
    grid_search,
    pulse_for,
    run_online,
)
from .projection import (
    PulseSignal,
    green_project,
    pos_project,
    pos_project_windowed,
    prism_project,
)
from .spectral import (
    FrequencyBand,
    HrSeries,
    SpectralScore,
    estimate_hr_window,
    hr_series,
    objective,
    score_signal,
    spectral_concentration,
    temporal_variation,
)
from .synth import HrTrajectory, SynthSpec, generate
from .traces import (
    GroundTruth,
    RgbTrace,
    WindowPlan,
    gt_hr_at_midpoints,
    gt_to_hr_series,
    load_ground_truth,
    load_trace,
    plan_windows,
    save_trace,
)

__version__ = "0.1.0"

__all__ = [
    "AblationMode",
    "AlignmentError",
    "AllCandidatesFailedError",
    "BandPair",
    "BaselineFit",
    "BaselineNonPositiveError",
    "CoverageError",
    "DegenerateProjectionError",
    "DualBandResult",
    "EmptyBandError",
    "EmptyInputError",
    "EvalReport",
    "FrequencyBand",
    "GridCell",
    "GroundTruth",
    "HrSeries",
    "HrTrajectory",
    "NormalizedTrace",
    "NumericalError",
    "OnlineEstimate",
    "OnlineRefresh",
    "ParamChoice",
    "ParamGrid",
    "ParseError",
    "PerWindow",
    "PrismError",
    "PulseSignal",
    "RgbTrace",
    "SpecError",
    "SpectralScore",
    "SplineConfig",
    "SynthSpec",
    "TooFewSamplesError",
    "TooFewWindowsError",
    "TooShortError",
    "ValidationError",
    "WindowPlan",
    "WindowTooSmallError",
    "ZeroPowerError",
    "aggregate",
    "dual_band_select",
    "estimate_hr_window",
    "evaluate",
    "fit_baseline",
    "fit_smoothing_spline",
    "generate",
    "green_project",
    "grid_search",
    "gt_hr_at_midpoints",
    "gt_to_hr_series",
    "hr_series",
    "load_ground_truth",
    "load_trace",
    "normalize_trace",
    "objective",
    "plan_windows",
    "pos_project",
    "pos_project_windowed",
    "prism_project",
    "pulse_for",
    "run_online",
    "save_trace",
    "score_signal",
    "spectral_concentration",
    "temporal_variation",
]
