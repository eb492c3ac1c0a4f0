"""Offline EEG classification toolbox for SSVEP and visual-imagery sessions.

Sessions are scheduled and (optionally) synthesised, filtered with
zero-phase Butterworth sections, turned into Welch PSD features and
classified with a one-vs-rest linear SVM whose electrode subset and C are
chosen by greedy search.
"""

from .errors import (
    DesignError, LengthError, ParseError, RangeError, StageError, ValidationError, VibciError,
)
from .filters import FilterSpec, default_chain, design_butterworth, preprocess
from .learner import LinearModel, fit_binary, predict, train_svm, tune_hyperparameters
from .metrics import ConfusionMatrix, chance_interval, confusion_matrix, evaluate, wolpaw_bitrate
from .signal_model import (
    DEFAULT_LAYOUT, PROTOCOLS, ChannelLayout, ProtocolSpec, Recording, SessionPlan, TaskClass,
    get_protocol, schedule_session,
)
from .spectral import Dataset, extract_features, welch_psd
from .synth import SynthConfig, generate_session, pink_noise

__version__ = "0.1.0"

__all__ = [
    "ChannelLayout", "ConfusionMatrix", "DEFAULT_LAYOUT", "Dataset", "DesignError", "FilterSpec",
    "LengthError", "LinearModel", "PROTOCOLS", "ParseError", "ProtocolSpec", "RangeError",
    "Recording", "SessionPlan", "StageError", "SynthConfig", "TaskClass", "ValidationError",
    "VibciError", "chance_interval", "confusion_matrix", "default_chain", "design_butterworth",
    "evaluate", "extract_features", "fit_binary", "generate_session", "get_protocol",
    "pink_noise", "predict", "preprocess", "schedule_session", "train_svm",
    "tune_hyperparameters", "welch_psd", "wolpaw_bitrate",
]
