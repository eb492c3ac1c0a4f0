"""Synthetic EEG sessions with SSVEP-like and visual-imagery-like responses.

Background activity is continuous over the whole session: 1/f^beta noise
plus a white floor and a 50 Hz line component, independent per electrode.
Each non-rest trial adds a sinusoid at the class frequency and its
harmonics, weighted by the electrode's spatial gain and, for VI trials,
by ``vi_attenuation``. Phases are drawn per trial.

Seed mixing: every random stream comes from
``numpy.random.default_rng([seed, stream, index])`` where ``stream`` is
``1`` for per-electrode background noise (``index`` = electrode row) and
``2`` for per-trial response phases (``index`` = trial index).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional

import numpy as np

from .errors import ValidationError
from .signal_model import (
    DEFAULT_LAYOUT, ChannelLayout, Kind, Recording, SessionPlan, TaskClass,
)

NOISE_STREAM = 1
TRIAL_STREAM = 2

DEFAULT_GAINS = {
    "O1": 1.0, "O2": 1.0, "Oz": 1.0,
    "AF4": 0.8, "F4": 0.8, "F8": 0.8,
    "Pz": 0.5, "P3": 0.5, "P4": 0.5, "P7": 0.5, "P8": 0.5,
    "Fz": 0.3, "Cz": 0.3, "T7": 0.3, "T8": 0.3,
}


def pink_noise(n: int, beta: float = 1.0, sigma: float = 1.0, seed=None) -> np.ndarray:
    """Noise with power spectrum proportional to 1/f**beta.

    A white Gaussian spectrum is scaled by ``f**(-beta/2)`` (DC removed),
    transformed back, and rescaled to zero mean and standard deviation
    ``sigma`` exactly.
    """
    if n < 64:
        raise ValidationError(f"pink noise needs at least 64 samples, got {n}")
    if sigma < 0:
        raise ValidationError("sigma must be non-negative")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    spectrum = np.fft.rfft(rng.standard_normal(n))
    k = np.arange(spectrum.shape[0], dtype=float)
    k[0] = 1.0
    spectrum *= k ** (-beta / 2.0)
    spectrum[0] = 0.0
    x = np.fft.irfft(spectrum, n)
    x -= x.mean()
    std = x.std()
    if std == 0 or sigma == 0:
        return np.zeros(n)
    return x * (sigma / std)


@dataclass(frozen=True)
class SynthConfig:
    rate: float = 256.0
    pink_beta: float = 1.0
    pink_sigma: float = 1.5        # uV
    white_sigma: float = 0.5       # uV
    line_frequency: float = 50.0
    line_amplitude: float = 5.0    # uV
    fundamental: float = 2.0       # uV, SSVEP response at gain 1
    harmonics: tuple[float, ...] = (0.5,)  # amplitudes of 2f, 3f, ... relative to f
    vi_attenuation: float = 0.3
    spatial_gains: Mapping[str, Mapping[str, float]] = field(
        default_factory=lambda: {"SSVEP": dict(DEFAULT_GAINS), "VI": dict(DEFAULT_GAINS)})
    class_amplitudes: Mapping[str, float] = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "harmonics", tuple(float(h) for h in self.harmonics))
        if not self.rate > 0:
            raise ValidationError("rate must be positive")
        if not 0.5 <= self.pink_beta <= 2.0:
            raise ValidationError(f"pink_beta must lie in [0.5, 2], got {self.pink_beta}")
        if not 0 < self.vi_attenuation <= 1:
            raise ValidationError(f"vi_attenuation must lie in (0, 1], got {self.vi_attenuation}")
        amps = [self.pink_sigma, self.white_sigma, self.line_amplitude, self.fundamental,
                *self.harmonics, *self.class_amplitudes.values()]
        if any(a < 0 for a in amps):
            raise ValidationError("amplitudes must be non-negative")
        for kind in ("SSVEP", "VI"):
            if kind not in self.spatial_gains:
                raise ValidationError(f"spatial_gains lacks an entry for {kind}")

    def check_layout(self, layout: ChannelLayout):
        for kind, gains in self.spatial_gains.items():
            missing = [e for e in layout.signal_names if e not in gains]
            if missing:
                raise ValidationError(f"spatial_gains[{kind}] lacks electrodes {missing}")

    def amplitude(self, label: TaskClass) -> float:
        """Fundamental amplitude (before spatial gain) for a trial label."""
        if label.kind is Kind.REST:
            return 0.0
        base = self.class_amplitudes.get(str(label), self.fundamental)
        return base * (self.vi_attenuation if label.kind is Kind.VI else 1.0)

    def gains(self, label: TaskClass, layout: ChannelLayout) -> np.ndarray:
        table = self.spatial_gains[label.kind.value]
        return np.array([table[e] for e in layout.signal_names], dtype=float)


def with_gains(gains: Mapping[str, float], **overrides) -> SynthConfig:
    """Config whose SSVEP and VI responses share one electrode gain map."""
    return SynthConfig(spatial_gains={"SSVEP": dict(gains), "VI": dict(gains)}, **overrides)


def background(n: int, config: SynthConfig, layout: ChannelLayout) -> np.ndarray:
    t = np.arange(n) / config.rate
    rows = []
    for ch in range(len(layout.signal_names)):
        rng = np.random.default_rng([config.seed, NOISE_STREAM, ch])
        x = pink_noise(n, config.pink_beta, config.pink_sigma, rng)
        x += config.white_sigma * rng.standard_normal(n)
        phase = rng.uniform(0, 2 * np.pi)
        x += config.line_amplitude * np.sin(2 * np.pi * config.line_frequency * t + phase)
        rows.append(x)
    return np.vstack(rows)


def generate_session(plan: SessionPlan, config: SynthConfig,
                     layout: ChannelLayout = DEFAULT_LAYOUT,
                     provenance: Optional[str] = None) -> Recording:
    """Synthesise the recording for every trial in ``plan``."""
    if plan.rate != config.rate:
        raise ValidationError(f"plan rate {plan.rate} differs from synth rate {config.rate}")
    config.check_layout(layout)
    n = plan.n_samples
    if n == 0:
        raise ValidationError("session plan has no trials")
    data = background(n, config, layout)
    for trial in plan.trials:
        amp = config.amplitude(trial.label)
        if amp == 0.0:
            continue
        rng = np.random.default_rng([config.seed, TRIAL_STREAM, trial.index])
        t = np.arange(trial.duration_samples) / config.rate
        f0 = trial.label.frequency
        wave = np.zeros_like(t)
        for h, rel in enumerate((1.0,) + config.harmonics, start=1):
            phase = rng.uniform(0, 2 * np.pi)
            if rel > 0 and h * f0 < config.rate / 2:
                wave += rel * amp * np.sin(2 * np.pi * h * f0 * t + phase)
        gains = config.gains(trial.label, layout)
        data[:, trial.start_sample:trial.end_sample] += gains[:, np.newaxis] * wave
    tag = provenance if provenance is not None else (
        f"synthetic protocol={plan.protocol.id} seed={config.seed}")
    return Recording(data, config.rate, layout, tag)
