"""IIR Butterworth design, zero-phase filtering and trial windowing.

Filters are designed from the analog Butterworth prototype, mapped to the
requested band with the usual lowpass-to-X substitutions, discretised with a
pre-warped bilinear transform and stored as a cascade of second-order
sections ``[b0, b1, b2, 1, a1, a2]``.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import signal as sp_signal

from .errors import DesignError, LengthError, RangeError
from .signal_model import ProtocolSpec, Recording, TrialDescriptor, seconds_to_samples

KINDS = ("lowpass", "highpass", "bandpass", "bandstop")
MAX_ORDER = 16
STABILITY_MARGIN = 1e-9


@dataclass(frozen=True)
class FilterSpec:
    kind: str
    order: int
    edges: tuple[float, ...]
    rate: float = 256.0

    def __post_init__(self):
        edges = tuple(float(e) for e in np.atleast_1d(self.edges))
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "rate", float(self.rate))
        kind = "bandstop" if self.kind == "notch" else self.kind
        object.__setattr__(self, "kind", kind)
        if kind not in KINDS:
            raise DesignError(f"unknown filter kind {self.kind!r}")
        if int(self.order) != self.order or not 1 <= self.order <= MAX_ORDER:
            raise DesignError(f"order must be an integer in [1, {MAX_ORDER}], got {self.order}")
        want = 1 if kind in ("lowpass", "highpass") else 2
        if len(edges) != want:
            raise DesignError(f"{kind} needs {want} edge(s), got {len(edges)}")
        nyq = self.rate / 2
        for e in edges:
            if not 0 < e < nyq:
                raise DesignError(f"edge {e} Hz must lie strictly inside (0, {nyq}) Hz")
        if want == 2 and not edges[0] < edges[1]:
            raise DesignError(f"band edges must be increasing, got {edges}")

    @property
    def total_order(self) -> int:
        """Number of poles of the designed filter."""
        return self.order * (1 if self.kind in ("lowpass", "highpass") else 2)


@dataclass(frozen=True, eq=False)
class DesignedFilter:
    sections: np.ndarray  # shape (n_sections, 6)
    spec: FilterSpec

    @property
    def poles(self) -> np.ndarray:
        return np.concatenate([np.roots(s[3:]) for s in self.sections])

    def response(self, freqs) -> np.ndarray:
        """Complex frequency response at ``freqs`` (Hz)."""
        return sos_response(self.sections, freqs, self.spec.rate)


def sos_response(sections, freqs, rate) -> np.ndarray:
    z = np.exp(-1j * 2 * np.pi * np.asarray(freqs, dtype=float) / rate)
    h = np.ones_like(z)
    for b0, b1, b2, a0, a1, a2 in np.atleast_2d(sections):
        h = h * (b0 + b1 * z + b2 * z * z) / (a0 + a1 * z + a2 * z * z)
    return h


def _prototype_poles(n):
    k = np.arange(1, n + 1)
    return np.exp(1j * np.pi * (2 * k + n - 1) / (2 * n))


def _pair_poles(poles):
    """Group poles into second-order pairs: conjugates together, reals together."""
    poles = np.asarray(poles)
    tol = 1e-10 * max(1.0, np.max(np.abs(poles)))
    upper = sorted((p for p in poles if p.imag > tol), key=lambda p: abs(p))
    real = sorted((p.real for p in poles if abs(p.imag) <= tol), key=abs)
    pairs = [(p, np.conj(p)) for p in upper]
    for i in range(0, len(real) - 1, 2):
        pairs.append((real[i], real[i + 1]))
    if len(real) % 2:
        pairs.append((real[-1], None))
    # sections with poles nearest the unit circle go last
    pairs.sort(key=lambda pr: max(abs(q) for q in pr if q is not None))
    return pairs


def _den(pair):
    p, q = pair
    if q is None:
        return np.array([1.0, -p.real if np.iscomplexobj(p) else -p, 0.0])
    return np.real(np.poly([p, q]))


def design_butterworth(spec: FilterSpec) -> DesignedFilter:
    """Design a digital Butterworth filter as second-order sections.

    For two-edge kinds ``spec.order`` is the prototype order, so the
    designed filter has ``2 * order`` poles. Both band edges sit at -3 dB.
    """
    return _design_cached(spec)


@functools.lru_cache(maxsize=64)
def _design_cached(spec: FilterSpec) -> DesignedFilter:
    fs = spec.rate
    warped = [2 * fs * np.tan(np.pi * e / fs) for e in spec.edges]
    proto = _prototype_poles(spec.order)

    if spec.kind == "lowpass":
        analog = proto * warped[0]
        zero_num = np.array([1.0, 2.0, 1.0])      # zeros at z = -1
        odd_num = np.array([1.0, 1.0, 0.0])
        ref_freq = 0.0
    elif spec.kind == "highpass":
        analog = warped[0] / proto
        zero_num = np.array([1.0, -2.0, 1.0])     # zeros at z = +1
        odd_num = np.array([1.0, -1.0, 0.0])
        ref_freq = fs / 2
    else:
        w1, w2 = warped
        bw = w2 - w1
        w0sq = w1 * w2
        if spec.kind == "bandpass":
            c = proto * bw / 2
            root = np.sqrt(c * c - w0sq + 0j)
            analog = np.concatenate([c + root, c - root])
            zero_num = np.array([1.0, 0.0, -1.0])  # one zero at +1, one at -1
            # digital image of the analog centre frequency
            ref_freq = fs / np.pi * np.arctan(np.sqrt(w0sq) / (2 * fs))
        else:
            c = bw / (2 * proto)
            root = np.sqrt(c * c - w0sq + 0j)
            analog = np.concatenate([c + root, c - root])
            w0_digital = 2 * np.arctan(np.sqrt(w0sq) / (2 * fs))
            zero_num = np.array([1.0, -2.0 * np.cos(w0_digital), 1.0])
            ref_freq = 0.0
        odd_num = None

    digital = (2 * fs + analog) / (2 * fs - analog)
    sections = []
    for pair in _pair_poles(digital):
        num = zero_num if pair[1] is not None else odd_num
        if num is None:
            raise DesignError("unpaired pole in a band design")
        sections.append(np.concatenate([num, _den(pair)]))
    sos = np.array(sections, dtype=float)

    gain = np.abs(sos_response(sos, [ref_freq], fs))[0]
    if not np.isfinite(gain) or gain <= 0:
        raise DesignError(f"degenerate gain while designing {spec}")
    sos[0, :3] /= gain

    designed = DesignedFilter(sos, spec)
    radius = np.abs(designed.poles)
    if not np.all(np.isfinite(sos)) or np.max(radius) >= 1 - STABILITY_MARGIN:
        raise DesignError(f"unstable design for {spec}: max pole radius {np.max(radius)}")
    sos.setflags(write=False)
    return designed


def default_chain(rate: float = 256.0) -> list[FilterSpec]:
    """Lowpass 60 Hz, 48-52 Hz notch, 2-36 Hz bandpass (order 8)."""
    return [
        FilterSpec("lowpass", 4, (60.0,), rate),
        FilterSpec("bandstop", 4, (48.0, 52.0), rate),
        FilterSpec("bandpass", 8, (2.0, 36.0), rate),
    ]


def _odd_extend(x, n):
    left = 2 * x[..., :1] - x[..., n:0:-1]
    right = 2 * x[..., -1:] - x[..., -2:-n - 2:-1]
    return np.concatenate([left, x, right], axis=-1)


def filtfilt_array(filt: DesignedFilter, x: np.ndarray) -> np.ndarray:
    """Forward-backward filtering along the last axis.

    The signal is padded at both ends by odd reflection over
    ``3 * total_order`` samples; each pass starts from the steady-state
    section states scaled by the first sample. The net response is
    ``|H(f)|**2`` with zero phase.
    """
    x = np.asarray(x, dtype=float)
    pad = 3 * filt.spec.total_order
    n = x.shape[-1]
    if n <= 2 * pad:
        raise LengthError(
            f"signal of {n} samples is too short for zero-phase filtering "
            f"(needs more than {2 * pad})")
    sos = np.array(filt.sections)  # sosfilt needs a writable buffer
    ext = _odd_extend(x, pad)
    # steady-state states, broadcast to sosfilt's (n_sections, ..., 2) layout
    zi = sp_signal.sosfilt_zi(sos).reshape((sos.shape[0],) + (1,) * (ext.ndim - 1) + (2,))

    def run(sig):
        z0 = zi * sig[..., 0][np.newaxis, ..., np.newaxis]
        out, _ = sp_signal.sosfilt(sos, sig, axis=-1, zi=z0)
        return out

    y = run(ext)
    y = run(y[..., ::-1])[..., ::-1]
    return np.ascontiguousarray(y[..., pad:pad + n])


def apply_zero_phase(filt: DesignedFilter, recording: Recording) -> Recording:
    """Zero-phase filter every channel of ``recording``."""
    if recording.rate != filt.spec.rate:
        raise DesignError(
            f"filter designed for {filt.spec.rate} Hz applied to a {recording.rate} Hz recording")
    return recording.with_data(filtfilt_array(filt, recording.data))


def preprocess(recording: Recording, chain: Sequence[FilterSpec] | None = None) -> Recording:
    """Run the preprocessing chain (default: :func:`default_chain`) in order."""
    if chain is None:
        chain = default_chain(recording.rate)
    out = recording
    for spec in chain:
        out = apply_zero_phase(design_butterworth(spec), out)
    return out


def window_bounds(trial: TrialDescriptor, protocol: ProtocolSpec, rate: float) -> tuple[int, int]:
    start_s, end_s = protocol.window
    lo = seconds_to_samples(start_s, rate)
    hi = seconds_to_samples(end_s, rate)
    if hi > trial.duration_samples:
        raise RangeError(
            f"window ({start_s}, {end_s}) s exceeds trial {trial.index} of "
            f"{trial.duration_samples / rate} s")
    return trial.start_sample + lo, trial.start_sample + hi


def extract_window(recording: Recording, trial: TrialDescriptor,
                   protocol: ProtocolSpec) -> np.ndarray:
    """Samples ``[start + window_start*rate, start + window_end*rate)`` of every channel."""
    if trial.start_sample < 0 or trial.end_sample > recording.n_samples:
        raise RangeError(
            f"trial {trial.index} [{trial.start_sample}, {trial.end_sample}) lies outside "
            f"a recording of {recording.n_samples} samples")
    lo, hi = window_bounds(trial, protocol, recording.rate)
    return recording.data[:, lo:hi]


def format_sections(filt: DesignedFilter) -> str:
    """One section per line, six coefficients at full precision."""
    return "".join(" ".join(repr(float(c)) for c in row) + "\n" for row in filt.sections)


def parse_sections(text: str) -> np.ndarray:
    rows = [[float(tok) for tok in line.split()] for line in text.splitlines() if line.strip()]
    return np.array(rows, dtype=float).reshape(-1, 6)
