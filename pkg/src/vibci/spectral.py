"""Welch PSD estimation and per-trial PSD feature vectors."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from .errors import ValidationError
from .signal_model import TaskClass, canonical_order

DEFAULT_SEG_LEN = 512
DEFAULT_OVERLAP = 0.5
DEFAULT_BAND = (2.0, 36.0)


@dataclass(frozen=True, eq=False)
class PsdEstimate:
    freqs: np.ndarray
    power: np.ndarray  # [channels x bins], uV^2/Hz
    channels: tuple[str, ...] = ()

    @property
    def resolution(self) -> float:
        return float(self.freqs[1] - self.freqs[0])

    def channel(self, name: str) -> np.ndarray:
        try:
            return self.power[self.channels.index(name)]
        except ValueError:
            raise ValidationError(f"no channel {name!r} in PSD estimate") from None


def hann(n: int) -> np.ndarray:
    """Periodic Hann window (the DFT-even form used for spectral analysis)."""
    return 0.5 - 0.5 * np.cos(2 * np.pi * np.arange(n) / n)


def welch_psd(segment, rate: float, seg_len: int = DEFAULT_SEG_LEN,
              overlap: float = DEFAULT_OVERLAP, channels: Sequence[str] = ()) -> PsdEstimate:
    """One-sided Welch PSD of each row of ``segment``.

    Each Hann-tapered, mean-removed segment gives a modified periodogram
    scaled by ``1 / (rate * sum(w**2))``; non-DC, non-Nyquist bins are
    doubled so that ``power.sum(axis=-1) * resolution`` approximates the
    signal variance.

    Parameters
    ----------
    segment : array_like
        ``[channels x N]`` samples (a 1-D array is treated as one channel).
    rate : float
        Sampling rate in Hz.
    seg_len : int
        Samples per segment; sets the resolution ``rate / seg_len``.
    overlap : float
        Fraction of ``seg_len`` shared by consecutive segments, in [0, 1).
    """
    x = np.atleast_2d(np.asarray(segment, dtype=float))
    n = x.shape[-1]
    if seg_len < 8:
        raise ValidationError(f"seg_len must be at least 8, got {seg_len}")
    if seg_len > n:
        raise ValidationError(f"seg_len {seg_len} exceeds signal length {n}")
    if not 0 <= overlap < 1:
        raise ValidationError(f"overlap must lie in [0, 1), got {overlap}")
    step = seg_len - int(round(overlap * seg_len))
    starts = range(0, n - seg_len + 1, step)

    w = hann(seg_len)
    scale = 1.0 / (rate * np.sum(w * w))
    acc = np.zeros(x.shape[:-1] + (seg_len // 2 + 1,))
    for s in starts:
        seg = x[..., s:s + seg_len]
        seg = seg - seg.mean(axis=-1, keepdims=True)
        spec = np.fft.rfft(seg * w, axis=-1)
        acc += spec.real ** 2 + spec.imag ** 2
    power = acc * (scale / len(starts))
    if seg_len % 2:
        power[..., 1:] *= 2
    else:
        power[..., 1:-1] *= 2
    freqs = np.fft.rfftfreq(seg_len, d=1.0 / rate)
    if channels and len(channels) != power.shape[0]:
        raise ValidationError("channel names do not match segment rows")
    return PsdEstimate(freqs, power, tuple(channels))


def band_mask(freqs, band) -> np.ndarray:
    lo, hi = band
    if lo > hi:
        raise ValidationError(f"band {band} is reversed")
    tol = 1e-9 * max(1.0, abs(hi))
    if lo < freqs[0] - tol or hi > freqs[-1] + tol:
        raise ValidationError(f"band {band} lies outside the frequency grid "
                              f"[{freqs[0]}, {freqs[-1]}]")
    mask = (freqs >= lo - tol) & (freqs <= hi + tol)
    if not mask.any():
        raise ValidationError(f"band {band} contains no frequency bins")
    return mask


@dataclass(frozen=True, eq=False)
class FeatureVector:
    values: np.ndarray
    label: Optional[TaskClass]
    electrodes_used: tuple[str, ...]

    @property
    def n_bins(self) -> int:
        return len(self.values) // len(self.electrodes_used)


def extract_features(psd: PsdEstimate, band=DEFAULT_BAND, electrodes: Sequence[str] | None = None,
                     label: TaskClass | None = None) -> FeatureVector:
    """Concatenate the in-band PSD bins of each selected electrode.

    Electrodes are emitted in the PSD's channel order, each contributing the
    bins with ``lo <= f <= hi`` (69 bins for 2-36 Hz at 0.5 Hz resolution).
    """
    if electrodes is None:
        electrodes = psd.channels
    electrodes = list(electrodes)
    if not electrodes:
        raise ValidationError("electrode subset is empty")
    unknown = [e for e in electrodes if e not in psd.channels]
    if unknown:
        raise ValidationError(f"electrodes {unknown} not present in the PSD")
    ordered = tuple(c for c in psd.channels if c in electrodes)
    rows = [psd.channels.index(c) for c in ordered]
    mask = band_mask(psd.freqs, band)
    values = np.ascontiguousarray(psd.power[rows][:, mask].reshape(-1))
    if not np.all(np.isfinite(values)):
        raise ValidationError("non-finite PSD values")
    return FeatureVector(values, label, ordered)


@dataclass(frozen=True, eq=False)
class Dataset:
    """Feature matrix with labels.

    ``X`` is ``[n_trials x n_electrodes*n_bins]`` in electrode-major order.
    ``groups`` optionally tags each row with its recording session.
    """

    X: np.ndarray
    labels: tuple[TaskClass, ...]
    electrodes: tuple[str, ...]
    band: tuple[float, float] = DEFAULT_BAND
    bin_width: float = 0.5
    class_index: Mapping[TaskClass, int] = field(default_factory=dict)
    groups: tuple[str, ...] = ()

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        if X.ndim != 2:
            raise ValidationError("feature matrix must be 2-D")
        labels = tuple(self.labels)
        if len(labels) != X.shape[0]:
            raise ValidationError("one label per feature row required")
        if self.electrodes and X.shape[1] % len(self.electrodes):
            raise ValidationError("feature length is not a multiple of the electrode count")
        index = dict(self.class_index) if self.class_index else {
            c: i for i, c in enumerate(canonical_order(labels))}
        missing = set(labels) - set(index)
        if missing:
            raise ValidationError(f"class_index misses labels {sorted(map(str, missing))}")
        if self.groups and len(self.groups) != len(labels):
            raise ValidationError("one group tag per feature row required")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "electrodes", tuple(self.electrodes))
        object.__setattr__(self, "class_index", index)
        object.__setattr__(self, "groups", tuple(self.groups))

    @classmethod
    def from_features(cls, features: Sequence[FeatureVector], band=DEFAULT_BAND,
                      bin_width: float = 0.5, class_index=None, groups=()) -> "Dataset":
        if not features:
            raise ValidationError("no feature vectors")
        electrodes = features[0].electrodes_used
        for fv in features:
            if fv.electrodes_used != electrodes or len(fv.values) != len(features[0].values):
                raise ValidationError("feature vectors differ in length or electrode ordering")
        X = np.vstack([fv.values for fv in features])
        return cls(X, tuple(fv.label for fv in features), electrodes, tuple(band),
                   bin_width, class_index or {}, tuple(groups))

    def __len__(self):
        return self.X.shape[0]

    @property
    def n_bins(self) -> int:
        return self.X.shape[1] // len(self.electrodes)

    @property
    def classes(self) -> list[TaskClass]:
        return sorted(self.class_index, key=self.class_index.__getitem__)

    @property
    def y(self) -> np.ndarray:
        return np.array([self.class_index[c] for c in self.labels], dtype=np.int64)

    @property
    def features(self) -> list[FeatureVector]:
        return [FeatureVector(row, lab, self.electrodes) for row, lab in zip(self.X, self.labels)]

    def columns_for(self, electrodes: Sequence[str]) -> np.ndarray:
        """Column indices of ``electrodes`` (kept in dataset order)."""
        nb = self.n_bins
        missing = [e for e in electrodes if e not in self.electrodes]
        if missing:
            raise ValidationError(f"electrodes {missing} not in dataset")
        return np.concatenate([np.arange(i * nb, (i + 1) * nb)
                               for i, e in enumerate(self.electrodes) if e in electrodes])

    def select(self, electrodes: Sequence[str]) -> "Dataset":
        if not electrodes:
            raise ValidationError("electrode subset is empty")
        cols = self.columns_for(electrodes)
        kept = tuple(e for e in self.electrodes if e in electrodes)
        return Dataset(self.X[:, cols], self.labels, kept, self.band, self.bin_width,
                       self.class_index, self.groups)

    def subset(self, rows) -> "Dataset":
        rows = np.asarray(rows)
        groups = tuple(self.groups[i] for i in rows) if self.groups else ()
        return Dataset(self.X[rows], tuple(self.labels[i] for i in rows), self.electrodes,
                       self.band, self.bin_width, self.class_index, groups)

    def concat(self, other: "Dataset") -> "Dataset":
        if other.electrodes != self.electrodes:
            raise ValidationError("cannot concatenate datasets with different electrodes")
        index = dict(self.class_index)
        for c in other.class_index:
            index.setdefault(c, len(index))
        groups = self.groups + other.groups if self.groups and other.groups else ()
        return Dataset(np.vstack([self.X, other.X]), self.labels + other.labels,
                       self.electrodes, self.band, self.bin_width, index, groups)


def average_psd_by_class(psds: Sequence[PsdEstimate], labels: Sequence[TaskClass],
                         cls: TaskClass, electrode: str) -> tuple[np.ndarray, np.ndarray]:
    """Mean PSD curve of one electrode over all trials labelled ``cls``.

    Trials are summed in input order so the result is reproducible bit for bit.
    """
    if len(psds) != len(labels):
        raise ValidationError("one label per PSD required")
    chosen = [p for p, lab in zip(psds, labels) if lab == cls]
    if not chosen:
        raise ValidationError(f"no trials of class {cls}")
    total = np.zeros_like(chosen[0].channel(electrode))
    for p in chosen:
        total = total + p.channel(electrode)
    return chosen[0].freqs.copy(), total / len(chosen)
