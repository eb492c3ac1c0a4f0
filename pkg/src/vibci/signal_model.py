"""Core domain types: channel layouts, recordings, task classes and protocols.

Also hosts the seeded session scheduler for the built-in protocols.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import ValidationError
from .rng import Xoshiro256

DEFAULT_RATE = 256.0

SIGNAL_CHANNELS = (
    "AF4", "F4", "F8", "O1", "O2", "Pz", "P3", "P4",
    "Fz", "Cz", "Oz", "T7", "T8", "P7", "P8",
)
GROUND_CHANNEL = "FPz"
REFERENCE_CHANNEL = "A1"

# 10-20 / 10-10 labels accepted in recording headers (case-insensitive).
KNOWN_LABELS = frozenset(
    label.upper()
    for label in (
        "Fp1 Fp2 FPz AF7 AF3 AFz AF4 AF8 F9 F7 F5 F3 F1 Fz F2 F4 F6 F8 F10 "
        "FT9 FT7 FC5 FC3 FC1 FCz FC2 FC4 FC6 FT8 FT10 T9 T7 C5 C3 C1 Cz C2 "
        "C4 C6 T8 T10 TP9 TP7 CP5 CP3 CP1 CPz CP2 CP4 CP6 TP8 TP10 P9 P7 "
        "P5 P3 P1 Pz P2 P4 P6 P8 P10 PO9 PO7 PO3 POz PO4 PO8 PO10 O1 Oz O2 "
        "O9 Iz O10 T3 T4 T5 T6 A1 A2 M1 M2"
    ).split()
)


class Role(str, enum.Enum):
    SIGNAL = "signal"
    GROUND = "ground"
    REFERENCE = "reference"


@dataclass(frozen=True)
class ChannelLayout:
    """Ordered electrode list with one ground and one reference."""

    channels: tuple[tuple[str, Role], ...]

    def __post_init__(self):
        chans = tuple((str(n), Role(r)) for n, r in self.channels)
        object.__setattr__(self, "channels", chans)
        names = [n for n, _ in chans]
        if len(set(names)) != len(names):
            raise ValidationError(f"duplicate channel names in layout: {names}")
        for name in names:
            if name.upper() not in KNOWN_LABELS:
                raise ValidationError(f"unknown 10-20 channel label {name!r}")
        roles = [r for _, r in chans]
        if roles.count(Role.GROUND) != 1 or roles.count(Role.REFERENCE) != 1:
            raise ValidationError("layout needs exactly one ground and one reference")
        if roles.count(Role.SIGNAL) == 0:
            raise ValidationError("layout has no signal channels")

    @classmethod
    def from_signal_names(cls, names: Sequence[str], ground: str = GROUND_CHANNEL,
                          reference: str = REFERENCE_CHANNEL) -> "ChannelLayout":
        chans = [(n, Role.SIGNAL) for n in names]
        chans += [(ground, Role.GROUND), (reference, Role.REFERENCE)]
        return cls(tuple(chans))

    @property
    def signal_names(self) -> tuple[str, ...]:
        return tuple(n for n, r in self.channels if r is Role.SIGNAL)

    @property
    def ground(self) -> str:
        return next(n for n, r in self.channels if r is Role.GROUND)

    @property
    def reference(self) -> str:
        return next(n for n, r in self.channels if r is Role.REFERENCE)

    def index_of(self, name: str) -> int:
        """Row index of a signal channel in recording data."""
        try:
            return self.signal_names.index(name)
        except ValueError:
            raise ValidationError(f"{name!r} is not a signal channel of this layout") from None


DEFAULT_LAYOUT = ChannelLayout.from_signal_names(SIGNAL_CHANNELS)


@dataclass(frozen=True, eq=False)
class Recording:
    """Multichannel EEG in microvolts, rows ordered like the layout's signal channels."""

    data: np.ndarray
    rate: float = DEFAULT_RATE
    layout: ChannelLayout = DEFAULT_LAYOUT
    provenance: str = ""

    def __post_init__(self):
        data = np.array(self.data, dtype=np.float64, copy=True)
        if data.ndim != 2:
            raise ValidationError("recording data must be a 2-D [channels x samples] array")
        if not self.rate > 0:
            raise ValidationError(f"rate must be positive, got {self.rate}")
        if data.shape[1] == 0:
            raise ValidationError("recording has no samples")
        if data.shape[0] != len(self.layout.signal_names):
            raise ValidationError(
                f"data has {data.shape[0]} rows but layout has "
                f"{len(self.layout.signal_names)} signal channels")
        if not np.all(np.isfinite(data)):
            raise ValidationError("recording contains non-finite samples")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "rate", float(self.rate))

    @property
    def n_samples(self) -> int:
        return self.data.shape[1]

    @property
    def n_channels(self) -> int:
        return self.data.shape[0]

    def with_data(self, data, provenance: Optional[str] = None) -> "Recording":
        return Recording(data, self.rate, self.layout,
                         self.provenance if provenance is None else provenance)


class Kind(str, enum.Enum):
    SSVEP = "SSVEP"
    VI = "VI"
    REST = "REST"


_KIND_ORDER = {Kind.SSVEP: 0, Kind.VI: 1, Kind.REST: 2}


@dataclass(frozen=True, order=False)
class TaskClass:
    """A trial label: stimulus kind plus target frequency (none for rest)."""

    kind: Kind
    frequency: Optional[float] = None

    def __post_init__(self):
        kind = Kind(self.kind)
        object.__setattr__(self, "kind", kind)
        if kind is Kind.REST:
            if self.frequency is not None:
                raise ValidationError("REST trials carry no frequency")
        else:
            if self.frequency is None or not self.frequency > 0:
                raise ValidationError(f"{kind.value} trials need a positive frequency")
            object.__setattr__(self, "frequency", float(self.frequency))

    @property
    def sort_key(self):
        """Canonical order: SSVEP, VI, REST; lower frequency first."""
        return (_KIND_ORDER[self.kind], self.frequency or 0.0)

    def __str__(self):
        if self.kind is Kind.REST:
            return "REST"
        f = self.frequency
        text = str(int(f)) if float(f).is_integer() else repr(f)
        return f"{self.kind.value}-{text}"

    @classmethod
    def parse(cls, text: str) -> "TaskClass":
        text = text.strip()
        if text.upper() == "REST":
            return cls(Kind.REST)
        kind, sep, freq = text.partition("-")
        if not sep:
            raise ValidationError(f"bad class label {text!r}")
        try:
            return cls(Kind(kind.upper()), float(freq))
        except ValueError as exc:
            raise ValidationError(f"bad class label {text!r}: {exc}") from None


def ssvep(f):
    return TaskClass(Kind.SSVEP, f)


def vi(f):
    return TaskClass(Kind.VI, f)


REST = TaskClass(Kind.REST)


def canonical_order(classes) -> list[TaskClass]:
    """Deduplicate and sort labels into the canonical reporting order."""
    return sorted(set(classes), key=lambda c: c.sort_key)


BUILTIN_IDS = ("P1a", "P1b", "P1c", "P1d", "P2a", "P3a")

_CLASS_SETS = {
    "P1a": (ssvep(5), vi(5), REST),
    "P1b": (ssvep(7), vi(7), REST),
    "P1c": (ssvep(5), vi(5), REST),
    "P1d": (ssvep(7), vi(7), REST),
    "P2a": (ssvep(5), ssvep(7), vi(5), vi(7), REST),
    "P3a": (vi(5), vi(7), REST),
}


def class_set(protocol_id: str) -> list[TaskClass]:
    """Classes of a built-in protocol, in canonical order."""
    try:
        return list(_CLASS_SETS[protocol_id])
    except KeyError:
        raise ValidationError(
            f"{protocol_id!r} is not a built-in protocol; supply classes explicitly") from None


@dataclass(frozen=True)
class ProtocolSpec:
    id: str
    trial_duration: float
    trials_per_class: int
    classes: tuple[TaskClass, ...]
    window: tuple[float, float]
    auditory_costimulus: bool = False

    def __post_init__(self):
        object.__setattr__(self, "classes", tuple(self.classes))
        object.__setattr__(self, "window", tuple(float(w) for w in self.window))
        if not self.classes:
            raise ValidationError(f"protocol {self.id}: empty class list")
        if len(set(self.classes)) != len(self.classes):
            raise ValidationError(f"protocol {self.id}: duplicate classes")
        if int(self.trials_per_class) != self.trials_per_class or self.trials_per_class <= 0:
            raise ValidationError(f"protocol {self.id}: trials_per_class must be a positive integer")
        if not self.trial_duration > 0:
            raise ValidationError(f"protocol {self.id}: trial_duration must be positive")
        start, end = self.window
        if not 0 <= start < end <= self.trial_duration:
            raise ValidationError(
                f"protocol {self.id}: window {self.window} does not fit a "
                f"{self.trial_duration} s trial")

    @property
    def n_trials(self) -> int:
        return self.trials_per_class * len(self.classes)

    @property
    def nominal_length(self) -> float:
        """Session length in seconds."""
        return self.n_trials * self.trial_duration


def _builtin(pid, duration, per_class, window, audio):
    return ProtocolSpec(pid, duration, per_class, _CLASS_SETS[pid], window, audio)


PROTOCOLS = {
    "P1a": _builtin("P1a", 6.0, 15, (2.0, 6.0), True),
    "P1b": _builtin("P1b", 6.0, 15, (2.0, 6.0), True),
    "P1c": _builtin("P1c", 6.0, 15, (2.0, 6.0), False),
    "P1d": _builtin("P1d", 6.0, 15, (2.0, 6.0), False),
    "P2a": _builtin("P2a", 6.0, 18, (2.0, 6.0), False),
    "P3a": _builtin("P3a", 9.0, 20, (3.0, 7.0), False),
}


def get_protocol(protocol_id: str) -> ProtocolSpec:
    try:
        return PROTOCOLS[protocol_id]
    except KeyError:
        raise ValidationError(
            f"unknown protocol {protocol_id!r}; built-ins are {', '.join(BUILTIN_IDS)}") from None


def seconds_to_samples(seconds: float, rate: float) -> int:
    n = seconds * rate
    if not math.isclose(n, round(n), abs_tol=1e-9):
        raise ValidationError(f"{seconds} s is not a whole number of samples at {rate} Hz")
    return int(round(n))


@dataclass(frozen=True)
class TrialDescriptor:
    index: int
    label: TaskClass
    start_sample: int
    duration_samples: int
    protocol: str

    @property
    def end_sample(self) -> int:
        return self.start_sample + self.duration_samples


@dataclass(frozen=True)
class SessionPlan:
    protocol: ProtocolSpec
    trials: tuple[TrialDescriptor, ...]
    seed: int
    rate: float = DEFAULT_RATE
    session_id: str = field(default="")

    @property
    def n_samples(self) -> int:
        return self.trials[-1].end_sample if self.trials else 0

    @property
    def labels(self) -> list[TaskClass]:
        return [t.label for t in self.trials]


def schedule_session(protocol: ProtocolSpec, rate: float = DEFAULT_RATE, seed: int = 0,
                     session_id: str = "") -> SessionPlan:
    """Randomly ordered, back-to-back trials for one recording session.

    The label multiset (each class ``trials_per_class`` times) is shuffled
    with :class:`~vibci.rng.Xoshiro256`, so the order depends only on
    ``seed``.
    """
    if not isinstance(protocol, ProtocolSpec):
        raise ValidationError("protocol must be a ProtocolSpec")
    if not rate > 0:
        raise ValidationError(f"rate must be positive, got {rate}")
    duration = seconds_to_samples(protocol.trial_duration, rate)
    labels = [c for c in protocol.classes for _ in range(protocol.trials_per_class)]
    Xoshiro256(seed).shuffle(labels)
    trials = tuple(
        TrialDescriptor(i, label, i * duration, duration, protocol.id)
        for i, label in enumerate(labels)
    )
    return SessionPlan(protocol, trials, seed, float(rate), session_id)
