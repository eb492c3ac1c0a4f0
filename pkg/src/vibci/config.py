"""Experiment configuration: an INI file with one section per stage.

Every key is optional; :data:`DEFAULT_CONFIG` lists them all with their
defaults and is what ``vibci config`` prints.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

from .errors import ValidationError
from .filters import FilterSpec
from .learner import C_GRID
from .signal_model import (
    BUILTIN_IDS, SIGNAL_CHANNELS, ProtocolSpec, TaskClass, get_protocol,
)
from .synth import DEFAULT_GAINS, SynthConfig

DEFAULT_CONFIG = """\
[experiment]
# built-in protocol id (P1a P1b P1c P1d P2a P3a) or "custom"
protocol = P3a
# global seed; every stage derives its own seed from it
seed = 0
# electrode used for the averaged-PSD curves
electrode = AF4
# where to write the report bundle (overridden by --out)
output = results
# "synthetic" generates sessions; "files" reads the manifests under [data]
source = synthetic

[protocol]
# only read when protocol = custom
id = custom
trial_duration = 9
trials_per_class = 20
classes = VI-5, VI-7, REST
window = 3, 7

[filters]
lowpass = 60
lowpass_order = 4
notch = 48, 52
notch_order = 4
bandpass = 2, 36
# prototype order; the bandpass has twice as many poles
bandpass_order = 8

[spectral]
seg_len = 512
overlap = 0.5
band = 2, 36

[tuning]
# regularisation grid, searched jointly with greedy electrode selection
c_grid = 0.03125, 0.125, 0.5, 2, 8, 32
# candidate electrodes ("all" = every signal channel)
electrodes = all

[synth]
# sessions per data set; 13 x 60 = 780 and 6 x 60 = 360 trials for P3a
train_sessions = 13
test_sessions = 6
pink_beta = 1.0
pink_sigma = 1.5
white_sigma = 0.5
line_amplitude = 5.0
fundamental = 2.0
harmonics = 0.5
vi_attenuation = 0.3
# "default" or comma-separated NAME:GAIN pairs (missing electrodes get 0)
gains = default

[data]
# comma-separated session manifest paths (relative to this file)
train =
test =
"""


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(t) for t in text.replace(",", " ").split())


@dataclass(frozen=True)
class ExperimentConfig:
    protocol: ProtocolSpec = field(default_factory=lambda: get_protocol("P3a"))
    seed: int = 0
    electrode: str = "AF4"
    output: Path = Path("results")
    source: str = "synthetic"
    chain: tuple[FilterSpec, ...] = ()
    seg_len: int = 512
    overlap: float = 0.5
    band: tuple[float, float] = (2.0, 36.0)
    c_grid: tuple[float, ...] = C_GRID
    electrodes: tuple[str, ...] = SIGNAL_CHANNELS
    train_sessions: int = 13
    test_sessions: int = 6
    synth: SynthConfig = field(default_factory=SynthConfig)
    train_manifests: tuple[Path, ...] = ()
    test_manifests: tuple[Path, ...] = ()
    rate: float = 256.0

    def __post_init__(self):
        if not self.chain:
            object.__setattr__(self, "chain", tuple(chain_from_section({}, self.rate)))
        if self.source not in ("synthetic", "files"):
            raise ValidationError(f"source must be 'synthetic' or 'files', got {self.source!r}")
        if self.train_sessions < 1 or self.test_sessions < 1:
            raise ValidationError("need at least one training and one testing session")
        if self.electrode not in self.electrodes and self.electrode not in SIGNAL_CHANNELS:
            raise ValidationError(f"unknown plot electrode {self.electrode!r}")
        if self.source == "files":
            if not self.train_manifests or not self.test_manifests:
                raise ValidationError("[data] train and test manifests are required")
            for p in self.train_manifests + self.test_manifests:
                if not Path(p).is_file():
                    raise ValidationError(f"manifest {p} does not exist")

    def with_seed(self, seed: Optional[int]) -> "ExperimentConfig":
        return self if seed is None else replace(self, seed=int(seed))

    def with_synth(self, **changes) -> "ExperimentConfig":
        return replace(self, synth=replace(self.synth, **changes))


def chain_from_section(sec, rate: float) -> list[FilterSpec]:
    get = sec.get if hasattr(sec, "get") else (lambda k, d=None: d)
    return [
        FilterSpec("lowpass", int(get("lowpass_order", "4")), _floats(get("lowpass", "60")), rate),
        FilterSpec("bandstop", int(get("notch_order", "4")), _floats(get("notch", "48, 52")), rate),
        FilterSpec("bandpass", int(get("bandpass_order", "8")), _floats(get("bandpass", "2, 36")),
                   rate),
    ]


def _gains(text: str) -> dict[str, float]:
    text = text.strip()
    if text in ("", "default"):
        return dict(DEFAULT_GAINS)
    gains = {name: 0.0 for name in SIGNAL_CHANNELS}
    for item in text.split(","):
        name, sep, value = item.partition(":")
        if not sep or name.strip() not in gains:
            raise ValidationError(f"bad gain entry {item.strip()!r}")
        gains[name.strip()] = float(value)
    return gains


def parse_config(text: str, base_dir: Path = Path(".")) -> ExperimentConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    parser.read_string(DEFAULT_CONFIG)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ValidationError(f"malformed config: {exc}") from None
    try:
        return _build(parser, base_dir)
    except (KeyError, ValueError) as exc:
        if isinstance(exc, ValidationError):
            raise
        raise ValidationError(f"bad config value: {exc}") from None


def _build(cp: configparser.ConfigParser, base_dir: Path) -> ExperimentConfig:
    ex = cp["experiment"]
    pid = ex.get("protocol").strip()
    if pid == "custom":
        pr = cp["protocol"]
        protocol = ProtocolSpec(
            pr.get("id"), pr.getfloat("trial_duration"), pr.getint("trials_per_class"),
            tuple(TaskClass.parse(c) for c in pr.get("classes").split(",")),
            _floats(pr.get("window")))
    elif pid in BUILTIN_IDS:
        protocol = get_protocol(pid)
    else:
        raise ValidationError(f"unknown protocol {pid!r}")

    rate = 256.0
    sp = cp["spectral"]
    tu = cp["tuning"]
    sy = cp["synth"]
    electrodes = tu.get("electrodes").strip()
    electrodes = SIGNAL_CHANNELS if electrodes == "all" else tuple(
        e.strip() for e in electrodes.split(",") if e.strip())
    unknown = [e for e in electrodes if e not in SIGNAL_CHANNELS]
    if unknown:
        raise ValidationError(f"unknown tuning electrodes {unknown}")
    seed = int(ex.get("seed"))
    synth = SynthConfig(
        rate=rate,
        pink_beta=sy.getfloat("pink_beta"),
        pink_sigma=sy.getfloat("pink_sigma"),
        white_sigma=sy.getfloat("white_sigma"),
        line_amplitude=sy.getfloat("line_amplitude"),
        fundamental=sy.getfloat("fundamental"),
        harmonics=_floats(sy.get("harmonics")),
        vi_attenuation=sy.getfloat("vi_attenuation"),
        spatial_gains={"SSVEP": _gains(sy.get("gains")), "VI": _gains(sy.get("gains"))},
        seed=seed,
    )
    data = cp["data"]

    def paths(key):
        return tuple(base_dir / p.strip() for p in data.get(key).split(",") if p.strip())

    return ExperimentConfig(
        protocol=protocol,
        seed=seed,
        electrode=ex.get("electrode").strip(),
        output=Path(ex.get("output").strip()),
        source=ex.get("source").strip(),
        chain=tuple(chain_from_section(cp["filters"], rate)),
        seg_len=sp.getint("seg_len"),
        overlap=sp.getfloat("overlap"),
        band=_floats(sp.get("band")),
        c_grid=_floats(tu.get("c_grid")),
        electrodes=electrodes,
        train_sessions=sy.getint("train_sessions"),
        test_sessions=sy.getint("test_sessions"),
        synth=synth,
        train_manifests=paths("train"),
        test_manifests=paths("test"),
        rate=rate,
    )


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    if not path.is_file():
        raise ValidationError(f"config file {path} does not exist")
    return parse_config(path.read_text(encoding="utf-8"), path.parent)
