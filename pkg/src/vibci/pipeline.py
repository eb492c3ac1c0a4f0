"""Experiment orchestration: sessions -> features -> tuning -> evaluation -> bundle."""

from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from . import io, report
from .config import ExperimentConfig
from .errors import StageError, ValidationError, VibciError
from .filters import FilterSpec, design_butterworth, extract_window, format_sections, preprocess
from .learner import LinearModel, TuningResult, dumps_model, tune_hyperparameters
from .metrics import below_chance, chance_interval, evaluate, wolpaw_bitrate
from .signal_model import ProtocolSpec, Recording, SessionPlan, TaskClass, schedule_session
from .spectral import Dataset, PsdEstimate, average_psd_by_class, extract_features, welch_psd
from .synth import generate_session

log = logging.getLogger(__name__)

TRAIN, TEST = "train", "test"


@dataclass(frozen=True)
class Session:
    plan: SessionPlan
    recording: Recording


class _stage:
    """Context manager that tags unexpected failures with the stage name."""

    def __init__(self, name):
        self.name = name

    def __enter__(self):
        log.info("stage %s", self.name)

    def __exit__(self, exc_type, exc, tb):
        if exc is None or isinstance(exc, VibciError):
            return False
        raise StageError(self.name, exc) from exc


def derive_seed(seed: int, *path: int) -> int:
    """Deterministic 63-bit child seed for a stage/session."""
    state = np.random.SeedSequence([int(seed), *path]).generate_state(2, np.uint32)
    return int(state[0]) << 31 | int(state[1]) >> 1


def synthetic_sessions(config: ExperimentConfig, role: str) -> list[Session]:
    """Generate the training (role 0) or testing (role 1) sessions."""
    n = config.train_sessions if role == TRAIN else config.test_sessions
    role_code = 0 if role == TRAIN else 1
    sessions = []
    for k in range(n):
        seed = derive_seed(config.seed, role_code, k)
        plan = schedule_session(config.protocol, config.synth.rate, seed,
                                session_id=f"{role}-{k:03d}")
        rec = generate_session(plan, replace(config.synth, seed=seed))
        sessions.append(Session(plan, rec))
    return sessions


def file_sessions(manifests: Sequence[Path]) -> list[Session]:
    sessions = []
    for path in manifests:
        plan, rec_path = io.load_manifest(path)
        if rec_path is None:
            raise ValidationError(f"manifest {path} does not reference a recording")
        rec = io.load_recording(rec_path)
        if rec.rate != plan.rate:
            raise ValidationError(f"{path}: manifest rate {plan.rate} != recording rate {rec.rate}")
        if plan.n_samples > rec.n_samples:
            raise ValidationError(f"{path}: trials extend past the end of {rec_path}")
        sessions.append(Session(plan, rec))
    return sessions


def check_disjoint(train: Sequence[Session], test: Sequence[Session]):
    """Training and testing must not share a recording session."""
    ids_a = [s.plan.session_id for s in train]
    ids_b = [s.plan.session_id for s in test]
    for ids, name in ((ids_a, "training"), (ids_b, "testing")):
        if any(not i for i in ids):
            raise ValidationError(f"every {name} session needs a session_id")
        if len(set(ids)) != len(ids):
            raise ValidationError(f"duplicate session ids in the {name} set")
    shared = sorted(set(ids_a) & set(ids_b))
    if shared:
        raise ValidationError(f"sessions used for both training and testing: {shared}")


def chain_for(chain: Sequence[FilterSpec], rate: float) -> list[FilterSpec]:
    return [spec if spec.rate == rate else replace(spec, rate=rate) for spec in chain]


def session_psds(session: Session, chain: Sequence[FilterSpec], seg_len: int,
                 overlap: float, protocol: ProtocolSpec | None = None) -> list[PsdEstimate]:
    """Preprocess a session and estimate one PSD per trial window."""
    rec = preprocess(session.recording, chain_for(chain, session.recording.rate))
    protocol = protocol or session.plan.protocol
    names = rec.layout.signal_names
    return [welch_psd(extract_window(rec, trial, protocol), rec.rate, seg_len, overlap, names)
            for trial in session.plan.trials]


def features_from_psds(psds: Sequence[PsdEstimate], labels: Sequence[TaskClass], band,
                       electrodes: Sequence[str], class_index, groups=()) -> Dataset:
    feats = [extract_features(p, band, electrodes, lab) for p, lab in zip(psds, labels)]
    return Dataset.from_features(feats, band, psds[0].resolution, class_index, groups)


@dataclass(frozen=True, eq=False)
class ExperimentResult:
    results: dict
    model: LinearModel
    tuning: TuningResult
    curves: dict  # class label -> (freqs, mean power)
    files: dict   # file name -> text


def load_sessions(config: ExperimentConfig) -> tuple[list[Session], list[Session]]:
    """Training and testing sessions, checked for disjointness and protocol."""
    train_s = sessions_for(config, TRAIN)
    test_s = sessions_for(config, TEST)
    check_disjoint(train_s, test_s)
    return train_s, test_s


def sessions_for(config: ExperimentConfig, role: str) -> list[Session]:
    """Sessions of one role (``"train"`` or ``"test"``) with their protocol checked."""
    with _stage("load"):
        if config.source == "synthetic":
            sessions = synthetic_sessions(config, role)
        else:
            sessions = file_sessions(config.train_manifests if role == TRAIN
                                     else config.test_manifests)
        for s in sessions:
            if s.plan.protocol != config.protocol:
                raise ValidationError(
                    f"session {s.plan.session_id} uses protocol {s.plan.protocol.id}, "
                    f"expected {config.protocol.id}")
    return sessions


def class_index_for(protocol: ProtocolSpec) -> dict[TaskClass, int]:
    return {c: i for i, c in enumerate(sorted(protocol.classes, key=lambda c: c.sort_key))}


def build_dataset(config: ExperimentConfig, sessions: Sequence[Session]):
    """Feature dataset plus the per-trial PSDs and labels it came from."""
    psds, labels, groups = [], [], []
    with _stage("features"):
        for s in sessions:
            psds += session_psds(s, config.chain, config.seg_len, config.overlap,
                                 config.protocol)
            labels += s.plan.labels
            groups += [s.plan.session_id] * len(s.plan.trials)
        ds = features_from_psds(psds, labels, config.band,
                                sessions[0].recording.layout.signal_names,
                                class_index_for(config.protocol), groups)
    return ds, psds, labels


def tune(config: ExperimentConfig, train: Dataset) -> TuningResult:
    with _stage("tune"):
        return tune_hyperparameters(train, config.electrodes, derive_seed(config.seed, 2),
                                    config.c_grid)


def run_experiment(config: ExperimentConfig, out_dir: Path | None = None) -> ExperimentResult:
    """Full offline pipeline; writes the report bundle when ``out_dir`` is given.

    Bundle contents: ``results.json`` (machine readable), ``report.txt``
    (accuracy table and confusion matrices), ``model.json``, ``filters.txt``
    (designed coefficients) and one ``psd_<electrode>_<class>.txt`` curve
    per class plus ``psd_<electrode>.svg``.
    """
    train_s, test_s = load_sessions(config)
    train_ds, train_psds, train_labels = build_dataset(config, train_s)
    test_ds, test_psds, test_labels = build_dataset(config, test_s)
    tuning = tune(config, train_ds)
    model = tuning.model

    with _stage("evaluate"):
        train_acc, train_cm = evaluate(model, train_ds)
        test_acc, test_cm = evaluate(model, test_ds)

    with _stage("report"):
        curves = {cls: average_psd_by_class(train_psds + test_psds, train_labels + test_labels,
                                            cls, config.electrode)
                  for cls in model.classes}
        results = build_results(config, tuning, train_acc, train_cm, test_acc, test_cm,
                                len(train_ds), len(test_ds),
                                [s.plan.session_id for s in train_s],
                                [s.plan.session_id for s in test_s])
        files = bundle_files(config, results, model, curves)
        if out_dir is not None:
            write_bundle(out_dir, files)
    log.info("test accuracy %.4f (%d classes, bit-rate %.2f bits/min)", test_acc,
             len(model.classes), results["bitrate"]["bits_per_min"])
    return ExperimentResult(results, model, tuning, curves, files)


def build_results(config, tuning, train_acc, train_cm, test_acc, test_cm, n_train, n_test,
                  train_ids, test_ids) -> dict:
    protocol = config.protocol
    n_classes = len(protocol.classes)
    lo, hi = chance_interval(n_classes, n_test)
    return {
        "protocol": io.protocol_to_dict(protocol),
        "seed": config.seed,
        "source": config.source,
        "sessions": {"train": list(train_ids), "test": list(test_ids)},
        "filters": [{"kind": s.kind, "order": s.order, "edges": list(s.edges), "rate": s.rate}
                    for s in config.chain],
        "spectral": {"seg_len": config.seg_len, "overlap": config.overlap,
                     "band": list(config.band)},
        "tuning": {
            "electrodes": list(tuning.electrodes),
            "C": tuning.C,
            "validation_accuracy": tuning.validation_accuracy,
            "split_seed": tuning.split_seed,
            "trail": [{"electrodes": list(c.electrodes), "C": c.C, "accuracy": c.accuracy}
                      for c in tuning.trail],
        },
        "train": {"accuracy": train_acc, "n_trials": n_train,
                  "confusion": train_cm.counts.tolist()},
        "test": {"accuracy": test_acc, "n_trials": n_test,
                 "confusion": test_cm.counts.tolist(),
                 "chance_interval_95": [lo, hi]},
        "classes": [str(c) for c in train_cm.classes],
        "bitrate": {
            "n_classes": n_classes,
            "trial_duration": protocol.trial_duration,
            "bits_per_min": wolpaw_bitrate(n_classes, test_acc, protocol.trial_duration),
            "below_chance": below_chance(n_classes, test_acc),
        },
        "psd_electrode": config.electrode,
    }


def curve_name(electrode: str, cls) -> str:
    return f"psd_{electrode}_{cls}.txt"


def bundle_files(config, results, model, curves) -> dict[str, str]:
    files = {
        "results.json": io.dumps_results(results),
        "report.txt": report.render_report(results),
        "model.json": dumps_model(model),
        "filters.txt": "".join(
            f"# {s.kind} order={s.order} edges={list(s.edges)} rate={s.rate}\n"
            + format_sections(design_butterworth(s)) for s in config.chain),
    }
    for cls, (freqs, power) in curves.items():
        files[curve_name(config.electrode, cls)] = report.format_curve(
            freqs, power, f"mean PSD (uV^2/Hz), electrode {config.electrode}, class {cls}")
    files[f"psd_{config.electrode}.svg"] = report.render_svg(
        {str(c): v for c, v in curves.items()}, config.band,
        f"Averaged PSD, {config.electrode}")
    return files


def write_bundle(out_dir: Path, files: dict[str, str]):
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, text in files.items():
        (out_dir / name).write_text(text, encoding="utf-8")


def bundle_digest(files: dict[str, str]) -> str:
    h = hashlib.sha256()
    for name in sorted(files):
        h.update(name.encode())
        h.update(files[name].encode())
    return h.hexdigest()
