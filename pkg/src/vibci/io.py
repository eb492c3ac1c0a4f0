"""On-disk formats: recordings, session manifests, models and results.

Recording (text, UTF-8)::

    # vibci-recording 1.0
    # rate: 256.0
    # units: uV
    # ground: FPz
    # reference: A1
    # provenance: free text
    AF4,F4,F8,...            <- signal channel names in layout order
    -3.25,1.5,...            <- one row per time step, full float precision

Floats are written with ``repr`` so a save/load cycle is bit-exact, and
saving a loaded canonical file reproduces it byte for byte.

Session manifests, models and results are JSON documents tagged with a
``format`` name and a ``version``; loaders reject unknown major versions.
"""

from __future__ import annotations

import json
import math
import os
from pathlib import Path
from typing import Union

import numpy as np

from .errors import ParseError, ValidationError
from .learner import LinearModel, dumps_model, loads_model
from .signal_model import (
    KNOWN_LABELS, ChannelLayout, ProtocolSpec, Recording, SessionPlan, TaskClass,
    TrialDescriptor, PROTOCOLS, get_protocol, seconds_to_samples,
)

PathLike = Union[str, os.PathLike]

RECORDING_MAGIC = "vibci-recording"
RECORDING_VERSION = "1.0"
MANIFEST_FORMAT = "vibci-session"
MANIFEST_VERSION = "1.0"
RESULTS_FORMAT = "vibci-results"
RESULTS_VERSION = "1.0"


def _major(version) -> str:
    return str(version).split(".")[0]


# -- recordings -------------------------------------------------------------

def format_recording(rec: Recording) -> str:
    header = [
        f"# {RECORDING_MAGIC} {RECORDING_VERSION}",
        f"# rate: {rec.rate!r}",
        "# units: uV",
        f"# ground: {rec.layout.ground}",
        f"# reference: {rec.layout.reference}",
        f"# provenance: {' '.join(rec.provenance.split())}",
        ",".join(rec.layout.signal_names),
    ]
    body = [",".join(map(repr, row)) for row in rec.data.T.tolist()]
    return "\n".join(header + body) + "\n"


def save_recording(rec: Recording, path: PathLike) -> None:
    Path(path).write_text(format_recording(rec), encoding="utf-8")


def parse_recording(text: str, path=None) -> Recording:
    lines = text.splitlines()
    if not lines or not lines[0].startswith(f"# {RECORDING_MAGIC} "):
        raise ParseError("missing recording header", 1, path)
    version = lines[0].split()[-1]
    if _major(version) != _major(RECORDING_VERSION):
        raise ParseError(f"unsupported recording version {version}", 1, path)
    meta = {}
    lineno = 1
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.startswith("#"):
            break
        key, sep, value = line[1:].partition(":")
        if not sep:
            raise ParseError(f"malformed header line {line!r}", lineno, path)
        meta[key.strip()] = value.strip()
    else:
        raise ParseError("no channel header line", lineno + 1, path)

    for key in ("rate", "units", "ground", "reference"):
        if key not in meta:
            raise ParseError(f"header lacks '{key}'", None, path)
    if meta["units"] not in ("uV", "µV"):
        raise ParseError(f"unsupported units {meta['units']!r}", None, path)
    try:
        rate = float(meta["rate"])
    except ValueError:
        raise ParseError(f"bad rate {meta['rate']!r}", None, path) from None

    names = [n.strip() for n in lines[lineno - 1].split(",")]
    for n in names:
        if n.upper() not in KNOWN_LABELS:
            raise ParseError(f"unknown channel name {n!r}", lineno, path)
    try:
        layout = ChannelLayout.from_signal_names(names, meta["ground"], meta["reference"])
    except ValidationError as exc:
        raise ParseError(str(exc), lineno, path) from None

    rows = []
    width = len(names)
    for i, line in enumerate(lines[lineno:], start=lineno + 1):
        if not line.strip():
            continue
        fields = line.split(",")
        if len(fields) != width:
            raise ParseError(f"expected {width} values, found {len(fields)}", i, path)
        try:
            row = [float(v) for v in fields]
        except ValueError:
            raise ParseError("non-numeric value", i, path) from None
        if not all(math.isfinite(v) for v in row):
            raise ParseError("non-finite value", i, path)
        rows.append(row)
    if not rows:
        raise ParseError("recording has no samples", None, path)
    data = np.array(rows, dtype=np.float64).T
    return Recording(data, rate, layout, meta.get("provenance", ""))


def load_recording(path: PathLike) -> Recording:
    return parse_recording(Path(path).read_text(encoding="utf-8"), str(path))


# -- session manifests ------------------------------------------------------

def protocol_to_dict(p: ProtocolSpec) -> dict:
    return {
        "id": p.id,
        "trial_duration": p.trial_duration,
        "trials_per_class": p.trials_per_class,
        "classes": [str(c) for c in p.classes],
        "window": list(p.window),
        "auditory_costimulus": p.auditory_costimulus,
    }


def protocol_from_dict(doc) -> ProtocolSpec:
    if isinstance(doc, str):
        return get_protocol(doc)
    spec = ProtocolSpec(
        doc["id"], float(doc["trial_duration"]), int(doc["trials_per_class"]),
        tuple(TaskClass.parse(c) for c in doc["classes"]), tuple(doc["window"]),
        bool(doc.get("auditory_costimulus", False)))
    builtin = PROTOCOLS.get(spec.id)
    if builtin is not None and builtin != spec:
        raise ValidationError(f"manifest redefines built-in protocol {spec.id}")
    return spec


def manifest_to_dict(plan: SessionPlan, recording_file: str | None = None) -> dict:
    doc = {
        "format": MANIFEST_FORMAT,
        "version": MANIFEST_VERSION,
        "session_id": plan.session_id,
        "protocol": protocol_to_dict(plan.protocol),
        "rate": plan.rate,
        "seed": plan.seed,
    }
    if recording_file is not None:
        doc["recording"] = recording_file
    doc["trials"] = [
        {"index": t.index, "label": str(t.label), "start_sample": t.start_sample}
        for t in plan.trials
    ]
    return doc


def manifest_from_dict(doc: dict) -> SessionPlan:
    if doc.get("format") != MANIFEST_FORMAT:
        raise ValidationError(f"not a session manifest (format={doc.get('format')!r})")
    if _major(doc.get("version")) != _major(MANIFEST_VERSION):
        raise ValidationError(f"unsupported manifest version {doc.get('version')!r}")
    protocol = protocol_from_dict(doc["protocol"])
    rate = float(doc["rate"])
    duration = seconds_to_samples(protocol.trial_duration, rate)
    trials = []
    for k, t in enumerate(doc["trials"]):
        label = TaskClass.parse(t["label"])
        if label not in protocol.classes:
            raise ValidationError(f"trial {k}: label {label} not in protocol {protocol.id}")
        trials.append(TrialDescriptor(int(t["index"]), label, int(t["start_sample"]),
                                      duration, protocol.id))
    for a, b in zip(trials, trials[1:]):
        if a.end_sample > b.start_sample:
            raise ValidationError(f"trials {a.index} and {b.index} overlap")
    return SessionPlan(protocol, tuple(trials), int(doc.get("seed", 0)), rate,
                       str(doc.get("session_id", "")))


def save_manifest(plan: SessionPlan, path: PathLike, recording_file: str | None = None) -> None:
    Path(path).write_text(json.dumps(manifest_to_dict(plan, recording_file), indent=1) + "\n",
                          encoding="utf-8")


def load_manifest(path: PathLike) -> tuple[SessionPlan, Path | None]:
    """Load a manifest; also returns the recording path it references, if any."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed manifest: {exc.msg}", exc.lineno, str(path)) from None
    plan = manifest_from_dict(doc)
    rec = doc.get("recording")
    return plan, (path.parent / rec) if rec else None


# -- models and results -----------------------------------------------------

def save_model(model: LinearModel, path: PathLike) -> None:
    Path(path).write_text(dumps_model(model), encoding="utf-8")


def load_model(path: PathLike) -> LinearModel:
    return loads_model(Path(path).read_text(encoding="utf-8"))


def dumps_results(results: dict) -> str:
    doc = {"format": RESULTS_FORMAT, "schema_version": RESULTS_VERSION, **results}
    return json.dumps(doc, indent=1, sort_keys=False) + "\n"


def loads_results(text: str) -> dict:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed results file: {exc.msg}", exc.lineno) from None
    if doc.get("format") != RESULTS_FORMAT:
        raise ValidationError("not a results file")
    if _major(doc.get("schema_version")) != _major(RESULTS_VERSION):
        raise ValidationError(f"unsupported results schema {doc.get('schema_version')!r}")
    return doc


def write_curve(path: PathLike, freqs, power, header: str = "") -> None:
    """Two-column (frequency, power) text file."""
    lines = [f"# {header}"] if header else []
    lines += [f"{f!r} {p!r}" for f, p in zip(np.asarray(freqs).tolist(),
                                              np.asarray(power).tolist())]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_curve(path: PathLike) -> tuple[np.ndarray, np.ndarray]:
    data = np.loadtxt(path, comments="#", ndmin=2)
    return data[:, 0], data[:, 1]
