"""Command-line interface: ``vibci <command> [options]``.

Exit status is 0 on success, 2 for invalid input or usage and 1 when a
stage fails at run time.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import io, pipeline, report
from .config import DEFAULT_CONFIG, ExperimentConfig, load_config, parse_config
from .errors import ValidationError, VibciError
from .filters import preprocess
from .metrics import chance_interval, evaluate, wolpaw_bitrate
from .signal_model import SIGNAL_CHANNELS, get_protocol, schedule_session
from .synth import generate_session

log = logging.getLogger("vibci")

EXIT_OK, EXIT_RUNTIME, EXIT_USAGE = 0, 1, 2


def _u64(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2 ** 64:
        raise argparse.ArgumentTypeError(f"seed must fit in 64 unsigned bits: {text}")
    return value


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="experiment config (INI)")
    common.add_argument("--seed", type=_u64, help="global seed (overrides the config)")
    common.add_argument("--out", type=Path, help="output directory")
    common.add_argument("--electrode", help="electrode for PSD curves")
    common.add_argument("--protocol", help="built-in protocol id")
    common.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")

    parser = argparse.ArgumentParser(prog="vibci", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    p = sub.add_parser("synth", parents=[common], help="schedule and generate one session")
    p.add_argument("--session-id", help="session id (default synth-<seed>)")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("preprocess", parents=[common], help="filter a recording")
    p.add_argument("recording", type=Path)
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("psd", parents=[common], help="per-class averaged PSD curves")
    p.add_argument("manifests", type=Path, nargs="+", help="session manifests")
    p.set_defaults(func=cmd_psd)

    p = sub.add_parser("train", parents=[common], help="tune and train on the training sessions")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", parents=[common], help="score a model on the test sessions")
    p.add_argument("--model", type=Path, required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("run", parents=[common], help="full experiment and report bundle")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("report", parents=[common], help="re-render a results file")
    p.add_argument("results", type=Path)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("config", help="print the default config")
    p.set_defaults(func=cmd_config)
    return parser


def resolve_config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else parse_config("")
    changes = {}
    if args.protocol:
        changes["protocol"] = get_protocol(args.protocol)
    if args.electrode:
        if args.electrode not in SIGNAL_CHANNELS:
            raise ValidationError(f"unknown electrode {args.electrode!r}")
        changes["electrode"] = args.electrode
    if args.out:
        changes["output"] = args.out
    if args.seed is not None:
        changes["seed"] = args.seed
        changes["synth"] = replace(cfg.synth, seed=args.seed)
    return replace(cfg, **changes) if changes else cfg


def _out(cfg: ExperimentConfig) -> Path:
    cfg.output.mkdir(parents=True, exist_ok=True)
    return cfg.output


def _input(path: Path) -> Path:
    if not path.is_file():
        raise ValidationError(f"{path} does not exist")
    return path


def cmd_synth(args, cfg: ExperimentConfig) -> None:
    sid = args.session_id or f"synth-{cfg.seed}"
    plan = schedule_session(cfg.protocol, cfg.synth.rate, cfg.seed, session_id=sid)
    rec = generate_session(plan, cfg.synth)
    out = _out(cfg)
    io.save_recording(rec, out / f"{sid}.csv")
    io.save_manifest(plan, out / f"{sid}.json", recording_file=f"{sid}.csv")
    print(f"wrote {out / (sid + '.csv')} ({rec.n_samples} samples) and {out / (sid + '.json')}")


def cmd_preprocess(args, cfg: ExperimentConfig) -> None:
    rec = io.load_recording(_input(args.recording))
    filtered = preprocess(rec, pipeline.chain_for(cfg.chain, rec.rate))
    target = _out(cfg) / f"{args.recording.stem}_filtered.csv"
    io.save_recording(filtered, target)
    print(f"wrote {target}")


def cmd_psd(args, cfg: ExperimentConfig) -> None:
    sessions = pipeline.file_sessions([_input(p) for p in args.manifests])
    psds, labels = [], []
    for s in sessions:
        psds += pipeline.session_psds(s, cfg.chain, cfg.seg_len, cfg.overlap)
        labels += s.plan.labels
    out = _out(cfg)
    curves = {}
    for cls in sorted(set(labels), key=lambda c: c.sort_key):
        freqs, power = pipeline.average_psd_by_class(psds, labels, cls, cfg.electrode)
        curves[str(cls)] = (freqs, power)
        io.write_curve(out / pipeline.curve_name(cfg.electrode, cls), freqs, power,
                       f"mean PSD (uV^2/Hz), electrode {cfg.electrode}, class {cls}")
        band = (freqs >= cfg.band[0]) & (freqs <= cfg.band[1])
        peak = freqs[band][np.argmax(power[band])]
        print(f"{cls}: {labels.count(cls)} trials, peak {peak:g} Hz")
    (out / f"psd_{cfg.electrode}.svg").write_text(
        report.render_svg(curves, cfg.band, f"Averaged PSD, {cfg.electrode}"), encoding="utf-8")


def cmd_train(args, cfg: ExperimentConfig) -> None:
    train_ds, _, _ = pipeline.build_dataset(cfg, pipeline.sessions_for(cfg, pipeline.TRAIN))
    tuning = pipeline.tune(cfg, train_ds)
    out = _out(cfg)
    io.save_model(tuning.model, out / "model.json")
    doc = {"electrodes": list(tuning.electrodes), "C": tuning.C,
           "validation_accuracy": tuning.validation_accuracy, "split_seed": tuning.split_seed,
           "trail": [{"electrodes": list(c.electrodes), "C": c.C, "accuracy": c.accuracy}
                     for c in tuning.trail]}
    (out / "tuning.json").write_text(json.dumps(doc, indent=1) + "\n", encoding="utf-8")
    print(f"selected {', '.join(tuning.electrodes)} with C={tuning.C:g} "
          f"(validation accuracy {100 * tuning.validation_accuracy:.2f}%); "
          f"wrote {out / 'model.json'}")


def cmd_evaluate(args, cfg: ExperimentConfig) -> None:
    model = io.load_model(_input(args.model))
    test_ds, _, _ = pipeline.build_dataset(cfg, pipeline.sessions_for(cfg, pipeline.TEST))
    acc, cm = evaluate(model, test_ds)
    n = len(model.classes)
    lo, hi = chance_interval(n, len(test_ds))
    doc = {"accuracy": acc, "n_trials": len(test_ds), "classes": [str(c) for c in cm.classes],
           "confusion": cm.counts.tolist(), "chance_interval_95": [lo, hi],
           "bits_per_min": wolpaw_bitrate(n, acc, cfg.protocol.trial_duration)}
    out = _out(cfg)
    (out / "evaluation.json").write_text(json.dumps(doc, indent=1) + "\n", encoding="utf-8")
    print(f"test accuracy {100 * acc:.2f}% on {len(test_ds)} trials "
          f"(chance interval {100 * lo:.2f}%-{100 * hi:.2f}%)\n{cm.render()}", end="")


def cmd_run(args, cfg: ExperimentConfig) -> None:
    result = pipeline.run_experiment(cfg, _out(cfg))
    print(result.files["report.txt"], end="")
    print(f"bundle written to {cfg.output} (sha256 {pipeline.bundle_digest(result.files)})")


def cmd_report(args, cfg: ExperimentConfig) -> None:
    results = io.loads_results(_input(args.results).read_text(encoding="utf-8"))
    text = report.render_report(results)
    if args.out:
        args.out.mkdir(parents=True, exist_ok=True)
        (args.out / "report.txt").write_text(text, encoding="utf-8")
    print(text, end="")


def cmd_config(args, cfg) -> None:
    print(DEFAULT_CONFIG, end="")


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = None if args.command == "config" else resolve_config(args)
        args.func(args, cfg)
    except ValidationError as exc:
        print(f"vibci: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (VibciError, OSError) as exc:
        print(f"vibci: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
