"""Plain-text and SVG rendering of experiment results."""

from __future__ import annotations

from typing import Mapping

import numpy as np

from .metrics import ConfusionMatrix
from .signal_model import TaskClass

SESSION_NAMES = {
    "P1a": "5 Hz w/ s.", "P1b": "7 Hz w/ s.", "P1c": "5 Hz w/o s.",
    "P1d": "7 Hz w/o s.", "P2a": "Mult. freq.", "P3a": "Pure VI",
}

BITRATE_NOTE = (
    "note: Wolpaw bit-rate from the measured test accuracy and the protocol's "
    "trial duration; no inter-trial time is added.")


def accuracy_table(rows) -> str:
    """Accuracy/count table; ``rows`` holds (session, train acc, test acc, n train, n test)."""
    head = f"{'Session':<14}{'Train acc.':>12}{'Test acc.':>12}{'Train #':>10}{'Test #':>10}"
    lines = [head, "-" * len(head)]
    for name, tr, te, ntr, nte in rows:
        lines.append(f"{name:<14}{100 * tr:>11.2f}%{100 * te:>11.2f}%{ntr:>10d}{nte:>10d}")
    return "\n".join(lines) + "\n"


def render_report(results: Mapping) -> str:
    """Human-readable report; a pure function of the results document."""
    pid = results["protocol"]["id"]
    classes = tuple(TaskClass.parse(c) for c in results["classes"])
    name = SESSION_NAMES.get(pid, pid)
    tr, te = results["train"], results["test"]
    out = [f"Protocol {pid} ({name}), seed {results['seed']}, source {results['source']}\n\n"]
    out.append(accuracy_table([(name, tr["accuracy"], te["accuracy"], tr["n_trials"],
                                te["n_trials"])]))
    lo, hi = te["chance_interval_95"]
    out.append(f"\nchance level {100 / len(classes):.2f}% "
               f"(95% interval {100 * lo:.2f}%-{100 * hi:.2f}%)\n")
    br = results["bitrate"]
    flag = " [below chance, clamped to 0]" if br["below_chance"] else ""
    out.append(f"bit-rate {br['bits_per_min']:.2f} bits/min "
               f"(N={br['n_classes']}, T={br['trial_duration']:g} s){flag}\n{BITRATE_NOTE}\n")
    tun = results["tuning"]
    out.append(f"\nselected electrodes: {', '.join(tun['electrodes'])}\n"
               f"selected C: {tun['C']:g} (validation accuracy "
               f"{100 * tun['validation_accuracy']:.2f}%, {len(tun['trail'])} candidates)\n")
    for role in ("train", "test"):
        cm = ConfusionMatrix(classes, np.array(results[role]["confusion"], dtype=np.int64))
        out.append(f"\nconfusion matrix ({role}, rows = true class)\n{cm.render()}")
    return "".join(out)


def format_curve(freqs, power, header: str = "") -> str:
    lines = [f"# {header}"] if header else []
    lines += [f"{f!r} {p!r}" for f, p in zip(np.asarray(freqs).tolist(),
                                              np.asarray(power).tolist())]
    return "\n".join(lines) + "\n"


_COLOURS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def render_svg(curves: Mapping[str, tuple], band, title: str,
               width: int = 640, height: int = 360) -> str:
    """Static line plot of PSD curves over ``band`` (no external plotting library)."""
    lo, hi = band
    margin = 50
    series = []
    for label, (f, p) in curves.items():
        f = np.asarray(f)
        m = (f >= lo) & (f <= hi)
        series.append((label, f[m], np.asarray(p)[m]))
    ymax = max((float(p.max()) for _, _, p in series if p.size), default=1.0) or 1.0

    def sx(v):
        return margin + (v - lo) / (hi - lo) * (width - 2 * margin)

    def sy(v):
        return height - margin - v / ymax * (height - 2 * margin)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2}" y="20" text-anchor="middle" font-size="14">{title}</text>',
        f'<line x1="{margin}" y1="{height - margin}" x2="{width - margin}" '
        f'y2="{height - margin}" stroke="black"/>',
        f'<line x1="{margin}" y1="{margin}" x2="{margin}" y2="{height - margin}" stroke="black"/>',
    ]
    for tick in range(int(np.ceil(lo)), int(hi) + 1, 2):
        parts.append(f'<text x="{sx(tick):.1f}" y="{height - margin + 14}" '
                     f'text-anchor="middle" font-size="9">{tick}</text>')
    parts.append(f'<text x="{width / 2}" y="{height - 10}" text-anchor="middle" '
                 f'font-size="11">Frequency (Hz)</text>')
    for k, (label, f, p) in enumerate(series):
        colour = _COLOURS[k % len(_COLOURS)]
        pts = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(f, p))
        parts.append(f'<polyline fill="none" stroke="{colour}" stroke-width="1.5" points="{pts}"/>')
        parts.append(f'<text x="{width - margin - 5}" y="{margin + 14 * (k + 1)}" '
                     f'text-anchor="end" font-size="11" fill="{colour}">{label}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
