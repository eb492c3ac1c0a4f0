"""Accuracy, confusion matrices and Wolpaw information transfer rate."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import stats

from .errors import ValidationError
from .learner import LinearModel, predict_dataset
from .signal_model import TaskClass
from .spectral import Dataset


@dataclass(frozen=True, eq=False)
class ConfusionMatrix:
    classes: tuple[TaskClass, ...]
    counts: np.ndarray  # [true x predicted]

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def accuracy(self) -> float:
        return float(np.trace(self.counts)) / self.total if self.total else 0.0

    def __add__(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        if self.classes != other.classes:
            raise ValidationError("confusion matrices over different classes")
        return ConfusionMatrix(self.classes, self.counts + other.counts)

    def render(self) -> str:
        """Integer grid with class headers; rows are true labels."""
        names = [str(c) for c in self.classes]
        width = max(7, *(len(n) for n in names), len(str(self.counts.max(initial=0))))
        lines = ["true\\pred".ljust(width) + " " + " ".join(n.rjust(width) for n in names)]
        for name, row in zip(names, self.counts):
            lines.append(name.ljust(width) + " " + " ".join(str(int(v)).rjust(width) for v in row))
        return "\n".join(lines) + "\n"


def confusion_matrix(true: Sequence[TaskClass], predicted: Sequence[TaskClass],
                     classes: Sequence[TaskClass]) -> ConfusionMatrix:
    index = {c: i for i, c in enumerate(classes)}
    counts = np.zeros((len(classes), len(classes)), dtype=np.int64)
    for t, p in zip(true, predicted):
        counts[index[t], index[p]] += 1
    return ConfusionMatrix(tuple(classes), counts)


def evaluate(model: LinearModel, test: Dataset) -> tuple[float, ConfusionMatrix]:
    if len(test) == 0:
        raise ValidationError("empty test set")
    unknown = set(test.labels) - set(model.classes)
    if unknown:
        raise ValidationError(f"test labels unknown to the model: {sorted(map(str, unknown))}")
    predicted = predict_dataset(model, test)
    cm = confusion_matrix(test.labels, predicted, model.classes)
    return cm.accuracy, cm


def bits_per_trial(n_classes: int, accuracy: float) -> float:
    """Wolpaw bits per selection, clamped at zero below chance."""
    if n_classes < 2:
        raise ValidationError("bit-rate needs at least 2 classes")
    if not 0 <= accuracy <= 1:
        raise ValidationError(f"accuracy must lie in [0, 1], got {accuracy}")
    n, p = n_classes, accuracy
    if p < 1.0 / n:
        return 0.0
    bits = math.log2(n)
    if p > 0:
        bits += p * math.log2(p)
    if p < 1:
        bits += (1 - p) * math.log2((1 - p) / (n - 1))
    return max(bits, 0.0)


def wolpaw_bitrate(n_classes: int, accuracy: float, trial_duration: float) -> float:
    """Information transfer rate in bits/min."""
    if not trial_duration > 0:
        raise ValidationError("trial duration must be positive")
    return bits_per_trial(n_classes, accuracy) * 60.0 / trial_duration


def below_chance(n_classes: int, accuracy: float) -> bool:
    return accuracy < 1.0 / n_classes


def chance_interval(n_classes: int, n_trials: int, level: float = 0.95) -> tuple[float, float]:
    """Accuracy range an uninformed classifier reaches with probability ``level``.

    Exact binomial quantiles of ``Binomial(n_trials, 1/n_classes)``, as fractions.
    """
    lo, hi = stats.binom.interval(level, n_trials, 1.0 / n_classes)
    return float(lo) / n_trials, float(hi) / n_trials
