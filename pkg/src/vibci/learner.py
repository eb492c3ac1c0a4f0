"""One-vs-rest linear SVM with electrode-subset and C tuning.

The solver lives in :mod:`vibci._dualcd`; this module adds feature
standardisation, the one-vs-rest reduction, prediction, serialisation and
the greedy hyper-parameter search run on a stratified half split of the
training data.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import _dualcd
from .errors import ValidationError
from .signal_model import TaskClass
from .spectral import Dataset, FeatureVector

log = logging.getLogger(__name__)

TOL = 1e-4
MAX_EPOCHS = 10000
C_GRID = tuple(2.0 ** k for k in range(-5, 6, 2))
MODEL_FORMAT = "vibci-linear-svm"
MODEL_VERSION = "1.0"


@dataclass(frozen=True)
class BinaryFit:
    """Solution of one binary dual problem (bias folded in as the last weight)."""

    w: np.ndarray
    bias: float
    alpha: np.ndarray
    epochs: int
    kkt_violation: float
    objectives: np.ndarray

    @property
    def converged(self) -> bool:
        return self.kkt_violation < TOL


def fit_binary(X, y, C: float, seed: int = 0, tol: float = TOL,
               max_epochs: int = MAX_EPOCHS, alpha0=None) -> BinaryFit:
    """Fit ``sign(w.x + b)`` with labels ``y`` in {-1, +1}.

    The bias is regularised together with ``w`` (a constant feature of 1 is
    appended), the usual treatment for coordinate-descent solvers.
    ``alpha0`` optionally warm-starts the dual variables, e.g. from the
    solution at a smaller C.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if not C > 0:
        raise ValidationError(f"C must be positive, got {C}")
    Xa = np.ascontiguousarray(np.hstack([X, np.ones((X.shape[0], 1))]))
    alpha, w, epochs, viol, objs = _dualcd.solve(Xa, y, float(C), float(tol),
                                                 int(max_epochs), int(seed) & (2**64 - 1),
                                                 alpha0)
    if viol >= tol:
        log.warning("dual CD stopped after %d epochs with KKT violation %.3g", epochs, viol)
    return BinaryFit(w[:-1].copy(), float(w[-1]), alpha, int(epochs), float(viol), objs)


@dataclass(frozen=True, eq=False)
class LinearModel:
    classes: tuple[TaskClass, ...]
    weights: np.ndarray       # [n_classes x n_features], standardised space
    biases: np.ndarray        # [n_classes]
    electrodes_used: tuple[str, ...]
    C: float
    scaler_mean: np.ndarray
    scaler_scale: np.ndarray
    fits: tuple[BinaryFit, ...] = field(default=(), repr=False)

    @property
    def class_index(self) -> dict[TaskClass, int]:
        return {c: i for i, c in enumerate(self.classes)}

    def decision_function(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.weights.shape[1]:
            raise ValidationError(
                f"feature length {X.shape[1]} does not match the model's {self.weights.shape[1]}")
        Z = (X - self.scaler_mean) / self.scaler_scale
        return Z @ self.weights.T + self.biases

    def predict_indices(self, X) -> np.ndarray:
        # argmax returns the first maximum, i.e. the lowest class index on ties
        return np.argmax(self.decision_function(X), axis=1)


def _check_dataset(ds: Dataset):
    if len(ds) == 0:
        raise ValidationError("empty dataset")
    if not np.all(np.isfinite(ds.X)):
        raise ValidationError("dataset contains non-finite features")
    present = set(ds.labels)
    if len(present) < 2:
        raise ValidationError("training needs at least two classes")
    counts = {c: ds.labels.count(c) for c in present}
    small = [str(c) for c, n in counts.items() if n < 2]
    if small:
        raise ValidationError(f"classes with fewer than 2 examples: {small}")


def fit_scaler(X) -> tuple[np.ndarray, np.ndarray]:
    mean = X.mean(axis=0)
    scale = X.std(axis=0)
    scale[scale <= 0] = 1.0  # constant features pass through
    return mean, scale


def train_svm(dataset: Dataset, C: float, seed: int = 0,
              warm: Optional[LinearModel] = None) -> LinearModel:
    """Standardise, then fit one binary SVM per class against the rest.

    ``warm`` is a model fitted to the same rows (typically at a smaller C);
    its dual variables seed the solver, which only changes the run time.
    """
    _check_dataset(dataset)
    classes = tuple(dataset.classes)
    mean, scale = fit_scaler(dataset.X)
    Z = (dataset.X - mean) / scale
    y = dataset.y
    fits = []
    for k in range(len(classes)):
        target = np.where(y == k, 1.0, -1.0)
        alpha0 = warm.fits[k].alpha if warm is not None and warm.fits else None
        fits.append(fit_binary(Z, target, C, seed=seed + k, alpha0=alpha0))
    W = np.vstack([f.w for f in fits])
    b = np.array([f.bias for f in fits])
    return LinearModel(classes, W, b, dataset.electrodes, float(C), mean, scale, tuple(fits))


def predict(model: LinearModel, feature: FeatureVector) -> TaskClass:
    if tuple(feature.electrodes_used) != model.electrodes_used:
        raise ValidationError(
            f"feature electrodes {feature.electrodes_used} differ from the model's "
            f"{model.electrodes_used}")
    return model.classes[int(model.predict_indices(feature.values[np.newaxis])[0])]


def predict_dataset(model: LinearModel, dataset: Dataset) -> list[TaskClass]:
    """Predict every row, selecting the model's electrodes from ``dataset`` first."""
    if dataset.electrodes != model.electrodes_used:
        dataset = dataset.select(model.electrodes_used)
    return [model.classes[i] for i in model.predict_indices(dataset.X)]


# -- tuning -----------------------------------------------------------------

@dataclass(frozen=True)
class Candidate:
    electrodes: tuple[str, ...]
    C: float
    accuracy: float


@dataclass(frozen=True, eq=False)
class TuningResult:
    electrodes: tuple[str, ...]
    C: float
    validation_accuracy: float
    trail: tuple[Candidate, ...]
    split_seed: int
    model: Optional[LinearModel] = None


def stratified_halves(dataset: Dataset, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Seeded 50/50 split that keeps every class in both halves."""
    rng = np.random.default_rng(seed)
    first, second = [], []
    for cls in dataset.classes:
        idx = np.flatnonzero(dataset.y == dataset.class_index[cls])
        if len(idx) == 0:
            continue
        idx = rng.permutation(idx)
        half = len(idx) // 2
        if half == 0 or len(idx) - half == 0:
            raise ValidationError(f"class {cls} cannot populate both halves of the split")
        first.extend(idx[:half])
        second.extend(idx[half:])
    return np.sort(first), np.sort(second)


def _accuracy(model, ds):
    return float(np.mean(model.predict_indices(ds.X) == ds.y))


def tune_hyperparameters(train: Dataset, electrodes: Sequence[str] | None = None,
                         seed: int = 0, c_grid: Sequence[float] = C_GRID) -> TuningResult:
    """Greedy forward electrode selection jointly with a C grid search.

    Starting from no electrodes, each round tries adding every remaining
    electrode with every C, training on one half of ``train`` and scoring on
    the other. The best addition is kept while it strictly improves the
    validation accuracy. Ties prefer the smaller subset, then the smaller C,
    then the electrode listed first. The winning pair is refit on all of
    ``train``.
    """
    counts = {c: train.labels.count(c) for c in set(train.labels)}
    few = [str(c) for c, n in counts.items() if n < 4]
    if few:
        raise ValidationError(f"tuning needs at least 4 examples per class; short: {few}")
    pool = list(electrodes) if electrodes is not None else list(train.electrodes)
    c_grid = sorted(float(c) for c in c_grid)
    a_idx, b_idx = stratified_halves(train, seed)
    half_a, half_b = train.subset(a_idx), train.subset(b_idx)
    if set(half_a.labels) != set(half_b.labels):
        raise ValidationError("a class is missing from one half of the split")
    order = {e: i for i, e in enumerate(train.electrodes)}

    def key(cand):
        return (-cand.accuracy, len(cand.electrodes), cand.C,
                tuple(order[e] for e in cand.electrodes))

    trail: list[Candidate] = []
    selected: list[str] = []
    best: Optional[Candidate] = None
    while True:
        round_cands = []
        for e in pool:
            if e in selected:
                continue
            subset = tuple(sorted(selected + [e], key=order.__getitem__))
            a_sel, b_sel = half_a.select(subset), half_b.select(subset)
            model = None
            for C in c_grid:
                model = train_svm(a_sel, C, seed, warm=model)
                round_cands.append(Candidate(subset, C, _accuracy(model, b_sel)))
        if not round_cands:
            break
        trail.extend(round_cands)
        top = min(round_cands, key=key)
        if best is not None and top.accuracy <= best.accuracy:
            break
        best = top
        selected = list(top.electrodes)
        log.debug("tuning: %s C=%g acc=%.4f", ",".join(selected), top.C, top.accuracy)

    final = train_svm(train.select(best.electrodes), best.C, seed)
    return TuningResult(best.electrodes, best.C, best.accuracy, tuple(trail), seed, final)


# -- serialisation ----------------------------------------------------------

def model_to_dict(model: LinearModel) -> dict:
    return {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "classes": [str(c) for c in model.classes],
        "electrodes": list(model.electrodes_used),
        "C": model.C,
        "scaler": {"mean": model.scaler_mean.tolist(), "scale": model.scaler_scale.tolist()},
        "weights": model.weights.tolist(),
        "biases": model.biases.tolist(),
    }


def model_from_dict(doc: dict) -> LinearModel:
    if doc.get("format") != MODEL_FORMAT:
        raise ValidationError(f"not a model file (format={doc.get('format')!r})")
    major = str(doc.get("version", "")).split(".")[0]
    if major != MODEL_VERSION.split(".")[0]:
        raise ValidationError(f"unsupported model version {doc.get('version')!r}")
    W = np.array(doc["weights"], dtype=float)
    return LinearModel(
        tuple(TaskClass.parse(c) for c in doc["classes"]),
        W.reshape(len(doc["classes"]), -1),
        np.array(doc["biases"], dtype=float),
        tuple(doc["electrodes"]),
        float(doc["C"]),
        np.array(doc["scaler"]["mean"], dtype=float),
        np.array(doc["scaler"]["scale"], dtype=float),
    )


def dumps_model(model: LinearModel) -> str:
    return json.dumps(model_to_dict(model), indent=1) + "\n"


def loads_model(text: str) -> LinearModel:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"malformed model file: {exc}") from None
    return model_from_dict(doc)
