"""Linear SVMs trained by dual coordinate descent, with standardization and JSON persistence.

Solves the L2-regularized L1-hinge problem in the dual (box constraints
0 <= alpha_i <= C), maintaining w = sum(alpha_i y_i x_i). The bias is handled
liblinear-style as an extra constant feature column. Training is exactly
reproducible: shuffling comes from numpy permutations seeded per problem and
the inner loop is pure float64 arithmetic.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .errors import InputError, ModelFormatError, ModelVersionError, TrainingError
from .poses import POSES

MODEL_FILE_VERSION = 1
STD_FLOOR = 1e-6

DEFAULT_C = 1.0
DEFAULT_TOL = 1e-4
DEFAULT_MAX_EPOCHS = 1000


@dataclass(frozen=True)
class Scaler:
    """Per-feature standardization fitted on training data only."""

    mean: np.ndarray
    std: np.ndarray

    @staticmethod
    def fit(x: np.ndarray) -> "Scaler":
        mean = x.mean(axis=0)
        std = np.maximum(x.std(axis=0), STD_FLOOR)
        return Scaler(mean=mean, std=std)

    def transform(self, x: np.ndarray) -> np.ndarray:
        return (np.asarray(x, dtype=float) - self.mean) / self.std


@dataclass
class LinearModel:
    """One-vs-rest (or single binary) linear classifier plus its scaler."""

    kind: str  # "binary" | "multiclass"
    classes: list
    weights: np.ndarray  # (n_classes_or_1, n_features)
    biases: np.ndarray
    scaler: Scaler
    C: float
    tol: float
    max_epochs: int
    seed: int
    metadata: dict = field(default_factory=dict)
    # Per-class training diagnostics, kept in memory only (not serialized).
    dual_coefs: list = field(default_factory=list, repr=False)
    objective_curves: list = field(default_factory=list, repr=False)

    @property
    def n_features(self) -> int:
        return self.weights.shape[1]


@njit(cache=True)
def _dual_cd(x, y, c, tol, max_epochs, perms):  # pragma: no cover - compiled
    n, d = x.shape
    w = np.zeros(d)
    alpha = np.zeros(n)
    qii = np.empty(n)
    for i in range(n):
        s = 0.0
        for j in range(d):
            s += x[i, j] * x[i, j]
        qii[i] = s
    obj = np.empty(max_epochs)
    epochs = 0
    last_update = np.inf
    for ep in range(max_epochs):
        max_update = 0.0
        for k in range(n):
            i = perms[ep, k]
            if qii[i] <= 0.0:
                continue
            g = 0.0
            for j in range(d):
                g += w[j] * x[i, j]
            g = g * y[i] - 1.0
            a = alpha[i]
            if a <= 0.0:
                pg = g if g < 0.0 else 0.0
            elif a >= c:
                pg = g if g > 0.0 else 0.0
            else:
                pg = g
            if pg != 0.0:
                na = a - g / qii[i]
                if na < 0.0:
                    na = 0.0
                elif na > c:
                    na = c
                alpha[i] = na
                diff = na - a
                if diff != 0.0:
                    dy = diff * y[i]
                    for j in range(d):
                        w[j] += dy * x[i, j]
                ad = abs(diff)
                if ad > max_update:
                    max_update = ad
        s_alpha = 0.0
        for i in range(n):
            s_alpha += alpha[i]
        wn = 0.0
        for j in range(d):
            wn += w[j] * w[j]
        obj[ep] = s_alpha - 0.5 * wn
        epochs = ep + 1
        last_update = max_update
        if max_update < tol:
            break
    return w, alpha, epochs, obj[:epochs], last_update


def _solve_binary(xs: np.ndarray, y_signed: np.ndarray, c: float, tol: float, max_epochs: int, rng):
    """Solve one binary problem on pre-scaled features (bias column appended)."""
    xb = np.ascontiguousarray(np.hstack([xs, np.ones((xs.shape[0], 1))]))
    perms = np.empty((max_epochs, xb.shape[0]), dtype=np.int64)
    for ep in range(max_epochs):
        perms[ep] = rng.permutation(xb.shape[0])
    w, alpha, epochs, obj, last_update = _dual_cd(
        xb, y_signed.astype(float), float(c), float(tol), int(max_epochs), perms
    )
    return w[:-1], float(w[-1]), alpha, epochs, obj, last_update < tol


def _validate_training_args(n_samples: int, c: float) -> None:
    if n_samples == 0:
        raise TrainingError("no training data")
    if not c > 0:
        raise TrainingError(f"C must be positive, got {c}")


def train_binary(
    data,
    C: float = DEFAULT_C,
    tol: float = DEFAULT_TOL,
    max_epochs: int = DEFAULT_MAX_EPOCHS,
    seed: int = 0,
) -> LinearModel:
    """Train the pose/no-pose segmenter style binary SVM.

    `data` is an iterable of (feature_vector, bool). Both labels must occur.
    """
    pairs = list(data)
    _validate_training_args(len(pairs), C)
    x = np.asarray([np.asarray(v, dtype=float) for v, _ in pairs])
    y = np.asarray([bool(lbl) for _, lbl in pairs])
    if y.all() or not y.any():
        raise TrainingError("binary training data contains a single class")

    scaler = Scaler.fit(x)
    xs = scaler.transform(x)
    rng = np.random.default_rng([int(seed)])
    w, b, alpha, epochs, obj, conv = _solve_binary(xs, np.where(y, 1.0, -1.0), C, tol, max_epochs, rng)
    return LinearModel(
        kind="binary",
        classes=[False, True],
        weights=w[None, :],
        biases=np.array([b]),
        scaler=scaler,
        C=C,
        tol=tol,
        max_epochs=max_epochs,
        seed=seed,
        metadata={"feature_dim": x.shape[1], "epochs_run": [int(epochs)], "converged": [bool(conv)]},
        dual_coefs=[alpha],
        objective_curves=[obj],
    )


def canonical_class_order(labels) -> list:
    """Pose labels in their canonical order, any other labels sorted after."""
    present = set(labels)
    ordered = [p for p in POSES if p in present]
    extras = sorted(str(l) for l in present if l not in POSES)
    return ordered + extras


def train_multiclass(
    data,
    C: float = DEFAULT_C,
    tol: float = DEFAULT_TOL,
    max_epochs: int = DEFAULT_MAX_EPOCHS,
    seed: int = 0,
    classes: list | None = None,
) -> LinearModel:
    """One-vs-rest multiclass SVM over a shared scaler.

    If `classes` is given explicitly, every listed class must have samples.
    """
    pairs = list(data)
    _validate_training_args(len(pairs), C)
    x = np.asarray([np.asarray(v, dtype=float) for v, _ in pairs])
    y = [lbl for _, lbl in pairs]
    counts: dict = {}
    for lbl in y:
        counts[lbl] = counts.get(lbl, 0) + 1
    if classes is None:
        classes = canonical_class_order(counts.keys())
    else:
        classes = list(classes)
        for cls in classes:
            if counts.get(cls, 0) == 0:
                raise TrainingError(f"class {cls!r} has no training samples")
    if len(classes) < 2:
        raise TrainingError("multiclass training needs at least 2 classes")

    scaler = Scaler.fit(x)
    xs = scaler.transform(x)
    y_arr = np.asarray(y, dtype=object)

    weights = np.empty((len(classes), x.shape[1]))
    biases = np.empty(len(classes))
    alphas, curves, epochs_run, convs = [], [], [], []
    for ci, cls in enumerate(classes):
        rng = np.random.default_rng([int(seed), ci])
        signed = np.where(y_arr == cls, 1.0, -1.0)
        w, b, alpha, epochs, obj, conv = _solve_binary(xs, signed, C, tol, max_epochs, rng)
        weights[ci] = w
        biases[ci] = b
        alphas.append(alpha)
        curves.append(obj)
        epochs_run.append(int(epochs))
        convs.append(bool(conv))

    return LinearModel(
        kind="multiclass",
        classes=classes,
        weights=weights,
        biases=biases,
        scaler=scaler,
        C=C,
        tol=tol,
        max_epochs=max_epochs,
        seed=seed,
        metadata={"feature_dim": x.shape[1], "epochs_run": epochs_run, "converged": convs},
        dual_coefs=alphas,
        objective_curves=curves,
    )


def decision_scores(model: LinearModel, x: np.ndarray) -> np.ndarray:
    """Raw affine responses on scaled input; rows of x are samples."""
    xs = model.scaler.transform(np.atleast_2d(x))
    return xs @ model.weights.T + model.biases


def predict(model: LinearModel, x) -> tuple:
    """Classify one feature vector; returns (label, scores).

    Binary decisions use the sign of the single score (0 counts as positive);
    multiclass takes the argmax with ties falling to the lowest class index.
    """
    vec = np.asarray(x, dtype=float)
    if vec.ndim != 1 or vec.shape[0] != model.n_features:
        raise InputError(f"expected {model.n_features} features, got shape {vec.shape}")
    scores = decision_scores(model, vec)[0]
    if model.kind == "binary":
        return model.classes[1] if scores[0] >= 0.0 else model.classes[0], scores
    return model.classes[int(np.argmax(scores))], scores


def predict_batch(model: LinearModel, x: np.ndarray) -> list:
    """Vectorized `predict` labels for rows of x."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if x.shape[1] != model.n_features:
        raise InputError(f"expected {model.n_features} features, got {x.shape[1]}")
    scores = decision_scores(model, x)
    if model.kind == "binary":
        return [model.classes[1] if s >= 0.0 else model.classes[0] for s in scores[:, 0]]
    return [model.classes[int(i)] for i in np.argmax(scores, axis=1)]


def save_model(model: LinearModel, path) -> None:
    doc = {
        "version": MODEL_FILE_VERSION,
        "kind": model.kind,
        "classes": model.classes,
        "weights": model.weights.tolist(),
        "biases": model.biases.tolist(),
        "scaler": {"mean": model.scaler.mean.tolist(), "std": model.scaler.std.tolist()},
        "hyperparameters": {"C": model.C, "tol": model.tol, "max_epochs": model.max_epochs, "seed": model.seed},
        "metadata": model.metadata,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)
        fh.write("\n")


def load_model(path) -> LinearModel:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ModelFormatError(f"malformed model file {path}: {exc}") from exc
    if not isinstance(doc, dict) or "version" not in doc:
        raise ModelFormatError(f"model file {path} missing version field")
    if doc["version"] != MODEL_FILE_VERSION:
        raise ModelVersionError(f"unsupported model file version {doc['version']!r} (expected {MODEL_FILE_VERSION})")
    try:
        hyper = doc["hyperparameters"]
        model = LinearModel(
            kind=doc["kind"],
            classes=list(doc["classes"]),
            weights=np.asarray(doc["weights"], dtype=float),
            biases=np.asarray(doc["biases"], dtype=float),
            scaler=Scaler(
                mean=np.asarray(doc["scaler"]["mean"], dtype=float),
                std=np.asarray(doc["scaler"]["std"], dtype=float),
            ),
            C=float(hyper["C"]),
            tol=float(hyper["tol"]),
            max_epochs=int(hyper["max_epochs"]),
            seed=int(hyper["seed"]),
            metadata=dict(doc.get("metadata", {})),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"model file {path} is incomplete: {exc}") from exc
    if model.kind not in ("binary", "multiclass"):
        raise ModelFormatError(f"unknown model kind {model.kind!r}")
    if model.weights.ndim != 2 or model.weights.shape[0] != len(model.biases):
        raise ModelFormatError("weights/biases shape mismatch")
    return model
