"""Influencer/non-influencer classifiers and their evaluation.

Models are deliberately small and reproducible: full-batch gradient
descent logistic regression plus two baselines (Gaussian naive Bayes and
a single-feature decision stump). Evaluation reports accuracy,
classification error, the confusion matrix, the ROC curve and its
trapezoidal area.
"""

from __future__ import annotations

import csv
import json
import logging
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.special import expit

from .features import FeatureVector

logger = logging.getLogger(__name__)

INFLUENCER = "influencer"
NON_INFLUENCER = "non_influencer"
LABELS = (INFLUENCER, NON_INFLUENCER)

MODEL_KINDS = ("logistic", "naive_bayes", "decision_stump")
MODEL_VERSION = 1
_VAR_FLOOR = 1e-9


class TrainingDivergedError(RuntimeError):
    """Training produced a non-finite loss; the learning rate is too high."""


@dataclass(frozen=True, slots=True)
class LabeledExample:
    vector: FeatureVector
    label: str

    def __post_init__(self) -> None:
        if self.label not in LABELS:
            raise ValueError(f"label must be one of {LABELS}, got {self.label!r}")

    @property
    def target(self) -> int:
        return 1 if self.label == INFLUENCER else 0


@dataclass(frozen=True)
class Normalization:
    """Per-feature min-max ranges fitted on the training split."""

    mins: tuple[float, ...]
    maxs: tuple[float, ...]

    def __len__(self) -> int:
        return len(self.mins)


@dataclass(frozen=True)
class Model:
    kind: str
    normalization: Normalization
    params: dict
    config: dict

    def to_json(self) -> str:
        payload = {
            "model_version": MODEL_VERSION,
            "kind": self.kind,
            "normalization": {"mins": list(self.normalization.mins), "maxs": list(self.normalization.maxs)},
            "params": self.params,
            "config": self.config,
        }
        return json.dumps(payload, sort_keys=True, indent=1)

    @classmethod
    def from_json(cls, text: str) -> "Model":
        payload = json.loads(text)
        if payload.get("model_version") != MODEL_VERSION:
            raise ValueError(f"unsupported model_version: {payload.get('model_version')}")
        norm = Normalization(
            mins=tuple(payload["normalization"]["mins"]),
            maxs=tuple(payload["normalization"]["maxs"]),
        )
        return cls(kind=payload["kind"], normalization=norm, params=payload["params"], config=payload["config"])


@dataclass(frozen=True)
class EvalReport:
    accuracy: float
    classification_error: float
    tp: int
    fp: int
    tn: int
    fn: int
    roc_points: tuple[tuple[float, float], ...]
    auc: float

    def to_json(self) -> str:
        payload = {
            "accuracy": self.accuracy,
            "classification_error": self.classification_error,
            "confusion": {"tp": self.tp, "fp": self.fp, "tn": self.tn, "fn": self.fn},
            "roc_points": [list(p) for p in self.roc_points],
            "auc": self.auc,
        }
        return json.dumps(payload, sort_keys=True, indent=1)


def split(
    examples: Sequence[LabeledExample], test_fraction: float, seed: int
) -> tuple[list[LabeledExample], list[LabeledExample]]:
    """Seeded, label-stratified split into disjoint (train, test) lists.

    Per-class test counts are floor(n_class * fraction), topped up by
    largest fractional remainder until the overall rounded target is
    met; every class keeps at least one training example.
    """
    if not 0.0 < test_fraction < 1.0:
        raise ValueError(f"test_fraction must be in (0, 1), got {test_fraction}")
    by_label: dict[str, list[LabeledExample]] = {}
    for example in examples:
        by_label.setdefault(example.label, []).append(example)
    if len(by_label) < 2:
        raise ValueError("need at least one example of each class")

    rng = random.Random(seed)
    target = int(len(examples) * test_fraction + 0.5)
    takes: dict[str, int] = {}
    remainders: list[tuple[float, str]] = []
    for label in sorted(by_label):
        exact = len(by_label[label]) * test_fraction
        takes[label] = int(exact)
        remainders.append((exact - int(exact), label))
    shortfall = target - sum(takes.values())
    for _, label in sorted(remainders, key=lambda item: (-item[0], item[1])):
        if shortfall <= 0:
            break
        if takes[label] < len(by_label[label]) - 1:
            takes[label] += 1
            shortfall -= 1

    train: list[LabeledExample] = []
    test: list[LabeledExample] = []
    for label in sorted(by_label):
        group = list(by_label[label])
        rng.shuffle(group)
        take = min(takes[label], len(group) - 1)
        test.extend(group[:take])
        train.extend(group[take:])
    return train, test


def normalize_fit(rows: Sequence[Sequence[float]]) -> Normalization:
    matrix = np.asarray(rows, dtype=float)
    if matrix.size == 0:
        raise ValueError("cannot fit normalization on an empty training set")
    return Normalization(
        mins=tuple(float(v) for v in matrix.min(axis=0)),
        maxs=tuple(float(v) for v in matrix.max(axis=0)),
    )


def normalize_apply(normalization: Normalization, values: Sequence[float]) -> np.ndarray:
    """Min-max scale to [0, 1]; constant features map to 0.5, outliers clamp."""
    x = np.asarray(values, dtype=float)
    if x.shape[-1] != len(normalization):
        raise ValueError(
            f"dimension mismatch: got {x.shape[-1]} features, expected {len(normalization)}"
        )
    mins = np.asarray(normalization.mins)
    spans = np.asarray(normalization.maxs) - mins
    constant = spans == 0
    safe = np.where(constant, 1.0, spans)
    scaled = np.clip((x - mins) / safe, 0.0, 1.0)
    return np.where(constant, 0.5, scaled)


def _design_matrix(examples: Sequence[LabeledExample]) -> tuple[np.ndarray, np.ndarray]:
    rows = np.array([ex.vector.values for ex in examples], dtype=float)
    targets = np.array([ex.target for ex in examples], dtype=float)
    return rows, targets


def logistic_loss(theta: np.ndarray, x: np.ndarray, y: np.ndarray, l2: float) -> float:
    """L2-regularized mean cross-entropy; theta is [weights..., bias]."""
    w, b = theta[:-1], theta[-1]
    # Overflow here is the divergence signal the caller checks for.
    with np.errstate(over="ignore"):
        z = x @ w + b
        ce = float(np.mean(np.logaddexp(0.0, z) - y * z))
        return ce + 0.5 * l2 * float(w @ w)


def logistic_gradient(theta: np.ndarray, x: np.ndarray, y: np.ndarray, l2: float) -> np.ndarray:
    w, b = theta[:-1], theta[-1]
    p = expit(x @ w + b)
    residual = p - y
    grad_w = x.T @ residual / len(y) + l2 * w
    grad_b = float(np.mean(residual))
    return np.concatenate([grad_w, [grad_b]])


def train_logistic_with_history(
    train: Sequence[LabeledExample],
    lr: float = 0.5,
    epochs: int = 2000,
    l2: float = 1e-4,
    seed: int = 0,
) -> tuple[Model, list[float]]:
    """Full-batch gradient descent from zero weights, returning the loss per epoch."""
    if lr <= 0:
        raise ValueError(f"learning rate must be positive, got {lr}")
    raw, y = _design_matrix(train)
    normalization = normalize_fit(raw)
    x = normalize_apply(normalization, raw)

    theta = np.zeros(x.shape[1] + 1)
    losses = []
    for _ in range(epochs):
        theta = theta - lr * logistic_gradient(theta, x, y, l2)
        loss = logistic_loss(theta, x, y, l2)
        if not np.isfinite(loss):
            raise TrainingDivergedError(f"non-finite training loss at lr={lr}")
        losses.append(loss)
    model = Model(
        kind="logistic",
        normalization=normalization,
        params={"weights": [float(v) for v in theta[:-1]], "bias": float(theta[-1])},
        config={"lr": lr, "epochs": epochs, "l2": l2, "seed": seed,
                "final_loss": losses[-1] if losses else None},
    )
    return model, losses


def train_logistic(
    train: Sequence[LabeledExample],
    lr: float = 0.5,
    epochs: int = 2000,
    l2: float = 1e-4,
    seed: int = 0,
) -> Model:
    model, _ = train_logistic_with_history(train, lr, epochs, l2, seed)
    return model


def _train_naive_bayes(x: np.ndarray, y: np.ndarray) -> dict:
    pos, neg = x[y == 1], x[y == 0]
    prior_pos = float(len(pos)) / len(y)

    def stats(rows: np.ndarray) -> tuple[list[float], list[float]]:
        if len(rows) == 0:
            return [0.5] * x.shape[1], [_VAR_FLOOR] * x.shape[1]
        means = rows.mean(axis=0)
        variances = np.maximum(rows.var(axis=0), _VAR_FLOOR)
        return [float(v) for v in means], [float(v) for v in variances]

    means_pos, vars_pos = stats(pos)
    means_neg, vars_neg = stats(neg)
    return {
        "prior_pos": prior_pos,
        "means_pos": means_pos, "vars_pos": vars_pos,
        "means_neg": means_neg, "vars_neg": vars_neg,
    }


def _train_stump(x: np.ndarray, y: np.ndarray) -> dict:
    """Best single-feature threshold by training accuracy.

    Prediction is positive on a side when its empirical influencer share
    is >= 0.5; ties between stumps go to the lowest feature index, then
    the lowest threshold.
    """
    n = len(y)
    total_pos = float(y.sum())
    best = None  # (-accuracy, feature, threshold, prob_above, prob_below)
    for feature in range(x.shape[1]):
        order = np.argsort(x[:, feature], kind="stable")
        values = x[order, feature]
        pos_sorted = y[order]
        pos_cumulative = np.concatenate([[0.0], np.cumsum(pos_sorted)])
        # Threshold candidates: each unique value; side above is x >= t.
        unique_starts = np.concatenate([[0], np.nonzero(np.diff(values))[0] + 1])
        for start in unique_starts:
            threshold = float(values[start])
            below = int(start)
            pos_below = float(pos_cumulative[start])
            above = n - below
            pos_above = total_pos - pos_below
            correct = max(pos_below, below - pos_below) + max(pos_above, above - pos_above)
            accuracy = correct / n
            prob_above = pos_above / above if above else total_pos / n
            prob_below = pos_below / below if below else total_pos / n
            candidate = (-accuracy, feature, threshold, prob_above, prob_below)
            if best is None or candidate[:3] < best[:3]:
                best = candidate
    assert best is not None
    _, feature, threshold, prob_above, prob_below = best
    return {
        "feature": int(feature),
        "threshold": threshold,
        "prob_above": float(prob_above),
        "prob_below": float(prob_below),
    }


def train_baseline(
    train: Sequence[LabeledExample], kind: str, seed: int = 0
) -> Model:
    """Train a Gaussian naive Bayes or decision stump baseline."""
    if kind not in ("naive_bayes", "decision_stump"):
        raise ValueError(f"unknown baseline kind: {kind!r}")
    raw, y = _design_matrix(train)
    normalization = normalize_fit(raw)
    x = normalize_apply(normalization, raw)
    params = _train_naive_bayes(x, y) if kind == "naive_bayes" else _train_stump(x, y)
    return Model(kind=kind, normalization=normalization, params=params,
                 config={"seed": seed})


def predict(model: Model, vector: FeatureVector | Sequence[float]) -> float:
    """Probability that the example is an influencer; threshold at 0.5."""
    values = vector.values if isinstance(vector, FeatureVector) else vector
    x = normalize_apply(model.normalization, values)
    if model.kind == "logistic":
        w = np.asarray(model.params["weights"])
        if len(w) != len(x):
            raise ValueError(f"dimension mismatch: model has {len(w)} weights, got {len(x)} features")
        return float(expit(x @ w + model.params["bias"]))
    if model.kind == "naive_bayes":
        p = model.params
        log_odds = np.log(p["prior_pos"] + 1e-300) - np.log(1 - p["prior_pos"] + 1e-300)
        for i, value in enumerate(x):
            log_odds += _gaussian_log_pdf(value, p["means_pos"][i], p["vars_pos"][i])
            log_odds -= _gaussian_log_pdf(value, p["means_neg"][i], p["vars_neg"][i])
        return float(expit(log_odds))
    if model.kind == "decision_stump":
        p = model.params
        side = x[p["feature"]] >= p["threshold"]
        return float(p["prob_above"] if side else p["prob_below"])
    raise ValueError(f"unknown model kind: {model.kind!r}")


def _gaussian_log_pdf(value: float, mean: float, variance: float) -> float:
    return -0.5 * (np.log(2 * np.pi * variance) + (value - mean) ** 2 / variance)


def roc_curve(scores: Sequence[float], targets: Sequence[int]) -> tuple[tuple[float, float], ...]:
    """ROC points swept over the sorted unique score thresholds.

    Tied scores move together, so the trapezoidal area equals the
    pairwise ordering statistic with half credit for ties.
    """
    y = np.asarray(targets)
    s = np.asarray(scores, dtype=float)
    n_pos = int(y.sum())
    n_neg = len(y) - n_pos
    if n_pos == 0 or n_neg == 0:
        logger.warning("ROC undefined for single-class data; using the chance diagonal")
        return ((0.0, 0.0), (1.0, 1.0))
    order = np.argsort(-s, kind="stable")
    s_sorted = s[order]
    y_sorted = y[order]
    points = [(0.0, 0.0)]
    tp = fp = 0
    i = 0
    while i < len(s_sorted):
        j = i
        while j < len(s_sorted) and s_sorted[j] == s_sorted[i]:
            tp += int(y_sorted[j])
            fp += 1 - int(y_sorted[j])
            j += 1
        points.append((fp / n_neg, tp / n_pos))
        i = j
    if points[-1] != (1.0, 1.0):
        points.append((1.0, 1.0))
    return tuple(points)


def auc_trapezoid(points: Sequence[tuple[float, float]]) -> float:
    area = 0.0
    for (x0, y0), (x1, y1) in zip(points, points[1:]):
        area += (x1 - x0) * (y0 + y1) / 2.0
    return area


def evaluate(model: Model, test: Sequence[LabeledExample]) -> EvalReport:
    """Threshold-0.5 metrics plus the full ROC curve and its area."""
    if not test:
        raise ValueError("test set is empty")
    scores = [predict(model, ex.vector) for ex in test]
    targets = [ex.target for ex in test]
    tp = fp = tn = fn = 0
    for score, target in zip(scores, targets):
        predicted = score >= 0.5
        if predicted and target:
            tp += 1
        elif predicted:
            fp += 1
        elif target:
            fn += 1
        else:
            tn += 1
    accuracy = (tp + tn) / len(test)
    points = roc_curve(scores, targets)
    return EvalReport(
        accuracy=accuracy,
        classification_error=1.0 - accuracy,
        tp=tp, fp=fp, tn=tn, fn=fn,
        roc_points=points,
        auc=auc_trapezoid(points),
    )


def load_labels_csv(source) -> dict[tuple[str, str], str]:
    """Read a ``user_id,domain,label`` CSV into a lookup table."""
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8", newline="") as handle:
            return load_labels_csv(handle)
    reader = csv.reader(source)
    header = next(reader, None)
    if header != ["user_id", "domain", "label"]:
        raise ValueError(f"unexpected labels header: {header}")
    labels: dict[tuple[str, str], str] = {}
    for user_id, domain, label in reader:
        if label not in LABELS:
            raise ValueError(f"unknown label {label!r} for ({user_id}, {domain})")
        labels[(user_id, domain)] = label
    return labels


def label_examples(
    vectors: Iterable[FeatureVector], labels: Mapping[tuple[str, str], str]
) -> list[LabeledExample]:
    """Attach labels to vectors; cells without an influencer row are negative."""
    return [
        LabeledExample(
            vector=v,
            label=INFLUENCER if labels.get((v.user_id, v.domain)) == INFLUENCER else NON_INFLUENCER,
        )
        for v in vectors
    ]


def write_roc_csv(points: Sequence[tuple[float, float]], target) -> None:
    def _write(handle) -> None:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["fpr", "tpr"])
        for fpr, tpr in points:
            writer.writerow([f"{fpr:.12g}", f"{tpr:.12g}"])

    if isinstance(target, (str, Path)):
        with open(target, "w", encoding="utf-8", newline="") as handle:
            _write(handle)
    else:
        _write(target)
