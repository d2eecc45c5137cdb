"""Stratified 70:30 split and macro-averaged classification metrics."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import ClassTooSmall, EmptyDataset, LabelOutOfRange
from ..recognizer import predict_logits

TEST_FRACTION = 0.3


def split_70_30(labels, seed: int = 42, test_fraction: float = TEST_FRACTION):
    """Per-class shuffled split; returns sorted (train_idx, test_idx).

    Each class contributes round(0.3 * n) test items (half rounds up), at least one.
    """
    labels = np.asarray(labels)
    rng = np.random.default_rng(seed)
    train, test = [], []
    for cls in np.unique(labels):
        idx = np.flatnonzero(labels == cls)
        if idx.size < 2:
            raise ClassTooSmall(f"class {cls} has {idx.size} instance(s); need at least 2")
        n_test = max(1, math.floor(test_fraction * idx.size + 0.5))
        n_test = min(n_test, idx.size - 1)
        perm = rng.permutation(idx)
        test.extend(perm[:n_test])
        train.extend(perm[n_test:])
    return np.sort(np.asarray(train, dtype=np.int64)), np.sort(np.asarray(test, dtype=np.int64))


@dataclass
class EvalReport:
    accuracy: float
    precision: float
    recall: float
    f1: float
    confusion: np.ndarray  # rows: true class, columns: predicted class
    per_class_precision: np.ndarray
    per_class_recall: np.ndarray
    class_names: list

    def to_dict(self) -> dict:
        return {
            "averaging": "macro",
            "accuracy": self.accuracy,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "class_names": list(self.class_names),
            "confusion": self.confusion.tolist(),
            "per_class": {
                name: {"precision": float(p), "recall": float(r), "support": int(s)}
                for name, p, r, s in zip(
                    self.class_names, self.per_class_precision, self.per_class_recall, self.confusion.sum(axis=1)
                )
            },
        }


def confusion_matrix(y_true, y_pred, k: int) -> np.ndarray:
    y_true = np.asarray(y_true, dtype=np.int64)
    y_pred = np.asarray(y_pred, dtype=np.int64)
    for name, y in (("true", y_true), ("predicted", y_pred)):
        if y.size and (y.min() < 0 or y.max() >= k):
            raise LabelOutOfRange(f"{name} label outside [0, {k})")
    cm = np.zeros((k, k), dtype=np.int64)
    np.add.at(cm, (y_true, y_pred), 1)
    return cm


def report_from_predictions(y_true, y_pred, class_names) -> EvalReport:
    if len(y_true) == 0:
        raise EmptyDataset("empty test set")
    k = len(class_names)
    cm = confusion_matrix(y_true, y_pred, k)
    tp = np.diag(cm).astype(float)
    predicted = cm.sum(axis=0)
    actual = cm.sum(axis=1)
    prec = np.divide(tp, predicted, out=np.zeros(k), where=predicted > 0)
    rec = np.divide(tp, actual, out=np.zeros(k), where=actual > 0)
    # macro averages over the classes present in the test set
    present = actual > 0
    p = float(prec[present].mean())
    r = float(rec[present].mean())
    f1 = 2 * p * r / (p + r) if p + r > 0 else 0.0
    return EvalReport(float(tp.sum() / cm.sum()), p, r, f1, cm, prec, rec, list(class_names))


def evaluate(model, images, labels, class_names, classifier=None) -> EvalReport:
    """Classify every image and summarise. ``classifier`` overrides the model (stubs, baselines)."""
    labels = np.asarray(labels, dtype=np.int64)
    if labels.size == 0:
        raise EmptyDataset("empty test set")
    k = len(class_names)
    if model is not None and model.config.num_classes != k:
        raise LabelOutOfRange(f"model has {model.config.num_classes} classes, dataset has {k}")
    if labels.min() < 0 or labels.max() >= k:
        raise LabelOutOfRange(f"labels must lie in [0, {k})")
    if classifier is None:
        pred = predict_logits(model, images).argmax(axis=1)
    else:
        pred = np.asarray([classifier(img) for img in images], dtype=np.int64)
    return report_from_predictions(labels, pred, class_names)
