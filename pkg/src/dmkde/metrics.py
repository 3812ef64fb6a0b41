"""Binary classification metrics with anomaly (label 1) as positive class.

F1 follows the zero-division convention F1 = 0: a class with no true and
no predicted members scores 0 and still contributes its (zero) support
weight to the weighted average.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError


@dataclass
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


def _check_labels(y_true, y_pred):
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    if y_true.ndim != 1 or y_true.shape != y_pred.shape:
        raise InvalidArgumentError("label vectors must be 1-D and of equal length")
    if y_true.size == 0:
        raise InvalidArgumentError("label vectors must be nonempty")
    for name, v in (("y_true", y_true), ("y_pred", y_pred)):
        if not np.all((v == 0) | (v == 1)):
            raise InvalidArgumentError(f"{name} contains entries outside {{0, 1}}")
    return y_true.astype(np.int64), y_pred.astype(np.int64)


def confusion(y_true, y_pred) -> ConfusionCounts:
    y_true, y_pred = _check_labels(y_true, y_pred)
    return ConfusionCounts(
        tp=int(np.sum((y_true == 1) & (y_pred == 1))),
        fp=int(np.sum((y_true == 0) & (y_pred == 1))),
        tn=int(np.sum((y_true == 0) & (y_pred == 0))),
        fn=int(np.sum((y_true == 1) & (y_pred == 0))),
    )


def _f1(tp: int, fp: int, fn: int) -> float:
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def f1_anomaly(y_true, y_pred) -> float:
    """F1 of the anomaly class (one-vs-rest with label 1 positive)."""
    c = confusion(y_true, y_pred)
    return _f1(c.tp, c.fp, c.fn)


def f1_weighted(y_true, y_pred) -> float:
    """Support-weighted mean of the per-class F1 scores."""
    c = confusion(y_true, y_pred)
    # Class 0 one-vs-rest swaps the roles of the confusion cells.
    f1_class1 = _f1(c.tp, c.fp, c.fn)
    f1_class0 = _f1(c.tn, c.fn, c.fp)
    support1 = c.tp + c.fn
    support0 = c.tn + c.fp
    return (support0 * f1_class0 + support1 * f1_class1) / c.total


def accuracy(y_true, y_pred) -> float:
    c = confusion(y_true, y_pred)
    return (c.tp + c.tn) / c.total
