"""Balanced accuracy and two independent ROC-AUC estimators."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from treesmooth.errors import InvalidInputError, UndefinedMetricError


@dataclass(frozen=True)
class ConfusionMatrix:
    """Per-class hits (tp) and misses (fn); class i's recall is tp_i / (tp_i + fn_i)."""

    tp0: int
    fn0: int
    tp1: int
    fn1: int

    def __post_init__(self):
        if min(self.tp0, self.fn0, self.tp1, self.fn1) < 0:
            raise InvalidInputError("confusion counts must be non-negative")

    @classmethod
    def from_labels(cls, y_true: Sequence[int], y_pred: Sequence[int]) -> "ConfusionMatrix":
        y_true = np.asarray(y_true)
        y_pred = np.asarray(y_pred)
        if y_true.shape != y_pred.shape:
            raise InvalidInputError("y_true and y_pred differ in length")
        is0, is1 = y_true == 0, y_true == 1
        return cls(
            tp0=int(np.sum(is0 & (y_pred == 0))),
            fn0=int(np.sum(is0 & (y_pred != 0))),
            tp1=int(np.sum(is1 & (y_pred == 1))),
            fn1=int(np.sum(is1 & (y_pred != 1))),
        )


@dataclass(frozen=True, eq=False)
class ScoredPredictions:
    scores: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        scores = np.asarray(self.scores, dtype=np.float64)
        labels = np.asarray(self.labels)
        if scores.shape != labels.shape or scores.ndim != 1:
            raise InvalidInputError("scores and labels must be 1-D and equally long")
        if not np.all((scores >= 0.0) & (scores <= 1.0)):
            raise InvalidInputError("scores must lie in [0, 1]")
        if not np.isin(labels, (0, 1)).all():
            raise InvalidInputError("labels must be 0 or 1")
        object.__setattr__(self, "scores", scores)
        object.__setattr__(self, "labels", labels.astype(np.int64))

    def class_sizes(self) -> tuple[int, int]:
        n1 = int(self.labels.sum())
        n0 = len(self.labels) - n1
        if n0 == 0 or n1 == 0:
            raise UndefinedMetricError("ROC-AUC needs both classes among the labels")
        return n0, n1


def balanced_accuracy(cm: ConfusionMatrix) -> float:
    """Mean of the two per-class recalls."""
    if cm.tp0 + cm.fn0 == 0 or cm.tp1 + cm.fn1 == 0:
        raise UndefinedMetricError("balanced accuracy needs at least one sample of each class")
    return 0.5 * (cm.tp0 / (cm.tp0 + cm.fn0) + cm.tp1 / (cm.tp1 + cm.fn1))


def balanced_accuracy_from_labels(y_true, y_pred) -> float:
    return balanced_accuracy(ConfusionMatrix.from_labels(y_true, y_pred))


def roc_auc_pairs(sp: ScoredPredictions) -> float:
    """Mann-Whitney estimate: wins plus half the ties over all positive/negative pairs."""
    n0, n1 = sp.class_sizes()
    pos = sp.scores[sp.labels == 1]
    neg = sp.scores[sp.labels == 0]
    wins = int(np.count_nonzero(pos[:, None] > neg[None, :]))
    ties = int(np.count_nonzero(pos[:, None] == neg[None, :]))
    return (2 * wins + ties) / (2 * n0 * n1)


def roc_curve(sp: ScoredPredictions) -> tuple[np.ndarray, np.ndarray]:
    """(FPR, TPR) points from (0, 0) to (1, 1), one step per distinct score."""
    n0, n1 = sp.class_sizes()
    distinct, inverse = np.unique(sp.scores, return_inverse=True)
    pos = np.bincount(inverse, weights=sp.labels, minlength=len(distinct))[::-1]
    tot = np.bincount(inverse, minlength=len(distinct))[::-1]
    tp = np.concatenate([[0], np.cumsum(pos)])
    fp = np.concatenate([[0], np.cumsum(tot - pos)])
    return fp / n0, tp / n1


def roc_auc_trapezoid(sp: ScoredPredictions) -> float:
    """Trapezoid area under the ROC curve with tied scores as one threshold step.

    Accumulated in integer counts so it agrees with ``roc_auc_pairs``.
    """
    n0, n1 = sp.class_sizes()
    distinct, inverse = np.unique(sp.scores, return_inverse=True)
    pos = np.bincount(inverse, weights=sp.labels, minlength=len(distinct)).astype(np.int64)[::-1]
    tot = np.bincount(inverse, minlength=len(distinct)).astype(np.int64)[::-1]
    tp = np.concatenate([[0], np.cumsum(pos)])
    fp = np.concatenate([[0], np.cumsum(tot - pos)])
    doubled_area = int(np.sum(np.diff(fp) * (tp[1:] + tp[:-1])))
    return doubled_area / (2 * n0 * n1)


def roc_auc(scores, labels) -> float:
    return roc_auc_trapezoid(ScoredPredictions(np.asarray(scores), np.asarray(labels)))
