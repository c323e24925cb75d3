"""One-vs-Rest ROC curves with micro and macro averaging."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from tankloc.errors import EvaluationError

log = logging.getLogger(__name__)

MACRO_GRID_POINTS = 1001


@dataclass(frozen=True)
class RocCurve:
    fpr: np.ndarray
    tpr: np.ndarray
    thresholds: np.ndarray
    auc: float
    scope: str

    def __post_init__(self):
        if not 0.0 <= self.auc <= 1.0 + 1e-12:
            raise EvaluationError(f"AUC out of range: {self.auc}")


def binary_roc(scores: Sequence[float], positives: Sequence[bool], scope: str = "binary") -> RocCurve:
    """ROC curve for one positive-vs-rest split; AUC by trapezoidal rule.

    Points are ordered by decreasing threshold, one per distinct score,
    starting at the synthetic (0, 0) anchor with an infinite threshold.
    """
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(positives, dtype=bool)
    if s.shape != y.shape or s.ndim != 1 or s.size == 0:
        raise EvaluationError("scores and positives must be equal-length nonempty vectors")
    n_pos = int(y.sum())
    n_neg = y.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise EvaluationError(f"ROC undefined with {n_pos} positives and {n_neg} negatives")

    order = np.argsort(-s, kind="stable")
    s_sorted = s[order]
    y_sorted = y[order]
    # Collapse tied scores: one operating point per distinct threshold.
    distinct = np.nonzero(np.diff(s_sorted))[0]
    last = np.r_[distinct, y_sorted.size - 1]
    tp = np.cumsum(y_sorted)[last]
    fp = (last + 1) - tp

    fpr = np.r_[0.0, fp / n_neg]
    tpr = np.r_[0.0, tp / n_pos]
    thresholds = np.r_[math.inf, s_sorted[last]]
    return RocCurve(
        fpr=fpr,
        tpr=tpr,
        thresholds=thresholds,
        auc=float(np.trapezoid(tpr, fpr)),
        scope=scope,
    )


@dataclass(frozen=True)
class OvrRocResult:
    per_class: dict[str, RocCurve]
    micro: RocCurve
    macro: RocCurve
    skipped_classes: tuple[str, ...] = ()


def roc_ovr(scores: np.ndarray, true_labels: Sequence, classes: Sequence) -> OvrRocResult:
    """Per-class, micro-pooled, and macro-averaged One-vs-Rest curves.

    Macro averages per-class TPR on a fixed 1001-point FPR grid so the
    result does not depend on each class's particular threshold set.
    Classes with zero positives are excluded from per-class and macro
    curves with a warning.
    """
    s = np.asarray(scores, dtype=np.float64)
    if s.ndim != 2 or s.shape[1] != len(classes):
        raise EvaluationError(f"score matrix must be N x {len(classes)}, got {s.shape}")
    if s.shape[0] != len(true_labels):
        raise EvaluationError("one true label per score row required")
    if not np.all(np.isfinite(s)):
        raise EvaluationError("scores contain non-finite values")
    index = {c: i for i, c in enumerate(classes)}
    truth = np.asarray([index[t] for t in true_labels], dtype=np.int64)

    per_class: dict[str, RocCurve] = {}
    skipped: list[str] = []
    for ci, label in enumerate(classes):
        pos = truth == ci
        if not pos.any():
            log.warning("class %r has no positive samples; excluded from per-class/macro ROC", label)
            skipped.append(label)
            continue
        per_class[label] = binary_roc(s[:, ci], pos, scope="per-class")

    if not per_class:
        raise EvaluationError("no class has positive samples; ROC undefined")

    onehot = np.zeros_like(s, dtype=bool)
    onehot[np.arange(truth.size), truth] = True
    micro = binary_roc(s.ravel(), onehot.ravel(), scope="micro")

    grid = np.linspace(0.0, 1.0, MACRO_GRID_POINTS)
    mean_tpr = np.mean(
        [np.interp(grid, c.fpr, c.tpr) for c in per_class.values()], axis=0
    )
    macro = RocCurve(
        fpr=grid,
        tpr=mean_tpr,
        thresholds=np.full(grid.shape, np.nan),
        auc=float(np.trapezoid(mean_tpr, grid)),
        scope="macro",
    )
    return OvrRocResult(per_class=per_class, micro=micro, macro=macro, skipped_classes=tuple(skipped))
