"""Confusion matrices, precision/recall/f-score, and fold summaries."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from tankloc.errors import EvaluationError


def confusion_matrix(
    true_labels: Sequence, predicted_labels: Sequence, classes: Sequence
) -> np.ndarray:
    """CxC count matrix; rows are true classes, columns predictions."""
    if len(true_labels) != len(predicted_labels):
        raise EvaluationError(
            f"label sequences differ in length: {len(true_labels)} vs {len(predicted_labels)}"
        )
    index = {c: i for i, c in enumerate(classes)}
    out = np.zeros((len(classes), len(classes)), dtype=np.int64)
    for t, p in zip(true_labels, predicted_labels):
        if t not in index:
            raise EvaluationError(f"unknown true label: {t!r}")
        if p not in index:
            raise EvaluationError(f"unknown predicted label: {p!r}")
        out[index[t], index[p]] += 1
    return out


@dataclass(frozen=True)
class FoldMetrics:
    confusion: np.ndarray
    per_class_precision: np.ndarray
    per_class_recall: np.ndarray
    per_class_fscore: np.ndarray
    macro_precision: float
    macro_recall: float
    macro_fscore: float
    # (class index, metric name) pairs where 0/0 was defined as 0.
    flagged: tuple[tuple[int, str], ...] = field(default=())


def macro_prf(confusion: np.ndarray) -> FoldMetrics:
    """Per-class and unweighted-mean precision/recall/f-score.

    0/0 ratios (empty predicted column, empty true row, or P=R=0) are
    defined as 0 and flagged.
    """
    conf = np.asarray(confusion)
    if conf.ndim != 2 or conf.shape[0] != conf.shape[1]:
        raise EvaluationError(f"confusion matrix must be square, got {conf.shape}")
    if np.any(conf < 0) or not np.issubdtype(conf.dtype, np.integer):
        raise EvaluationError("confusion matrix must hold nonnegative integers")
    if conf.sum() == 0:
        raise EvaluationError("confusion matrix has no samples")

    diag = np.diag(conf).astype(np.float64)
    col = conf.sum(axis=0).astype(np.float64)
    row = conf.sum(axis=1).astype(np.float64)

    flagged: list[tuple[int, str]] = []
    c = conf.shape[0]
    precision = np.zeros(c)
    recall = np.zeros(c)
    fscore = np.zeros(c)
    for i in range(c):
        if col[i] == 0:
            flagged.append((i, "precision"))
        else:
            precision[i] = diag[i] / col[i]
        if row[i] == 0:
            flagged.append((i, "recall"))
        else:
            recall[i] = diag[i] / row[i]
        if precision[i] + recall[i] == 0:
            flagged.append((i, "fscore"))
        else:
            fscore[i] = 2 * precision[i] * recall[i] / (precision[i] + recall[i])

    return FoldMetrics(
        confusion=conf,
        per_class_precision=precision,
        per_class_recall=recall,
        per_class_fscore=fscore,
        macro_precision=float(precision.mean()),
        macro_recall=float(recall.mean()),
        macro_fscore=float(fscore.mean()),
        flagged=tuple(flagged),
    )


@dataclass(frozen=True)
class SummaryStats:
    median: float
    iqr: float
    mean: float
    sd: float


def summarize(values: Sequence[float]) -> SummaryStats:
    """Median, IQR (linear-interpolated quartiles), mean, sample SD."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.size < 2:
        raise EvaluationError(f"summarize needs at least 2 values, got {arr.size}")
    q25, q75 = np.percentile(arr, [25, 75], method="linear")
    return SummaryStats(
        median=float(np.median(arr)),
        iqr=float(q75 - q25),
        mean=float(arr.mean()),
        sd=float(arr.std(ddof=1)),
    )
