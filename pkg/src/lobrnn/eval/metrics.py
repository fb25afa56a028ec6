"""One-vs-rest confusion counts, precision/recall/F1 and ROC curves."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..dataset import CLASSES, class_index

DEFAULT_THRESHOLDS = 256


def _ratio(num, den):
    num = np.asarray(num, dtype=np.float64)
    den = np.asarray(den, dtype=np.float64)
    return np.divide(num, den, out=np.zeros_like(num), where=den > 0)


def f1_score(precision, recall):
    """Harmonic mean of precision and recall, 0 when both are 0."""
    p = np.asarray(precision, dtype=np.float64)
    r = np.asarray(recall, dtype=np.float64)
    out = _ratio(2 * p * r, p + r)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class ClassMetrics:
    """Per-class one-vs-rest counts, classes ordered Down, Stationary, Up."""

    tp: np.ndarray
    fp: np.ndarray
    fn: np.ndarray
    tn: np.ndarray

    @property
    def n(self) -> int:
        return int(self.tp[0] + self.fp[0] + self.fn[0] + self.tn[0])

    @property
    def precision(self) -> np.ndarray:
        return _ratio(self.tp, self.tp + self.fp)

    @property
    def recall(self) -> np.ndarray:
        return _ratio(self.tp, self.tp + self.fn)

    @property
    def f1(self) -> np.ndarray:
        return f1_score(self.precision, self.recall)

    @property
    def support(self) -> np.ndarray:
        return self.tp + self.fn

    def __add__(self, other: "ClassMetrics") -> "ClassMetrics":
        return ClassMetrics(self.tp + other.tp, self.fp + other.fp, self.fn + other.fn, self.tn + other.tn)

    def as_row(self) -> dict:
        row = {}
        for i, c in enumerate(CLASSES):
            tag = c.name.lower()
            row[f"precision_{tag}"] = float(self.precision[i])
            row[f"recall_{tag}"] = float(self.recall[i])
            row[f"f1_{tag}"] = float(self.f1[i])
        return row


def confusion(preds, labels) -> ClassMetrics:
    """One-vs-rest confusion counts for each of the three classes."""
    p = class_index(preds)
    y = class_index(labels)
    if p.shape != y.shape:
        raise ValueError("predictions and labels differ in length")
    k = len(CLASSES)
    table = np.bincount(y * k + p, minlength=k * k).reshape(k, k)  # rows: truth
    tp = np.diag(table).astype(np.int64)
    fp = table.sum(axis=0) - tp
    fn = table.sum(axis=1) - tp
    tn = len(y) - tp - fp - fn
    return ClassMetrics(tp, fp, fn, tn)


def empty_metrics() -> ClassMetrics:
    z = np.zeros(len(CLASSES), dtype=np.int64)
    return ClassMetrics(z, z.copy(), z.copy(), z.copy())


@dataclass(frozen=True)
class RocCurve:
    thresholds: np.ndarray
    tpr: np.ndarray
    fpr: np.ndarray
    auc: float

    def rows(self):
        return list(zip(self.thresholds.tolist(), self.tpr.tolist(), self.fpr.tolist()))


def threshold_grid(n_thresholds: int = DEFAULT_THRESHOLDS, lo: float = 0.5) -> np.ndarray:
    """``n_thresholds`` uniform cut-points on ``[lo, 1)``."""
    return lo + (1.0 - lo) * np.arange(n_thresholds) / n_thresholds


def roc(probs_positive, labels_binary, n_thresholds: int = DEFAULT_THRESHOLDS, lo: float = 0.5) -> RocCurve:
    """ROC points over a cut-point sweep of ``[lo, 1)``.

    A sample is called positive when its score is at least the cut-point.
    ``auc`` integrates the points by the trapezoid rule after closing the
    curve with (0, 0) and (1, 1).
    """
    s = np.asarray(probs_positive, dtype=np.float64)
    y = np.asarray(labels_binary).astype(bool)
    thr = threshold_grid(n_thresholds, lo)
    n_pos = int(y.sum())
    n_neg = len(y) - n_pos
    # counts of scores >= thr via sorted search
    pos_sorted = np.sort(s[y])
    neg_sorted = np.sort(s[~y])
    tp = n_pos - np.searchsorted(pos_sorted, thr, side="left")
    fp = n_neg - np.searchsorted(neg_sorted, thr, side="left")
    tpr = tp / n_pos if n_pos else np.zeros(len(thr))
    fpr = fp / n_neg if n_neg else np.zeros(len(thr))
    return RocCurve(thr, tpr, fpr, _closed_trapezoid(fpr, tpr))


def _closed_trapezoid(fpr, tpr) -> float:
    # fpr/tpr are non-increasing in the threshold; reverse to ascending fpr
    x = np.r_[0.0, fpr[::-1], 1.0]
    y = np.r_[0.0, tpr[::-1], 1.0]
    return float(np.sum((x[1:] - x[:-1]) * (y[1:] + y[:-1]) / 2.0))


def auc_score(scores, labels_binary) -> float:
    """Exact ROC AUC: probability a positive outranks a negative, ties count half."""
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels_binary).astype(bool)
    n_pos = int(y.sum())
    n_neg = len(y) - n_pos
    if n_pos == 0 or n_neg == 0:
        return float("nan")
    order = np.argsort(s, kind="mergesort")
    ranks = np.empty(len(s))
    sorted_s = s[order]
    # average ranks over ties
    starts = np.r_[0, np.flatnonzero(np.diff(sorted_s)) + 1]
    stops = np.r_[starts[1:], len(s)]
    avg = (starts + stops + 1) / 2.0
    ranks[order] = np.repeat(avg, stops - starts)
    return float((ranks[y].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))
