"""Walk-forward cross-validation and the derived studies.

Every study returns plain result objects whose ``rows()`` feed the CSV
writers and plots; nothing here touches the filesystem.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ..dataset import CLASSES, SequenceSet, SplitPlan, n_splits, sequences_from_table, split
from ..errors import InsufficientSessions
from ..features import FeatureTable
from ..pipeline import ModelSpec, decisions, fit, score
from .metrics import ClassMetrics, RocCurve, auc_score, confusion, roc

HOUR_NS = 3600 * 10**9
NSTEPS_T = (1, 2, 5, 10, 20, 50, 100)
CLASS_TAGS = tuple(c.name.lower() for c in CLASSES)


def minority_f1(metrics: ClassMetrics) -> float:
    f1 = metrics.f1
    return float((f1[0] + f1[2]) / 2.0)


@dataclass
class SplitResult:
    offset: int
    train_sessions: list
    test_session: int
    metrics: ClassMetrics
    train_size: int
    val_size: int
    test_size: int

    def row(self) -> dict:
        out = {
            "split": self.offset,
            "test_session": self.test_session,
            "train_size": self.train_size,
            "val_size": self.val_size,
            "test_size": self.test_size,
        }
        out.update(self.metrics.as_row())
        return out


def evaluate_split(spec: ModelSpec, train: SequenceSet, val: SequenceSet, test: SequenceSet):
    """Fit on ``train`` (validation for model selection) and score ``test``."""
    model, history = fit(spec, train, val)
    probs = score(model, test)
    return model, history, probs, confusion(decisions(model, probs), test.y)


@dataclass
class CvResult:
    splits: list = field(default_factory=list)

    def split_rows(self) -> list[dict]:
        return [s.row() for s in self.splits]

    def aggregate_rows(self) -> list[dict]:
        """Mean and standard deviation across splits, one row per class."""
        rows = []
        for i, tag in enumerate(CLASS_TAGS):
            row = {"class": tag}
            for name in ("precision", "recall", "f1"):
                vals = np.array([getattr(s.metrics, name)[i] for s in self.splits])
                row[f"{name}_mean"] = float(vals.mean())
                row[f"{name}_std"] = float(vals.std())
            row["support_mean"] = float(np.mean([s.metrics.support[i] for s in self.splits]))
            rows.append(row)
        return rows

    def sizes(self) -> dict:
        return {
            "train_size_mean": float(np.mean([s.train_size for s in self.splits])),
            "test_size_mean": float(np.mean([s.test_size for s in self.splits])),
        }

    @property
    def minority_f1(self) -> float:
        return float(np.mean([minority_f1(s.metrics) for s in self.splits]))


def cross_validate(samples: SequenceSet, spec: ModelSpec, plan: SplitPlan, max_splits: Optional[int] = None) -> CvResult:
    """Fit and test every walk-forward split in order."""
    total = n_splits(samples, plan)
    if total < 1:
        raise InsufficientSessions(
            f"need at least {plan.train_sessions + 1} sessions, have {len(samples.sessions())}"
        )
    if max_splits is not None:
        total = min(total, max_splits)
    ids = samples.sessions()
    result = CvResult()
    for offset in range(total):
        train, val, test = split(samples, plan, offset)
        _, _, _, metrics = evaluate_split(spec, train, val, test)
        result.splits.append(
            SplitResult(
                offset,
                ids[offset : offset + plan.train_sessions],
                ids[offset + plan.train_sessions],
                metrics,
                len(train),
                len(val),
                len(test),
            )
        )
    return result


# -- retraining decay -----------------------------------------------------

@dataclass
class RetrainResult:
    test_sessions: list
    retrained: list  # ClassMetrics per split, refitted each split
    once: list  # ClassMetrics per split, fitted on split 0 only

    def rows(self) -> list[dict]:
        out = []
        for k, (s, a, b) in enumerate(zip(self.test_sessions, self.retrained, self.once)):
            row = {"split": k, "test_session": s}
            for i, tag in enumerate(CLASS_TAGS):
                row[f"f1_{tag}_retrained"] = float(a.f1[i])
            for i, tag in enumerate(CLASS_TAGS):
                row[f"f1_{tag}_once"] = float(b.f1[i])
            row["minority_f1_retrained"] = minority_f1(a)
            row["minority_f1_once"] = minority_f1(b)
            out.append(row)
        return out

    def last_third(self) -> tuple[float, float]:
        """Mean minority-class F1 (retrained, once) over the final third of splits."""
        n = len(self.test_sessions)
        k = max(1, math.ceil(n / 3))
        a = np.mean([minority_f1(m) for m in self.retrained[-k:]])
        b = np.mean([minority_f1(m) for m in self.once[-k:]])
        return float(a), float(b)


def retraining_study(samples: SequenceSet, spec: ModelSpec, plan: SplitPlan) -> RetrainResult:
    """Daily refits against a single model frozen after the first split."""
    total = n_splits(samples, plan)
    if total < 2:
        raise InsufficientSessions(
            f"need at least {plan.train_sessions + 2} sessions, have {len(samples.sessions())}"
        )
    ids = samples.sessions()
    frozen = None
    result = RetrainResult([], [], [])
    for offset in range(total):
        train, val, test = split(samples, plan, offset)
        model, _ = fit(spec, train, val)
        if frozen is None:
            frozen = model
        m_once = confusion(decisions(frozen, score(frozen, test)), test.y)
        m_new = confusion(decisions(model, score(model, test)), test.y)
        result.test_sessions.append(ids[offset + plan.train_sessions])
        result.retrained.append(m_new)
        result.once.append(m_once)
    return result


# -- horizon decay --------------------------------------------------------

@dataclass
class HorizonResult:
    horizon_ns: Optional[int]
    curves: dict  # class tag -> RocCurve
    auc: dict  # class tag -> exact AUC
    class_counts: list

    @property
    def label(self) -> str:
        return "next" if self.horizon_ns is None else str(self.horizon_ns)


def _roc_by_class(probs: np.ndarray, y: np.ndarray, n_thresholds: int):
    curves, aucs = {}, {}
    for i, tag in ((0, "down"), (2, "up")):
        positive = y == CLASSES[i]
        curves[tag] = roc(probs[:, i], positive, n_thresholds)
        aucs[tag] = auc_score(probs[:, i], positive)
    return curves, aucs


def horizon_study(
    table: FeatureTable,
    spec: ModelSpec,
    plan: SplitPlan,
    horizons: Sequence[Optional[int]] = (None,),
    n_thresholds: int = 256,
) -> list[HorizonResult]:
    """One model and one pair of ROC curves per horizon (``None`` = next event)."""
    out = []
    for h in horizons:
        samples = sequences_from_table(table, spec.T, h)
        train, val, test = split(samples, plan, 0)
        _, _, probs, _ = evaluate_split(spec, train, val, test)
        curves, aucs = _roc_by_class(probs, test.y, n_thresholds)
        out.append(HorizonResult(h, curves, aucs, test.class_counts().tolist()))
    return out


def horizon_rows(results: Sequence[HorizonResult]) -> list[dict]:
    rows = []
    for r in results:
        for tag, curve in r.curves.items():
            for thr, tpr, fpr in curve.rows():
                rows.append({"horizon": r.label, "class": tag, "threshold": thr, "tpr": tpr, "fpr": fpr})
    return rows


def horizon_summary_rows(results: Sequence[HorizonResult]) -> list[dict]:
    return [
        {
            "horizon": r.label,
            "auc_down": r.auc["down"],
            "auc_up": r.auc["up"],
            "trapezoid_auc_down": r.curves["down"].auc,
            "trapezoid_auc_up": r.curves["up"].auc,
        }
        for r in results
    ]


# -- intra-day F1 ---------------------------------------------------------

@dataclass
class HourBucket:
    bucket: int
    count: int
    metrics: Optional[ClassMetrics]

    def row(self) -> dict:
        row = {"bucket": self.bucket, "count": self.count}
        for i, tag in enumerate(CLASS_TAGS):
            row[f"f1_{tag}"] = "" if self.metrics is None else float(self.metrics.f1[i])
        return row


def hour_buckets(ts_ns, session, bucket_ns: int = HOUR_NS) -> np.ndarray:
    """Bucket index of each sample, measured from its session's first sample."""
    ts_ns = np.asarray(ts_ns, dtype=np.int64)
    session = np.asarray(session)
    start = np.empty_like(ts_ns)
    for s in np.unique(session):
        sel = session == s
        start[sel] = ts_ns[sel].min()
    return (ts_ns - start) // bucket_ns


def hourly_f1(preds, samples: SequenceSet, bucket_ns: int = HOUR_NS) -> list[HourBucket]:
    """Per-bucket confusion of ``preds`` against ``samples.y``.

    Buckets between the first and last occupied one that hold no samples are
    reported with ``count = 0`` and no metrics.
    """
    preds = np.asarray(preds)
    if len(samples) == 0:
        return []
    b = hour_buckets(samples.ts_ns, samples.session, bucket_ns)
    out = []
    for k in range(int(b.max()) + 1):
        sel = b == k
        n = int(sel.sum())
        out.append(HourBucket(k, n, confusion(preds[sel], samples.y[sel]) if n else None))
    return out


# -- sequence-length sweep ------------------------------------------------

@dataclass
class NstepsResult:
    T_values: list
    cv: list  # CvResult per T

    def rows(self) -> list[dict]:
        out = []
        for T, cv in zip(self.T_values, self.cv):
            row = {"T": T}
            agg = cv.aggregate_rows()
            for r in agg:
                row[f"f1_{r['class']}"] = r["f1_mean"]
            for r in agg:
                row[f"f1_{r['class']}_std"] = r["f1_std"]
            row["minority_f1"] = cv.minority_f1
            out.append(row)
        return out


def shared_windows(samples: SequenceSet, T: int) -> SequenceSet:
    """The same samples viewed with a shorter window."""
    if T > samples.T:
        raise ValueError(f"cannot widen windows from {samples.T} to {T}")
    return SequenceSet(samples.base, samples.end, samples.y, samples.ts_ns, samples.session, T)


def nsteps_study(
    table: FeatureTable,
    spec: ModelSpec,
    plan: SplitPlan,
    T_values: Sequence[int] = NSTEPS_T,
    horizon_ns: Optional[int] = None,
    max_splits: Optional[int] = None,
) -> NstepsResult:
    """Cross-validate once per sequence length on an identical sample set.

    Samples are those with enough history for the longest window, so every
    ``T`` sees the same labels and the same balanced draws.
    """
    T_values = [int(t) for t in T_values]
    longest = sequences_from_table(table, max(T_values), horizon_ns)
    cvs = [cross_validate(shared_windows(longest, T), spec.with_T(T), plan, max_splits) for T in T_values]
    return NstepsResult(T_values, cvs)


__all__ = [
    "CvResult",
    "HOUR_NS",
    "HourBucket",
    "HorizonResult",
    "NSTEPS_T",
    "NstepsResult",
    "RetrainResult",
    "RocCurve",
    "SplitResult",
    "cross_validate",
    "evaluate_split",
    "hour_buckets",
    "horizon_rows",
    "horizon_study",
    "horizon_summary_rows",
    "hourly_f1",
    "minority_f1",
    "nsteps_study",
    "retraining_study",
    "shared_windows",
]
