"""Labelling, length-T sequences, class balancing and walk-forward splits."""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum
from typing import Iterator, Optional

import numpy as np

from .errors import HorizonBeyondSession, InsufficientSessions, MissingClass
from .features import FeatureTable


class Label(IntEnum):
    DOWN = -1
    STATIONARY = 0
    UP = 1


CLASSES = (Label.DOWN, Label.STATIONARY, Label.UP)
N_CLASSES = 3


def class_index(labels):
    """Map labels -1/0/+1 to column indices 0/1/2."""
    return np.asarray(labels, dtype=np.int64) + 1


def one_hot(labels, k: int = N_CLASSES) -> np.ndarray:
    idx = class_index(labels)
    out = np.zeros(idx.shape + (k,))
    np.put_along_axis(out, idx[..., None], 1.0, axis=-1)
    return out


def label_next_event(mid_t: int, mid_next: int) -> Label:
    return Label(int(mid_next > mid_t) - int(mid_next < mid_t))


def label_horizon(ts_ns, mids, t: int, horizon_ns: int) -> Label:
    """Sign of the mid change from row ``t`` to the last row stamped ``<= ts[t] + horizon``.

    Raises ``HorizonBeyondSession`` when the cutoff lies past the final row.
    """
    ts_ns = np.asarray(ts_ns)
    cutoff = int(ts_ns[t]) + horizon_ns
    if cutoff > ts_ns[-1]:
        raise HorizonBeyondSession(f"row {t}: horizon ends at {cutoff}, session ends at {ts_ns[-1]}")
    j = max(t, int(np.searchsorted(ts_ns, cutoff, side="right")) - 1)
    return label_next_event(int(mids[t]), int(mids[j]))


def _session_bounds(session: np.ndarray):
    """(start, stop) index pairs of contiguous session runs."""
    if len(session) == 0:
        return []
    cuts = np.flatnonzero(np.diff(session)) + 1
    starts = np.r_[0, cuts]
    stops = np.r_[cuts, len(session)]
    return list(zip(starts.tolist(), stops.tolist()))


def next_event_labels(table: FeatureTable) -> tuple[np.ndarray, np.ndarray]:
    """Next-observation labels and a validity mask (last row per session is unlabeled)."""
    labels = np.zeros(len(table), dtype=np.int64)
    valid = np.zeros(len(table), dtype=bool)
    for a, b in _session_bounds(table.session):
        d = np.diff(table.mid[a:b])
        labels[a : b - 1] = np.sign(d)
        valid[a : b - 1] = True
    return labels, valid


def horizon_labels(table: FeatureTable, horizon_ns: Optional[int]) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised ``label_horizon`` over every row; ``None`` means next event.

    Rows whose horizon crosses the session end are marked invalid.
    """
    if horizon_ns is None:
        return next_event_labels(table)
    labels = np.zeros(len(table), dtype=np.int64)
    valid = np.zeros(len(table), dtype=bool)
    for a, b in _session_bounds(table.session):
        ts = table.ts_ns[a:b]
        mid = table.mid[a:b]
        cutoff = ts + horizon_ns
        j = np.maximum(np.searchsorted(ts, cutoff, side="right") - 1, np.arange(b - a))
        labels[a:b] = np.sign(mid[j] - mid)
        valid[a:b] = cutoff <= ts[-1]
    return labels, valid


@dataclass(frozen=True)
class SequenceSample:
    x: np.ndarray  # (T, P), last row is the current observation
    y: Label
    ts_ns: int
    session_id: int


@dataclass
class SequenceSet:
    """Length-T windows over a shared row matrix.

    Sample ``i`` covers ``base[end[i] - T + 1 : end[i] + 1]``; windows are
    materialised on demand so large test days stay cheap.
    """

    base: np.ndarray  # (n_rows, P)
    end: np.ndarray  # (N,) int64
    y: np.ndarray  # (N,) int64 in {-1, 0, 1}
    ts_ns: np.ndarray  # (N,)
    session: np.ndarray  # (N,)
    T: int

    def __len__(self):
        return len(self.end)

    @property
    def n_features(self) -> int:
        return self.base.shape[1]

    def windows(self, idx=None) -> np.ndarray:
        end = self.end if idx is None else self.end[idx]
        offs = np.arange(-self.T + 1, 1)
        return self.base[end[:, None] + offs]

    @property
    def x(self) -> np.ndarray:
        return self.windows()

    def flat(self, idx=None) -> np.ndarray:
        w = self.windows(idx)
        return w.reshape(len(w), -1)

    def __getitem__(self, i: int) -> SequenceSample:
        return SequenceSample(
            self.windows(np.array([i]))[0], Label(int(self.y[i])), int(self.ts_ns[i]), int(self.session[i])
        )

    def subset(self, idx) -> "SequenceSet":
        return SequenceSet(self.base, self.end[idx], self.y[idx], self.ts_ns[idx], self.session[idx], self.T)

    def with_base(self, base: np.ndarray) -> "SequenceSet":
        return SequenceSet(base, self.end, self.y, self.ts_ns, self.session, self.T)

    def sessions(self) -> list[int]:
        return sorted(set(self.session.tolist()))

    def for_sessions(self, ids) -> "SequenceSet":
        return self.subset(np.isin(self.session, list(ids)))

    def class_counts(self) -> np.ndarray:
        return np.bincount(class_index(self.y), minlength=N_CLASSES)


def make_sequences(
    x,
    labels,
    T: int,
    session=None,
    ts_ns=None,
    valid=None,
) -> SequenceSet:
    """One sample per labelled row having ``T - 1`` predecessors in its session."""
    if T < 1:
        raise ValueError("T must be positive")
    x = np.asarray(x, dtype=np.float64)
    n = len(x)
    labels = np.asarray(labels, dtype=np.int64)
    session = np.zeros(n, dtype=np.int64) if session is None else np.asarray(session)
    ts_ns = np.arange(n, dtype=np.int64) if ts_ns is None else np.asarray(ts_ns)
    ok = np.ones(n, dtype=bool) if valid is None else np.asarray(valid, dtype=bool).copy()
    pos = np.zeros(n, dtype=np.int64)
    for a, b in _session_bounds(session):
        pos[a:b] = np.arange(b - a)
    ok &= pos >= T - 1
    end = np.flatnonzero(ok)
    return SequenceSet(x, end, labels[end], ts_ns[end], session[end], T)


def sequences_from_table(table: FeatureTable, T: int, horizon_ns: Optional[int] = None) -> SequenceSet:
    labels, valid = horizon_labels(table, horizon_ns)
    return make_sequences(table.x, labels, T, table.session, table.ts_ns, valid)


def balance(samples: SequenceSet, per_class_target: int, seed: int) -> SequenceSet:
    """Exactly ``per_class_target`` samples per class, shuffled.

    Classes smaller than the target are drawn with replacement, the others
    without replacement.
    """
    if per_class_target < 1:
        raise ValueError("per_class_target must be positive")
    rng = np.random.default_rng(seed)
    picks = []
    for c in CLASSES:
        idx = np.flatnonzero(samples.y == c)
        if len(idx) == 0:
            raise MissingClass(f"class {c.name} absent; cannot balance")
        picks.append(rng.choice(idx, per_class_target, replace=len(idx) < per_class_target))
    order = np.concatenate(picks)
    rng.shuffle(order)
    return samples.subset(order)


@dataclass(frozen=True)
class SplitPlan:
    train_sessions: int = 3
    validation_size: int = 200_000
    per_class_target: int = 33_000
    seed: int = 0


def _check_ordered(samples: SequenceSet) -> list[int]:
    ids = samples.sessions()
    prev_max = None
    for s in ids:
        ts = samples.ts_ns[samples.session == s]
        if np.any(np.diff(ts) < 0):
            raise ValueError(f"session {s} samples are not time-ordered")
        if prev_max is not None and len(ts) and ts.min() <= prev_max:
            raise ValueError(f"session {s} overlaps the preceding session in time")
        if len(ts):
            prev_max = ts.max()
    return ids


def n_splits(samples: SequenceSet, plan: SplitPlan) -> int:
    return max(0, len(samples.sessions()) - plan.train_sessions)


def split(samples: SequenceSet, plan: SplitPlan, offset: int = 0):
    """Walk-forward split number ``offset``.

    Train: balanced samples of ``plan.train_sessions`` consecutive sessions.
    Validation: the first ``validation_size`` samples of the next session.
    Test: the rest of that session. Neither evaluation set is balanced.
    """
    ids = _check_ordered(samples)
    k = plan.train_sessions
    if len(ids) < offset + k + 1:
        raise InsufficientSessions(f"split {offset} needs {offset + k + 1} sessions, have {len(ids)}")
    train_ids = ids[offset : offset + k]
    eval_id = ids[offset + k]
    train = balance(samples.for_sessions(train_ids), plan.per_class_target, plan.seed + offset)
    held = samples.for_sessions([eval_id])
    n_val = min(plan.validation_size, len(held))
    val = held.subset(np.arange(n_val))
    test = held.subset(np.arange(n_val, len(held)))
    return train, val, test


def walk_forward(samples: SequenceSet, plan: SplitPlan) -> Iterator[tuple]:
    for offset in range(n_splits(samples, plan)):
        yield (offset,) + split(samples, plan, offset)
