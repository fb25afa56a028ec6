"""The 32-column spatio-temporal book representation plus order-flow ratios.

Column layout (frozen, checked through ``LAYOUT_HASH``):

====== ===========================================
0-4    bid prices, levels 1-5, ticks relative to mid
5-9    ask prices, levels 1-5, ticks relative to mid
10-14  bid depths
15-19  ask depths
20-24  bid order counts
25-29  ask order counts
30     buy market orders in window / best ask depth
31     sell market orders in window / best bid depth
====== ===========================================
"""

from __future__ import annotations

import hashlib
import json
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import InsufficientRows, LayoutHashMismatch
from .market_data import N_LEVELS, BookSnapshot, EventKind, LobEvent, Side, apply_event, mid_price

N_FEATURES = 32
DEFAULT_WINDOW = 50
SCALE_FLOOR = 1e-8

FEATURE_NAMES = (
    [f"bid_price_{i}" for i in range(1, N_LEVELS + 1)]
    + [f"ask_price_{i}" for i in range(1, N_LEVELS + 1)]
    + [f"bid_depth_{i}" for i in range(1, N_LEVELS + 1)]
    + [f"ask_depth_{i}" for i in range(1, N_LEVELS + 1)]
    + [f"bid_count_{i}" for i in range(1, N_LEVELS + 1)]
    + [f"ask_count_{i}" for i in range(1, N_LEVELS + 1)]
    + ["buy_flow_ratio", "sell_flow_ratio"]
)
assert len(FEATURE_NAMES) == N_FEATURES

LAYOUT_HASH = hashlib.sha256(json.dumps(FEATURE_NAMES).encode()).hexdigest()[:16]


class FlowWindow:
    """Rolling market-order counts over the last ``window_length`` book updates."""

    __slots__ = ("window_length", "slots", "buy_market_count", "sell_market_count")

    def __init__(self, window_length: int = DEFAULT_WINDOW):
        if window_length < 1:
            raise ValueError("window_length must be positive")
        self.window_length = window_length
        self.slots: deque = deque()
        self.buy_market_count = 0
        self.sell_market_count = 0

    def push(self, events: Iterable[LobEvent]) -> None:
        """Advance by one observation slot holding ``events`` (in place)."""
        buys = sells = 0
        for ev in events:
            if ev.kind is EventKind.MARKET:
                if ev.side is Side.BID:
                    buys += 1
                else:
                    sells += 1
        self.slots.append((buys, sells))
        self.buy_market_count += buys
        self.sell_market_count += sells
        if len(self.slots) > self.window_length:
            b, s = self.slots.popleft()
            self.buy_market_count -= b
            self.sell_market_count -= s

    def reset(self) -> None:
        self.slots.clear()
        self.buy_market_count = self.sell_market_count = 0

    def copy(self) -> "FlowWindow":
        new = FlowWindow(self.window_length)
        new.slots = deque(self.slots)
        new.buy_market_count = self.buy_market_count
        new.sell_market_count = self.sell_market_count
        return new


def update_flow(flow: FlowWindow, events_since_last_update: Sequence[LobEvent]) -> FlowWindow:
    """Functional form of ``FlowWindow.push``; ``flow`` is left untouched."""
    new = flow.copy()
    new.push(events_since_last_update)
    return new


def _padded(levels, step: int):
    """Five (price, depth, count) levels, extrapolating empty ones one tick out."""
    out = list(levels)
    price = out[-1][0]
    while len(out) < N_LEVELS:
        price += step
        out.append((price, 0, 0))
    return out


def extract(book: BookSnapshot, flow: FlowWindow, reference_mid: int) -> np.ndarray:
    """Feature vector for one two-sided snapshot.

    ``reference_mid`` is in half ticks; prices are returned in ticks relative
    to it, so a one-tick book around its own mid gives -0.5 / +0.5.
    """
    out = np.empty(N_FEATURES)
    bids = _padded(book.bids, -1)
    asks = _padded(book.asks, 1)
    half = reference_mid / 2.0
    for i in range(N_LEVELS):
        out[i] = bids[i][0] - half
        out[5 + i] = asks[i][0] - half
        out[10 + i] = bids[i][1]
        out[15 + i] = asks[i][1]
        out[20 + i] = bids[i][2]
        out[25 + i] = asks[i][2]
    out[30] = flow.buy_market_count / max(1, asks[0][1])
    out[31] = flow.sell_market_count / max(1, bids[0][1])
    return out


@dataclass
class FeatureTable:
    """Per-observation features of one or more sessions, in stream order."""

    ts_ns: np.ndarray  # (n,) int64
    x: np.ndarray  # (n, 32)
    mid: np.ndarray  # (n,) int64, half ticks
    session: np.ndarray  # (n,) int64
    window_length: int = DEFAULT_WINDOW

    def __len__(self):
        return len(self.ts_ns)

    @property
    def session_ids(self) -> list[int]:
        return sorted(set(self.session.tolist()))

    def select(self, mask) -> "FeatureTable":
        return FeatureTable(self.ts_ns[mask], self.x[mask], self.mid[mask], self.session[mask], self.window_length)

    @classmethod
    def concat(cls, tables: Sequence["FeatureTable"]) -> "FeatureTable":
        return cls(
            np.concatenate([t.ts_ns for t in tables]),
            np.concatenate([t.x for t in tables]) if tables else np.empty((0, N_FEATURES)),
            np.concatenate([t.mid for t in tables]),
            np.concatenate([t.session for t in tables]),
            tables[0].window_length if tables else DEFAULT_WINDOW,
        )


def featurize_session(
    events: Sequence[LobEvent],
    session_id: int = 0,
    window_length: int = DEFAULT_WINDOW,
    book: BookSnapshot | None = None,
) -> FeatureTable:
    """Replay one session and emit one observation per distinct timestamp.

    Events sharing a timestamp form a single book update. Updates that leave
    the book one-sided produce no row but still advance the flow window.
    """
    book = book or BookSnapshot()
    flow = FlowWindow(window_length)
    ts_out, rows, mids = [], [], []
    n = len(events)
    i = 0
    while i < n:
        ts = events[i].ts_ns
        j = i
        while j < n and events[j].ts_ns == ts:
            book = apply_event(book, events[j])
            j += 1
        flow.push(events[i:j])
        if book.bids and book.asks:
            m = mid_price(book)
            ts_out.append(ts)
            rows.append(extract(book, flow, m))
            mids.append(m)
        i = j
    x = np.array(rows) if rows else np.empty((0, N_FEATURES))
    return FeatureTable(
        np.array(ts_out, dtype=np.int64),
        x,
        np.array(mids, dtype=np.int64),
        np.full(len(ts_out), session_id, dtype=np.int64),
        window_length,
    )


def featurize_sessions(sessions: Sequence[Sequence[LobEvent]], window_length: int = DEFAULT_WINDOW) -> FeatureTable:
    return FeatureTable.concat(
        [featurize_session(ev, k, window_length) for k, ev in enumerate(sessions)]
    )


def standardize(train_rows) -> tuple[np.ndarray, np.ndarray]:
    """Per-feature (shift, scale) fitted on training rows only."""
    x = np.asarray(train_rows, dtype=np.float64)
    x = x.reshape(-1, x.shape[-1])
    if x.shape[0] < 2:
        raise InsufficientRows(f"need at least 2 rows to standardize, got {x.shape[0]}")
    shift = x.mean(axis=0)
    constant = np.all(x == x[0], axis=0)
    shift[constant] = x[0, constant]
    scale = np.maximum(x.std(axis=0), SCALE_FLOOR)
    return shift, scale


def apply_standardization(x, shift, scale) -> np.ndarray:
    return (np.asarray(x, dtype=np.float64) - shift) / scale


def layout_manifest(window_length: int = DEFAULT_WINDOW, shift=None, scale=None, **extra) -> dict:
    doc = {
        "layout_hash": LAYOUT_HASH,
        "features": list(FEATURE_NAMES),
        "window_length": window_length,
        "standardization": None
        if shift is None
        else {"shift": [float(v) for v in shift], "scale": [float(v) for v in scale]},
    }
    doc.update(extra)
    return doc


def check_layout(manifest: dict) -> None:
    if manifest.get("layout_hash") != LAYOUT_HASH or list(manifest.get("features") or ()) != list(FEATURE_NAMES):
        raise LayoutHashMismatch(
            f"feature layout {manifest.get('layout_hash')!r} does not match {LAYOUT_HASH!r}"
        )
