"""Order-book events, five-level book replay and derived book quantities.

Prices are integer tick counts everywhere inside the library; decimal prices
only appear when reading or writing files. A ``BookSnapshot`` keeps at most
five populated levels per side, best level first.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from decimal import Decimal, InvalidOperation
from enum import Enum
from typing import IO, Iterable, Sequence, Union

from .errors import (
    BookError,
    CancelExceedsDepth,
    CrossedBook,
    EmptySide,
    MalformedRecord,
    MarketOrderExceedsVisibleDepth,
    NonMonotoneTimestamp,
)

N_LEVELS = 5
TICK_SIZE = Decimal("0.25")  # E-mini S&P 500

EVENT_FIELDS = ("ts_ns", "kind", "side", "price", "qty", "count_delta")


class EventKind(str, Enum):
    ADD = "ADD"
    CANCEL = "CXL"
    MODIFY = "MOD"
    MARKET = "MKT"


class Side(str, Enum):
    BID = "B"
    ASK = "A"

    @property
    def opposite(self) -> "Side":
        return Side.ASK if self is Side.BID else Side.BID


@dataclass(frozen=True, slots=True)
class LobEvent:
    """One atomic book mutation.

    For ``MARKET`` events ``side`` is the aggressor: a ``BID`` market order is
    a buy that consumes resting asks. ``count_delta`` is the signed change in
    resting order count for limit events and is ignored for market orders.
    """

    ts_ns: int
    kind: EventKind
    side: Side
    price: int
    qty: int
    count_delta: int = 0


Level = tuple  # (price_ticks, depth, order_count)


@dataclass(frozen=True, slots=True)
class BookSnapshot:
    ts_ns: int = 0
    bids: tuple = ()
    asks: tuple = ()

    def _column(self, levels, j):
        out = [lv[j] for lv in levels]
        fill = None if j == 0 else 0
        return tuple(out + [fill] * (N_LEVELS - len(out)))

    @property
    def bid_prices(self):
        return self._column(self.bids, 0)

    @property
    def ask_prices(self):
        return self._column(self.asks, 0)

    @property
    def bid_depths(self):
        return self._column(self.bids, 1)

    @property
    def ask_depths(self):
        return self._column(self.asks, 1)

    @property
    def bid_counts(self):
        return self._column(self.bids, 2)

    @property
    def ask_counts(self):
        return self._column(self.asks, 2)

    def levels(self, side: Side) -> tuple:
        return self.bids if side is Side.BID else self.asks

    @property
    def two_sided(self) -> bool:
        return bool(self.bids) and bool(self.asks)

    @property
    def spread(self) -> int:
        """Inside spread in ticks."""
        if not self.two_sided:
            raise EmptySide("spread of a one-sided book")
        return self.asks[0][0] - self.bids[0][0]


def make_book(ts_ns: int, bids: Iterable[Sequence[int]], asks: Iterable[Sequence[int]]) -> BookSnapshot:
    """Build a snapshot from ``(price, depth, count)`` triples and validate it."""
    book = BookSnapshot(
        ts_ns,
        tuple(sorted((tuple(b) for b in bids), key=lambda lv: -lv[0])),
        tuple(sorted((tuple(a) for a in asks), key=lambda lv: lv[0])),
    )
    validate_book(book)
    return book


def validate_book(book: BookSnapshot) -> None:
    """Raise ``BookError`` if ``book`` violates any snapshot invariant."""
    for name, levels, sign in (("bid", book.bids, -1), ("ask", book.asks, 1)):
        if len(levels) > N_LEVELS:
            raise BookError(f"{name} side has {len(levels)} levels")
        for i, (price, depth, count) in enumerate(levels):
            if depth <= 0 or count <= 0:
                raise BookError(f"{name} level {i + 1}: depth {depth}, count {count}")
            if i and sign * (price - levels[i - 1][0]) <= 0:
                raise BookError(f"{name} prices not strictly ordered at level {i + 1}")
    if book.two_sided and book.asks[0][0] <= book.bids[0][0]:
        raise BookError("non-positive spread")


def mid_price(book: BookSnapshot) -> int:
    """Mid-price in half ticks: exactly ``best_ask + best_bid`` in tick units."""
    if not book.bids or not book.asks:
        raise EmptySide("mid-price needs both sides of the book")
    return book.asks[0][0] + book.bids[0][0]


def _clamp_count(count: int, depth: int) -> int:
    return min(max(count, 1), depth)


def apply_event(book: BookSnapshot, event: LobEvent) -> BookSnapshot:
    """Return the snapshot obtained by applying ``event`` to ``book``.

    Order counts are kept within ``[1, depth]`` on populated levels; feeds
    rarely report exactly which resting orders a fill or cancel touched.
    """
    if event.qty <= 0:
        raise BookError(f"non-positive quantity {event.qty}")
    if event.kind is EventKind.MARKET:
        return _apply_market(book, event)

    is_bid = event.side is Side.BID
    levels = list(book.bids if is_bid else book.asks)
    price = event.price
    idx = next((i for i, lv in enumerate(levels) if lv[0] == price), -1)

    if event.kind is EventKind.ADD:
        opposite = book.asks if is_bid else book.bids
        if opposite and (price >= opposite[0][0] if is_bid else price <= opposite[0][0]):
            raise CrossedBook(f"{event.side.name} add at {price} crosses {opposite[0][0]}")
        if idx >= 0:
            p, depth, count = levels[idx]
            depth += event.qty
            levels[idx] = (p, depth, _clamp_count(count + event.count_delta, depth))
        else:
            levels.append((price, event.qty, _clamp_count(event.count_delta, event.qty)))
            levels.sort(key=(lambda lv: -lv[0]) if is_bid else (lambda lv: lv[0]))
            del levels[N_LEVELS:]
    else:
        if idx < 0 or levels[idx][1] < event.qty:
            have = 0 if idx < 0 else levels[idx][1]
            raise CancelExceedsDepth(
                f"{event.kind.value} of {event.qty} at {price} exceeds resting depth {have}"
            )
        p, depth, count = levels[idx]
        depth -= event.qty
        if depth == 0:
            del levels[idx]
        else:
            levels[idx] = (p, depth, _clamp_count(count + event.count_delta, depth))

    if is_bid:
        return BookSnapshot(event.ts_ns, tuple(levels), book.asks)
    return BookSnapshot(event.ts_ns, book.bids, tuple(levels))


def _apply_market(book: BookSnapshot, event: LobEvent) -> BookSnapshot:
    buy = event.side is Side.BID
    levels = list(book.asks if buy else book.bids)
    visible = sum(lv[1] for lv in levels)
    if event.qty >= visible:
        raise MarketOrderExceedsVisibleDepth(
            f"{'buy' if buy else 'sell'} market order of {event.qty} would clear "
            f"all {len(levels)} visible levels ({visible} contracts)"
        )
    remaining = event.qty
    while remaining:
        p, depth, count = levels[0]
        if depth <= remaining:
            remaining -= depth
            del levels[0]
        else:
            depth -= remaining
            levels[0] = (p, depth, min(count, depth))
            remaining = 0
    if buy:
        return BookSnapshot(event.ts_ns, book.bids, tuple(levels))
    return BookSnapshot(event.ts_ns, tuple(levels), book.asks)


def replay(events: Iterable[LobEvent], book: BookSnapshot | None = None) -> BookSnapshot:
    book = book or BookSnapshot()
    for ev in events:
        book = apply_event(book, ev)
    return book


# -- price conversion -----------------------------------------------------

def price_to_ticks(value: Union[str, Decimal, int, float], tick: Decimal = TICK_SIZE) -> int:
    """Convert a decimal price to ticks; raises ``ValueError`` off the tick grid."""
    try:
        d = Decimal(str(value))
    except InvalidOperation:
        raise ValueError(f"not a number: {value!r}") from None
    if not d.is_finite():
        raise ValueError(f"not a finite price: {value!r}")
    q, r = divmod(d, tick)
    if r != 0:
        raise ValueError(f"price {value} is not a multiple of tick {tick}")
    return int(q)


def ticks_to_price(ticks: int, tick: Decimal = TICK_SIZE) -> Decimal:
    return ticks * tick


def half_ticks_to_price(half_ticks: int, tick: Decimal = TICK_SIZE) -> Decimal:
    return half_ticks * tick / 2


def format_price(ticks: int, tick: Decimal = TICK_SIZE) -> str:
    return _fmt_decimal(ticks_to_price(ticks, tick))


def _fmt_decimal(d: Decimal) -> str:
    s = format(d, "f")
    if "." in s:
        s = s.rstrip("0").rstrip(".")
    return s or "0"


# -- event stream I/O -----------------------------------------------------

_KINDS = {k.value: k for k in EventKind}
_SIDES = {s.value: s for s in Side}


def _parse_int(raw, line: int, field: str) -> int:
    if isinstance(raw, bool):
        raise MalformedRecord(line, field, f"expected integer, got {raw!r}")
    if isinstance(raw, int):
        return raw
    try:
        return int(str(raw).strip())
    except (TypeError, ValueError):
        raise MalformedRecord(line, field, f"expected integer, got {raw!r}") from None


def _record_to_event(rec: dict, line: int, tick: Decimal) -> LobEvent:
    missing = [f for f in EVENT_FIELDS if f not in rec or rec[f] is None]
    if missing:
        raise MalformedRecord(line, missing[0], "missing field")
    ts = _parse_int(rec["ts_ns"], line, "ts_ns")
    if ts < 0:
        raise MalformedRecord(line, "ts_ns", f"negative timestamp {ts}")
    kind = _KINDS.get(str(rec["kind"]).strip())
    if kind is None:
        raise MalformedRecord(line, "kind", f"unknown kind {rec['kind']!r}")
    side = _SIDES.get(str(rec["side"]).strip())
    if side is None:
        raise MalformedRecord(line, "side", f"unknown side {rec['side']!r}")
    try:
        price = price_to_ticks(str(rec["price"]).strip(), tick)
    except ValueError as exc:
        raise MalformedRecord(line, "price", str(exc)) from None
    qty = _parse_int(rec["qty"], line, "qty")
    if qty <= 0:
        raise MalformedRecord(line, "qty", f"quantity must be positive, got {qty}")
    count_delta = _parse_int(rec["count_delta"], line, "count_delta")
    if kind is EventKind.MARKET:
        count_delta = 0
    return LobEvent(ts, kind, side, price, qty, count_delta)


def parse_event_stream(
    source: Union[bytes, str, IO],
    format: str = "csv",
    tick: Decimal = TICK_SIZE,
) -> list[LobEvent]:
    """Parse a CSV or JSONL event stream into time-ordered ``LobEvent``s.

    ``source`` may be raw bytes, text, or a binary/text file object. Line
    numbers in errors are 1-based physical lines (the CSV header is line 1).
    """
    if hasattr(source, "read"):
        source = source.read()
    if isinstance(source, bytes):
        source = source.decode("utf-8")
    fmt = format.lower()
    if fmt not in ("csv", "jsonl"):
        raise ValueError(f"unknown event format {format!r}")

    events: list[LobEvent] = []
    last_ts = None
    lines = source.splitlines()
    header_seen = fmt == "jsonl"
    header: list[str] = []
    for lineno, text in enumerate(lines, start=1):
        if not text.strip():
            continue
        if fmt == "csv":
            row = next(csv.reader([text]))
            if not header_seen:
                header = [h.strip() for h in row]
                if tuple(header) != EVENT_FIELDS:
                    raise MalformedRecord(lineno, "header", f"expected {','.join(EVENT_FIELDS)}")
                header_seen = True
                continue
            if len(row) != len(header):
                raise MalformedRecord(lineno, "row", f"expected {len(header)} fields, got {len(row)}")
            rec = dict(zip(header, row))
        else:
            try:
                rec = json.loads(text)
            except json.JSONDecodeError as exc:
                raise MalformedRecord(lineno, "json", exc.msg) from None
            if not isinstance(rec, dict):
                raise MalformedRecord(lineno, "json", "expected an object")
        ev = _record_to_event(rec, lineno, tick)
        if last_ts is not None and ev.ts_ns < last_ts:
            raise NonMonotoneTimestamp(lineno, ev.ts_ns, last_ts)
        last_ts = ev.ts_ns
        events.append(ev)
    return events


def format_event_stream(events: Iterable[LobEvent], format: str = "csv", tick: Decimal = TICK_SIZE) -> str:
    fmt = format.lower()
    out = io.StringIO()
    if fmt == "csv":
        out.write(",".join(EVENT_FIELDS) + "\n")
        for ev in events:
            out.write(
                f"{ev.ts_ns},{ev.kind.value},{ev.side.value},"
                f"{format_price(ev.price, tick)},{ev.qty},{ev.count_delta}\n"
            )
    elif fmt == "jsonl":
        for ev in events:
            rec = {
                "ts_ns": ev.ts_ns,
                "kind": ev.kind.value,
                "side": ev.side.value,
                "price": format_price(ev.price, tick),
                "qty": ev.qty,
                "count_delta": ev.count_delta,
            }
            out.write(json.dumps(rec, separators=(",", ":")) + "\n")
    else:
        raise ValueError(f"unknown event format {format!r}")
    return out.getvalue()


SNAPSHOT_COLUMNS = (
    ["ts_ns"]
    + [f"{q}_{s}{i}" for s in ("b", "a") for q in ("p", "d", "c") for i in range(1, N_LEVELS + 1)]
)


def snapshot_row(book: BookSnapshot, tick: Decimal = TICK_SIZE) -> list[str]:
    row = [str(book.ts_ns)]
    for prices, depths, counts in (
        (book.bid_prices, book.bid_depths, book.bid_counts),
        (book.ask_prices, book.ask_depths, book.ask_counts),
    ):
        row += ["" if p is None else format_price(p, tick) for p in prices]
        row += [str(d) for d in depths]
        row += [str(c) for c in counts]
    return row


def format_snapshots(books: Iterable[BookSnapshot], tick: Decimal = TICK_SIZE) -> str:
    out = io.StringIO()
    out.write(",".join(SNAPSHOT_COLUMNS) + "\n")
    for book in books:
        out.write(",".join(snapshot_row(book, tick)) + "\n")
    return out.getvalue()
