"""Synthetic five-level order flow with a tunable, known amount of predictability.

Each session is an event-driven (Gillespie-style) simulation: limit orders
arrive at each level as Poisson streams, resting orders cancel with an
intensity proportional to queue size, and market orders arrive at a base
rate. ``imbalance_coupling`` mixes an *informed* market-order rule into the
flow:

* the aggressor side leans toward the side favoured by the top-of-book depth
  imbalance and by the net aggressor flow of the last ``flow_memory``
  observations;
* the chance that an aggressor clears the whole best level grows when that
  level is thin;
* recent aggressor activity raises the market-order rate (self-excitation
  with a ``flow_memory``-observation memory);
* some aggressors are probes that leave a single contract at the best level
  and are echoed, exactly ``flow_memory`` observations later, by an order
  that clears the best level (same side unless drift flips the echo's sign). This is a purely temporal dependence: a single
  snapshot cannot tell how long ago the probe happened.

With ``imbalance_coupling = 0`` the aggressor side is a fair coin, the
clearing probability is constant and there are no probes, so price flips
carry no signal beyond the small dependence of the event mix on total
depth. ``regime_drift`` applies a per-session random walk to the informed-rule weights (including the echo's
strength and direction) and a log-normal perturbation to the rates.

A market order that clears the best level is followed, at the same
timestamp, by a refill of the fifth level of the attacked side and by a new
opposite-side quote at the vacated price, so the spread stays one tick and
the mid moves a full tick (the mechanism of a typical price flip).
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import asdict, dataclass, fields

import numpy as np

from .errors import InvalidConfig
from .market_data import (
    N_LEVELS,
    BookSnapshot,
    EventKind,
    LobEvent,
    Side,
    apply_event,
    price_to_ticks,
)

SESSION_NS = 86_400 * 10**9
EPOCH_NS = 1_470_052_800 * 10**9  # 2016-08-01 12:00:00 UTC


@dataclass
class SimConfig:
    seed: int = 42
    n_events: int = 50_000  # per session, excluding same-timestamp follow-ups
    limit_arrival_rate: tuple = (0.20, 0.12, 0.08, 0.05, 0.04)  # per second per side
    cancel_rate: float = 0.02  # per resting contract per second
    market_order_base_rate: float = 0.15  # per second
    imbalance_coupling: float = 0.5
    mean_order_size: float = 8.0
    initial_depth: int = 40
    sessions: int = 4
    regime_drift: float = 0.0
    # informed-flow shape
    flow_memory: int = 5  # observations
    sweep_base_prob: float = 0.25
    side_gain: float = 3.0
    imbalance_weight: float = 1.0
    momentum_weight: float = 1.0
    sweep_gain: float = 2.5
    excitation: float = 1.5
    echo_prob: float = 0.5  # chance (times coupling) a non-sweeping market order is echoed by a sweep flow_memory steps later
    probe_fraction: float = 1.0  # share of the best level taken by an echoed order
    start_price: str = "2175.75"  # best bid of the first session

    def __post_init__(self):
        self.limit_arrival_rate = tuple(float(r) for r in self.limit_arrival_rate)
        problems = []
        if len(self.limit_arrival_rate) != N_LEVELS:
            problems.append(f"limit_arrival_rate needs {N_LEVELS} entries")
        rates = list(self.limit_arrival_rate) + [self.cancel_rate, self.market_order_base_rate]
        if any(not math.isfinite(r) or r < 0 for r in rates):
            problems.append("rates must be finite and non-negative")
        if not 0.0 <= self.imbalance_coupling <= 1.0:
            problems.append("imbalance_coupling must lie in [0, 1]")
        if self.n_events < 0 or self.sessions < 1:
            problems.append("n_events must be >= 0 and sessions >= 1")
        if self.mean_order_size < 1 or self.initial_depth < 1:
            problems.append("mean_order_size and initial_depth must be >= 1")
        if self.regime_drift < 0 or self.flow_memory < 0:
            problems.append("regime_drift and flow_memory must be >= 0")
        if not 0.0 <= self.echo_prob <= 1.0 or not 0.0 < self.probe_fraction <= 1.0:
            problems.append("echo_prob must lie in [0, 1] and probe_fraction in (0, 1]")
        if not 0.0 < self.sweep_base_prob < 1.0:
            problems.append("sweep_base_prob must lie in (0, 1)")
        if sum(self.limit_arrival_rate) <= 0 or self.market_order_base_rate <= 0:
            problems.append("need positive limit and market order rates")
        try:
            price_to_ticks(self.start_price)
        except ValueError as exc:
            problems.append(str(exc))
        if problems:
            raise InvalidConfig("; ".join(problems))

    @classmethod
    def from_dict(cls, doc: dict) -> "SimConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise InvalidConfig(f"unknown simulator settings: {sorted(unknown)}")
        return cls(**doc)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["limit_arrival_rate"] = list(self.limit_arrival_rate)
        return d


def _sigmoid(z: float) -> float:
    return 1.0 / (1.0 + math.exp(-z))


def _logit(p: float) -> float:
    return math.log(p / (1.0 - p))


@dataclass
class _Regime:
    w_imbalance: float
    w_momentum: float
    w_echo: float  # sign: same-side (+) or contrarian (-) echo; magnitude scales its probability
    rate_scale: float
    mo_scale: float


def session_regimes(config: SimConfig) -> list[_Regime]:
    """Per-session informed-rule weights and rate multipliers."""
    rng = np.random.default_rng([config.seed, 7919])
    out = []
    w = np.array([config.imbalance_weight, config.momentum_weight, 1.0])
    for _ in range(config.sessions):
        if out:
            w = w + config.regime_drift * rng.standard_normal(3)
        scales = np.exp(0.25 * config.regime_drift * rng.standard_normal(2))
        out.append(_Regime(float(w[0]), float(w[1]), float(w[2]), float(scales[0]), float(scales[1])))
    return out


def _geometric(rng, mean: float) -> int:
    return int(rng.geometric(1.0 / mean)) if mean > 1 else 1


def _add(ts, side, price, qty, count=1):
    return LobEvent(ts, EventKind.ADD, side, price, qty, count)


def initial_events(config: SimConfig, ts: int, best_bid: int) -> list[LobEvent]:
    out = []
    per_order = max(1, round(config.mean_order_size))
    for i in range(N_LEVELS):
        count = max(1, config.initial_depth // per_order)
        out.append(_add(ts, Side.BID, best_bid - i, config.initial_depth, count))
        out.append(_add(ts, Side.ASK, best_bid + 1 + i, config.initial_depth, count))
    return out


def simulate_session(config: SimConfig, index: int, regime: _Regime | None = None) -> list[LobEvent]:
    """Events of session ``index``; its generator is seeded with ``seed + index``."""
    if regime is None:
        regime = session_regimes(config)[index]
    rng = np.random.default_rng(config.seed + index)
    c = config.imbalance_coupling
    m = config.mean_order_size
    ts = EPOCH_NS + index * SESSION_NS
    if config.n_events == 0:
        return []

    events = initial_events(config, ts, price_to_ticks(config.start_price))
    book = BookSnapshot()
    for ev in events:
        book = apply_event(book, ev)

    add_rates = np.array(config.limit_arrival_rate) * regime.rate_scale
    add_total = 2.0 * add_rates.sum()
    add_p = np.r_[add_rates, add_rates] / add_total
    base_mo = config.market_order_base_rate * regime.mo_scale
    recent: deque = deque(maxlen=max(config.flow_memory, 1))
    logit_q0 = _logit(config.sweep_base_prob)
    ref_depth = float(config.initial_depth)
    echoes: dict[int, Side] = {}

    produced = 0
    while produced < config.n_events:
        active = sum(b + s for b, s in recent) if config.flow_memory else 0
        net = sum(b - s for b, s in recent) if config.flow_memory else 0
        depth_total = sum(lv[1] for lv in book.bids) + sum(lv[1] for lv in book.asks)
        cancel_total = config.cancel_rate * depth_total / m
        mo_rate = base_mo * (1.0 + c * config.excitation * active)
        total = add_total + cancel_total + mo_rate
        ts += max(1, int(rng.exponential(1.0 / total) * 1e9))
        u = rng.random() * total
        new: list[LobEvent] = []
        buys = sells = 0

        echo = echoes.pop(produced, None)
        if echo is not None:
            attacked = book.levels(echo.opposite)
            d1, d2 = attacked[0][1], attacked[1][1]
            qty = d1 + min(_geometric(rng, m) - 1, d2 - 1)
            new.append(LobEvent(ts, EventKind.MARKET, echo, attacked[0][0], qty, 0))
            new += _flip_followups(book, echo, ts, config, rng)
            buys, sells = (1, 0) if echo is Side.BID else (0, 1)
        elif u < add_total:
            k = int(rng.choice(2 * N_LEVELS, p=add_p))
            side = Side.BID if k < N_LEVELS else Side.ASK
            level = book.levels(side)[k % N_LEVELS]
            new.append(_add(ts, side, level[0], _geometric(rng, m), 1))
        elif u < add_total + cancel_total:
            levels = book.bids + book.asks
            depths = np.array([lv[1] for lv in levels], dtype=float)
            k = int(rng.choice(len(levels), p=depths / depths.sum()))
            price, depth, count = levels[k]
            if depth > 1:
                side = Side.BID if k < len(book.bids) else Side.ASK
                qty = min(depth - 1, _geometric(rng, m))
                new_count = max(1, min(count - 1, depth - qty))
                new.append(LobEvent(ts, EventKind.CANCEL, side, price, qty, new_count - count))
        else:
            db, da = book.bids[0][1], book.asks[0][1]
            imbalance = (db - da) / (db + da)
            signal = regime.w_imbalance * imbalance + regime.w_momentum * math.tanh(net / 2.0)
            buy = rng.random() < _sigmoid(c * config.side_gain * signal)
            side = Side.BID if buy else Side.ASK
            attacked = book.asks if buy else book.bids
            d1, d2 = attacked[0][1], attacked[1][1]
            thin = 1.0 - min(d1 / ref_depth, 2.0)
            z = logit_q0 + c * config.sweep_gain * (thin - 0.5)
            probe = False
            if rng.random() < _sigmoid(z):
                qty = d1 + min(_geometric(rng, m) - 1, d2 - 1)
            elif d1 > 1 and config.flow_memory and rng.random() < c * config.echo_prob * min(1.0, abs(regime.w_echo)):
                probe = True
                qty = min(d1 - 1, max(1, math.ceil(config.probe_fraction * d1)))
            else:
                qty = min(_geometric(rng, m), d1 - 1) if d1 > 1 else 0
            if qty > 0:
                new.append(LobEvent(ts, EventKind.MARKET, side, attacked[0][0], qty, 0))
                if buy:
                    buys = 1
                else:
                    sells = 1
                if qty >= d1:
                    new += _flip_followups(book, side, ts, config, rng)
                elif probe:
                    echo_side = side if regime.w_echo >= 0 else side.opposite
                    echoes.setdefault(produced + config.flow_memory, echo_side)

        if not new:
            continue  # a one-contract level cannot be cancelled; no observation
        for ev in new:
            book = apply_event(book, ev)
        events += new
        recent.append((buys, sells))
        produced += 1
    return events


def _flip_followups(book: BookSnapshot, aggressor: Side, ts: int, config: SimConfig, rng) -> list[LobEvent]:
    """Refill the attacked side's fifth level and quote into the vacated price."""
    attacked_side = aggressor.opposite
    attacked = book.levels(attacked_side)
    step = 1 if attacked_side is Side.ASK else -1
    vacated = attacked[0][0]
    deepest = attacked[-1][0]
    refill_depth = _geometric(rng, config.initial_depth)
    improve_depth = _geometric(rng, max(1.0, config.initial_depth / 4))
    per_order = max(1.0, config.mean_order_size)
    return [
        _add(ts, attacked_side, deepest + step, refill_depth, max(1, round(refill_depth / per_order))),
        _add(ts, aggressor, vacated, improve_depth, max(1, round(improve_depth / per_order))),
    ]


def simulate(config: SimConfig) -> list[list[LobEvent]]:
    """All sessions of ``config``; identical configs give identical streams."""
    regimes = session_regimes(config)
    return [simulate_session(config, s, regimes[s]) for s in range(config.sessions)]
