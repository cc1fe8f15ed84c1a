"""Seeded synthetic order flow and daily price series for pipeline oracles.

Order flow is produced by a simple state-dependent mechanism: passive limit
orders placed at a geometric tick offset from the prevailing best quote,
marketable orders that cross the spread (institutions sweep several levels
with multiplied size), and cancellations of live resting orders. All draws
come from numpy's PCG64 generator (numpy.random.default_rng), so a fixed
seed reproduces the stream bit for bit.

The liquidity_asymmetry knob scales the resting depth available to sellers:
values below one shrink passive buy-side sizes, so institutional sales sweep
deeper and carry a larger price impact.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, fields
from datetime import date as Date
from datetime import timedelta
from pathlib import Path
from typing import Sequence

import numpy as np

from .book import LimitOrderBook
from .orderflow import Action, OrderEvent, SESSIONS_MS, Side, TraderType
from .trends import DailyClose, TrendKind


@dataclass(frozen=True, slots=True)
class FlowConfig:
    seed: int = 0
    duration_ms: int = 600_000
    n_events: int | None = None  # stop early after this many events
    submit_rate: float = 5.0  # submissions per second and side
    cancel_fraction: float = 0.25  # cancel intensity at the resting-book scale
    resting_scale: int = 300  # live orders at which cancels run at full intensity
    placement_spread: float = 8.0  # mean passive offset from the reference, ticks
    size_min: int = 100
    size_max: int = 5_000
    size_shape: float = 1.5
    institution_fraction: float = 0.05
    institution_size_mult: float = 12.0
    liquidity_asymmetry: float = 1.0
    marketable_fraction: float = 0.15  # individual submits that cross
    stock_code: str = "000001"
    base_price_ticks: int = 1_000
    tick_size: float = 0.01
    lot_size: int = 100

    def __post_init__(self):
        if self.submit_rate <= 0:
            raise ValueError("submit_rate must be positive")
        for name in ("cancel_fraction", "institution_fraction", "marketable_fraction"):
            v = getattr(self, name)
            if not 0 <= v <= 1:
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.institution_size_mult < 1:
            raise ValueError("institution_size_mult must be at least 1")
        if self.liquidity_asymmetry <= 0:
            raise ValueError("liquidity_asymmetry must be positive")
        if self.size_min <= 0 or self.size_max < self.size_min:
            raise ValueError("invalid size bounds")

    @classmethod
    def from_file(cls, path: str | Path) -> "FlowConfig":
        """Load a flat key = value config file (blank lines and # comments ok)."""
        values: dict[str, object] = {}
        types = {f.name: f.type for f in fields(cls)}
        with open(path, "r", encoding="utf-8") as fh:
            for raw in fh:
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                key, _, val = line.partition("=")
                key = key.strip()
                val = val.strip()
                if key not in types:
                    raise ValueError(f"unknown flow config key {key!r}")
                t = types[key]
                if "str" in t:
                    values[key] = val
                elif "float" in t:
                    values[key] = float(val)
                else:
                    values[key] = int(val)
        return cls(**values)


SESSION_OPEN = SESSIONS_MS[0][0]
MORNING_CLOSE = SESSIONS_MS[0][1]
AFTERNOON_OPEN = SESSIONS_MS[1][0]
AFTERNOON_CLOSE = SESSIONS_MS[1][1]


def _advance(t: int, dt: int) -> int:
    t += dt
    if MORNING_CLOSE < t < AFTERNOON_OPEN:
        t += AFTERNOON_OPEN - MORNING_CLOSE
    return t


def gen_flow(config: FlowConfig) -> list[OrderEvent]:
    """Generate a deterministic, validation-clean order stream."""
    rng = np.random.default_rng(config.seed)
    book = LimitOrderBook(config.tick_size)
    events: list[OrderEvent] = []
    live: list[tuple[int, Side]] = []
    seq = 0
    next_id = 0
    t = SESSION_OPEN
    end = min(_advance(SESSION_OPEN, config.duration_ms), AFTERNOON_CLOSE)
    mean_gap_ms = 1000.0 / (2.0 * config.submit_rate)
    # passive quotes anchor on a bounded seeded random walk rather than the
    # instantaneous mid: endogenous anchoring lets order-flow drift pile
    # resting depth into the path of the price, inverting any imposed
    # book-shape asymmetry
    ref = config.base_price_ticks
    ref_lo = max(2, config.base_price_ticks - 50)
    ref_hi = config.base_price_ticks + 50

    def draw_lots() -> int:
        raw = config.size_min * (1.0 + rng.pareto(config.size_shape))
        size = min(config.size_max, int(raw))
        return max(config.lot_size, (size // config.lot_size) * config.lot_size)

    def round_lots(size: int) -> int:
        return max(config.lot_size, (size // config.lot_size) * config.lot_size)

    def passive_price(side: Side) -> int:
        # geometric offsets leave multi-level books with gaps
        offset = int(rng.geometric(min(1.0, 1.0 / config.placement_spread))) - 1
        if side is Side.BUY:
            return max(1, ref - 1 - offset)
        return ref + 1 + offset

    def institutional_order(side: Side) -> tuple[int, int]:
        """Tightly distributed multiplied size, priced to cover it within a
        bounded number of opposite levels (deeper remainders rest)."""
        size = round_lots(int(config.lot_size * config.institution_size_mult
                              * rng.uniform(0.8, 1.2)))
        bids, asks = book.depth_snapshot(6)
        ladder = asks if side is Side.BUY else bids
        cum = 0
        price = ladder[-1][0]
        for level_price, vol in ladder:
            cum += vol
            if cum >= size:
                price = level_price
                break
        return max(1, price), size

    n_made = 0
    while t <= end:
        if config.n_events is not None and n_made >= config.n_events:
            break
        if rng.random() < 0.05:
            ref += 1 if rng.random() < 0.5 else -1
            ref = min(ref_hi, max(ref_lo, ref))
        n_made += 1
        if n_made % 512 == 0:
            live = [entry for entry in live if book.is_live(entry[0])]
        # cancel intensity grows with the resting book so its size stays
        # stationary instead of accumulating over long streams
        cancel_p = min(0.9, config.cancel_fraction * len(live) / config.resting_scale)
        made = None
        if live and rng.random() < cancel_p:
            while live:
                j = int(rng.integers(len(live)))
                oid, oside = live.pop(j)
                if book.is_live(oid):
                    seq += 1
                    made = OrderEvent(config.stock_code, seq, t, oid, f"t{oid}",
                                      TraderType.INDIVIDUAL, oside, Action.CANCEL, 0, 0)
                    break
        if made is None:
            side = Side.BUY if rng.random() < 0.5 else Side.SELL
            institution = rng.random() < config.institution_fraction
            lots = draw_lots()
            opp = book.best_ask if side is Side.BUY else book.best_bid
            if institution and opp is not None:
                price, size = institutional_order(side)
                ttype = TraderType.INSTITUTION
            else:
                ttype = TraderType.INSTITUTION if institution else TraderType.INDIVIDUAL
                if not institution and opp is not None and rng.random() < config.marketable_fraction:
                    sweep = int(rng.geometric(0.7)) - 1
                    price = opp + sweep if side is Side.BUY else max(1, opp - sweep)
                    size = lots
                else:
                    # the asymmetry knob sets the bid:ask passive placement
                    # rate ratio, thinning the resting depth facing sales
                    if config.liquidity_asymmetry != 1.0:
                        d = config.liquidity_asymmetry
                        side = Side.BUY if rng.random() < d / (1.0 + d) else Side.SELL
                    price = passive_price(side)
                    size = lots
            seq += 1
            next_id += 1
            made = OrderEvent(config.stock_code, seq, t, next_id, f"t{next_id}",
                              ttype, side, Action.SUBMIT, price, size)
        book.apply(made)
        if made.action is Action.SUBMIT and book.is_live(made.order_id):
            live.append((made.order_id, made.side))
        dt = max(1, int(rng.exponential(mean_gap_ms)))
        t = _advance(t, dt)
        events.append(made)
    return events


def gen_price_series(
    spec: Sequence[tuple[TrendKind, int, float]],
    noise: float = 0.0,
    seed: int = 0,
    base_price: float = 10.0,
    start: Date = Date(2003, 1, 2),
) -> list[DailyClose]:
    """Daily closes realizing a known alternating drawup/drawdown layout.

    Each (kind, n_days, magnitude) entry becomes a linear log-price ramp of
    n_days daily changes; with zero noise the construction is the exact
    segmentation ground truth.
    """
    if not spec:
        raise ValueError("empty segment spec")
    for (k1, _, _), (k2, _, _) in zip(spec, spec[1:]):
        if k1 is k2:
            raise ValueError("segment kinds must alternate")
    for kind, n_days, magnitude in spec:
        if n_days < 1:
            raise ValueError("segments need at least one day")
        if kind is TrendKind.DRAWUP and magnitude <= 0:
            raise ValueError("drawup magnitude must be positive")
        if kind is TrendKind.DRAWDOWN and magnitude >= 0:
            raise ValueError("drawdown magnitude must be negative")
    rng = np.random.default_rng(seed)
    log_px = math.log(base_price)
    day = start
    closes = [DailyClose(day, base_price, base_price)]
    for kind, n_days, magnitude in spec:
        step = magnitude / n_days
        for _ in range(n_days):
            log_px += step
            if noise > 0.0:
                log_px += float(rng.normal(0.0, noise))
            day += timedelta(days=1)
            px = math.exp(log_px)
            closes.append(DailyClose(day, px, px))
    return closes
