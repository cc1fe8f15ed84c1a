"""Price impact of institutional effective-market orders and event studies.

Price impact compares the volume-weighted execution price of an order's
component trades with the reference price prevailing when the order was
released (signed so that positive means worse prices for the trader).
Event studies pool trade-by-trade returns and the book-structure variable
in 5-second bins over a +/- 60 second window around each institutional
transaction, with the execution instant kept as its own singleton bin.
"""
from __future__ import annotations

import math
from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field, replace
from enum import Enum
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .book import BookStructureValue, Trade
from .orderflow import Side, session_bounds
from .stats import AnovaResult, TTestResult, anova_oneway, welch_t
from .trends import TrendKind

DEFAULT_WINDOW_MS = 60_000
DEFAULT_BIN_MS = 5_000


class Subset(str, Enum):
    SMALL = "small_v"
    LARGE = "large_v"
    TOTAL = "total"


@dataclass(frozen=True, slots=True)
class InstitutionalTransaction:
    """One institutional effective-market order with its component trades."""

    stock_code: str
    seq: int
    order_id: int
    side: Side
    submitted: int
    executed: int
    trades: tuple[Trade, ...]
    tape_slice: tuple[int, int]  # [start, stop) indices into the stock tape
    p_r_half_ticks: int
    p_r_is_mid: bool
    vwap_ticks: Fraction
    pi: float
    c_before: BookStructureValue | None
    v_p: float | None
    full_filled: bool
    anchor_ms: int
    trend: TrendKind | None = None

    def with_trend(self, trend: TrendKind | None) -> "InstitutionalTransaction":
        return replace(self, trend=trend)


def price_impact(trades: Sequence[Trade], p_r_half_ticks: int, side: Side) -> tuple[float, Fraction]:
    """Signed log price impact and the exact VWAP (in ticks) of the fills.

    Buys: ln(VWAP) - ln(P_r). Sells: ln(P_r) - ln(VWAP). The ratio is formed
    from exact integers before the single log call.
    """
    if not trades:
        raise ValueError("price impact needs at least one component trade")
    if p_r_half_ticks <= 0:
        raise ValueError("reference price must be positive")
    sum_pv = 0
    sum_v = 0
    for t in trades:
        sum_pv += t.price * t.size
        sum_v += t.size
    if sum_v == 0:
        raise ValueError("zero executed volume")
    # VWAP/P_r with VWAP in ticks and P_r in half-ticks -> 2*sum_pv / (sum_v*p_r)
    signed = math.log(2 * sum_pv / (sum_v * p_r_half_ticks))
    pi = signed if side is Side.BUY else -signed
    return pi, Fraction(sum_pv, sum_v)


def trade_returns(tape: Sequence[Trade]) -> np.ndarray:
    """Log return between consecutive tape trades; the first entry is NaN."""
    n = len(tape)
    out = np.full(n, np.nan)
    if n == 0:
        return out
    logs = np.log(np.fromiter((t.price for t in tape), dtype=float, count=n))
    out[1:] = logs[1:] - logs[:-1]
    return out


def prior_volatility(
    tape: Sequence[Trade],
    returns: np.ndarray,
    anchor_ms: int,
    window_ms: int = DEFAULT_WINDOW_MS,
    times: Sequence[int] | None = None,
) -> float | None:
    """Mean absolute trade return in [anchor - window, anchor); None if empty."""
    if times is None:
        times = [t.timestamp for t in tape]
    lo = bisect_left(times, anchor_ms - window_ms)
    hi = bisect_left(times, anchor_ms)
    vals = returns[lo:hi]
    vals = vals[~np.isnan(vals)]
    if vals.size == 0:
        return None
    return float(np.abs(vals).mean())


def split_by_volume(
    transactions: Sequence[InstitutionalTransaction],
) -> tuple[list[InstitutionalTransaction], list[InstitutionalTransaction]]:
    """Split into equal-size subsets by executed volume (median goes large).

    Ties are broken by (volume, anchor time, order id) so the split is
    deterministic.
    """
    if len(transactions) < 2:
        raise ValueError("need at least two transactions to split")
    ordered = sorted(transactions, key=lambda tx: (tx.executed, tx.anchor_ms, tx.order_id))
    half = len(ordered) // 2
    return ordered[:half], ordered[half:]


# -- event study -------------------------------------------------------------


def n_bins(window_ms: int, bin_ms: int) -> int:
    if window_ms <= 0 or bin_ms <= 0 or window_ms % bin_ms:
        raise ValueError("window must be a positive multiple of the bin width")
    return 2 * (window_ms // bin_ms) + 1


def bin_labels(window_ms: int, bin_ms: int) -> list[str]:
    k = window_ms // bin_ms
    w, b = window_ms // 1000, bin_ms // 1000
    labels = [f"{-w + i * b}~{-w + (i + 1) * b}" for i in range(k - 1)]
    labels.append(f"{-b}~0-")
    labels.append("0")
    labels.append(f"0+~{b}")
    labels.extend(f"{b + i * b}~{2 * b + i * b}" for i in range(k - 1))
    return labels


@dataclass(slots=True)
class EventSamples:
    """Per-(side, bin) raw samples, mergeable across stocks."""

    window_ms: int
    bin_ms: int
    r: dict[tuple[Side, int], list[float]] = field(default_factory=dict)
    c: dict[tuple[Side, int], list[float]] = field(default_factory=dict)
    assigned: dict[tuple[Side, int], int] = field(default_factory=dict)
    truncated_anchors: int = 0

    def merge(self, other: "EventSamples") -> None:
        if (self.window_ms, self.bin_ms) != (other.window_ms, other.bin_ms):
            raise ValueError("cannot merge event samples with different binnings")
        for key, vals in other.r.items():
            self.r.setdefault(key, []).extend(vals)
        for key, vals in other.c.items():
            self.c.setdefault(key, []).extend(vals)
        for key, cnt in other.assigned.items():
            self.assigned[key] = self.assigned.get(key, 0) + cnt
        self.truncated_anchors += other.truncated_anchors


@dataclass(frozen=True, slots=True)
class EventBinRow:
    label: str
    mean_r: dict[Side, float | None]
    mean_c: dict[Side, float | None]
    count: dict[Side, int]
    t_abs_r: TTestResult | None


@dataclass(frozen=True, slots=True)
class EventStudyTable:
    subset: Subset
    window_ms: int
    bin_ms: int
    rows: tuple[EventBinRow, ...]
    anova_c: dict[Side, AnovaResult | None]
    truncated_anchors: int


def accumulate_event_samples(
    tape: Sequence[Trade],
    returns: np.ndarray,
    trade_c_cny: Sequence[float | None],
    transactions: Iterable[InstitutionalTransaction],
    window_ms: int = DEFAULT_WINDOW_MS,
    bin_ms: int = DEFAULT_BIN_MS,
) -> EventSamples:
    """Bin the trades surrounding each transaction anchor (one stock's tape).

    Every tape trade within the window lands in exactly one bin per anchor;
    the anchor's own component trades form the T=0 bin, where the C sample is
    the order's pre-execution book-structure value rather than per-fill gaps.
    """
    total_bins = n_bins(window_ms, bin_ms)
    t0 = total_bins // 2
    samples = EventSamples(window_ms, bin_ms)
    times = [t.timestamp for t in tape]

    for tx in transactions:
        side = tx.side
        anchor = tx.anchor_ms
        comp_lo, comp_hi = tx.tape_slice
        bounds = session_bounds(anchor)
        if bounds is not None and (anchor - window_ms < bounds[0] or anchor + window_ms > bounds[1]):
            samples.truncated_anchors += 1
        lo = bisect_left(times, anchor - window_ms)
        hi = bisect_right(times, anchor + window_ms)
        for i in range(lo, hi):
            if comp_lo <= i < comp_hi:
                b = t0
            else:
                delta = times[i] - anchor
                if delta == 0:
                    # same millisecond as the anchor: tape order decides
                    b = t0 - 1 if i < comp_lo else t0 + 1
                elif delta < 0:
                    b = (delta + window_ms) // bin_ms
                else:
                    b = t0 + (delta + bin_ms - 1) // bin_ms
            key = (side, b)
            samples.assigned[key] = samples.assigned.get(key, 0) + 1
            ret = returns[i]
            if not np.isnan(ret):
                samples.r.setdefault(key, []).append(float(ret))
            if b == t0:
                if i == comp_lo and tx.c_before is not None:
                    # one structure sample per transaction, on the pre-order book
                    samples.c.setdefault(key, []).append(tx.c_before.c_cny_shares)
            else:
                c_val = trade_c_cny[i]
                if c_val is not None:
                    samples.c.setdefault(key, []).append(c_val)
    return samples


def finalize_event_study(samples: EventSamples, subset: Subset) -> EventStudyTable:
    """Means, per-bin Welch t on |R| (purchases vs sales) and per-side ANOVA on C."""
    total_bins = n_bins(samples.window_ms, samples.bin_ms)
    labels = bin_labels(samples.window_ms, samples.bin_ms)
    rows = []
    for b in range(total_bins):
        mean_r: dict[Side, float | None] = {}
        mean_c: dict[Side, float | None] = {}
        count: dict[Side, int] = {}
        for side in (Side.BUY, Side.SELL):
            key = (side, b)
            r_vals = samples.r.get(key, [])
            c_vals = samples.c.get(key, [])
            mean_r[side] = float(np.mean(r_vals)) if r_vals else None
            mean_c[side] = float(np.mean(c_vals)) if c_vals else None
            count[side] = samples.assigned.get(key, 0)
        buy_abs = np.abs(samples.r.get((Side.BUY, b), []))
        sell_abs = np.abs(samples.r.get((Side.SELL, b), []))
        t_res = None
        if buy_abs.size >= 2 and sell_abs.size >= 2 and (buy_abs.var() > 0 or sell_abs.var() > 0):
            t_res = welch_t(buy_abs, sell_abs)
        rows.append(EventBinRow(labels[b], mean_r, mean_c, count, t_res))
    anova_c: dict[Side, AnovaResult | None] = {}
    for side in (Side.BUY, Side.SELL):
        groups = [samples.c[(side, b)] for b in range(total_bins) if samples.c.get((side, b))]
        if len(groups) >= 2 and sum(len(g) for g in groups) > len(groups):
            anova_c[side] = anova_oneway(groups)
        else:
            anova_c[side] = None
    return EventStudyTable(
        subset, samples.window_ms, samples.bin_ms, tuple(rows), anova_c, samples.truncated_anchors
    )


def event_study(
    tape: Sequence[Trade],
    returns: np.ndarray,
    trade_c_cny: Sequence[float | None],
    transactions: Sequence[InstitutionalTransaction],
    subset: Subset = Subset.TOTAL,
    window_ms: int = DEFAULT_WINDOW_MS,
    bin_ms: int = DEFAULT_BIN_MS,
) -> EventStudyTable:
    """Single-stock convenience wrapper: accumulate then finalize."""
    samples = accumulate_event_samples(tape, returns, trade_c_cny, transactions, window_ms, bin_ms)
    return finalize_event_study(samples, subset)
