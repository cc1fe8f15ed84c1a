"""Replay an ordered event stream through the book, harvesting analytics.

Besides the trade tape, the replay records for every fill the exact
structure contribution on the pre-fill book (the fill executes at the
current best, so its gap to the mid is half the prevailing spread), and
assembles one InstitutionalTransaction per institutional effective-market
order: reference price, VWAP, price impact, pre-order book structure and
prior volatility.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .book import BookStructureValue, CancelRejected, LimitOrderBook, Trade
from .impact import InstitutionalTransaction, price_impact, prior_volatility, trade_returns
from .orderflow import Action, OrderEvent, Side, TraderType


@dataclass(slots=True)
class ReplayCounters:
    submitted_shares: int = 0
    canceled_shares: int = 0
    rejected_cancels: int = 0


@dataclass(slots=True)
class ReplayResult:
    stock_code: str
    book: LimitOrderBook
    tape: list[Trade]
    trade_c_cny: list[float | None]
    returns: np.ndarray
    transactions: list[InstitutionalTransaction]
    exclusions: dict[str, int]
    counters: ReplayCounters

    def executed_shares(self) -> int:
        return sum(t.size for t in self.tape)

    def conservation(self) -> dict[str, int]:
        """Share-accounting identity terms; `gap` must be zero on any replay."""
        executed = self.executed_shares()
        resting = self.book.resting_shares()
        c = self.counters
        return {
            "submitted": c.submitted_shares,
            "executed_twice": 2 * executed,
            "resting": resting,
            "canceled": c.canceled_shares,
            "gap": c.submitted_shares - 2 * executed - resting - c.canceled_shares,
        }


def replay_events(
    events: Sequence[OrderEvent],
    tick_size: float = 0.01,
    opening_bids: Sequence[tuple[int, int]] = (),
    opening_asks: Sequence[tuple[int, int]] = (),
) -> ReplayResult:
    """Replay one stock-day. Events must be ordered and single-stock.

    Optional opening ladders [(price_ticks, size), ...] are installed as
    synthetic resting orders (negative ids) before the first event.
    """
    if events:
        stock = events[0].stock_code
        if any(e.stock_code != stock for e in events):
            raise ValueError("replay_events expects a single stock")
    else:
        stock = ""
    book = LimitOrderBook(tick_size)
    counters = ReplayCounters()
    seed_id = -1
    for price, size in opening_bids:
        book.seed_resting(Side.BUY, price, size, seed_id)
        counters.submitted_shares += size
        seed_id -= 1
    for price, size in opening_asks:
        book.seed_resting(Side.SELL, price, size, seed_id)
        counters.submitted_shares += size
        seed_id -= 1

    tape: list[Trade] = []
    trade_c: list[float | None] = []
    pending: list[tuple[OrderEvent, int, int, int | None, int | None]] = []
    exclusions: dict[str, int] = {}
    last_trade_price: int | None = None

    def bump(reason: str) -> None:
        exclusions[reason] = exclusions.get(reason, 0) + 1

    for event in events:
        if event.action is Action.CANCEL:
            try:
                counters.canceled_shares += book.cancel(event.order_id)
            except CancelRejected:
                counters.rejected_cancels += 1
            continue
        counters.submitted_shares += event.size
        pre_bid = book.best_bid
        pre_ask = book.best_ask
        trades = book.apply(event)
        if not trades:
            continue
        start = len(tape)
        tape.extend(trades)
        # per-fill structure value: the aggressor's own side never moves while
        # it matches, so the gap to the mid is the live spread at each fill
        if event.side is Side.BUY:
            own_best = pre_bid
            for t in trades:
                trade_c.append((t.price - own_best) * t.size * tick_size if own_best is not None else None)
        else:
            own_best = pre_ask
            for t in trades:
                trade_c.append((own_best - t.price) * t.size * tick_size if own_best is not None else None)
        last = trades[-1].price
        stop = len(tape)

        if event.trader_type is TraderType.INSTITUTION:
            if pre_bid is not None and pre_ask is not None:
                p_r = pre_bid + pre_ask
                p_r_is_mid = True
            elif last_trade_price is not None:
                p_r = 2 * last_trade_price
                p_r_is_mid = False
            else:
                bump("no_reference_price")
                last_trade_price = last
                continue
            pending.append((event, start, stop, p_r, 1 if p_r_is_mid else 0))
        last_trade_price = last

    returns = trade_returns(tape)
    times = [t.timestamp for t in tape]
    transactions: list[InstitutionalTransaction] = []
    for event, start, stop, p_r, is_mid in pending:
        trades = tuple(tape[start:stop])
        executed = sum(t.size for t in trades)
        pi, vwap = price_impact(trades, p_r, event.side)
        c_before = _structure_from_fills(trades, p_r, event.side, tick_size) if is_mid else None
        if c_before is None:
            bump("missing_c")
        anchor = trades[0].timestamp
        v_p = prior_volatility(tape, returns, anchor, times=times)
        if v_p is None:
            bump("missing_v_p")
        transactions.append(
            InstitutionalTransaction(
                stock_code=event.stock_code,
                seq=event.seq,
                order_id=event.order_id,
                side=event.side,
                submitted=event.size,
                executed=executed,
                trades=trades,
                tape_slice=(start, stop),
                p_r_half_ticks=p_r,
                p_r_is_mid=bool(is_mid),
                vwap_ticks=vwap,
                pi=pi,
                c_before=c_before,
                v_p=v_p,
                full_filled=executed == event.size,
                anchor_ms=anchor,
            )
        )
    return ReplayResult(stock, book, tape, trade_c, returns, transactions, exclusions, counters)


def _structure_from_fills(
    trades: tuple[Trade, ...], p_mid_half_ticks: int, side: Side, tick_size: float
) -> BookStructureValue:
    """Pre-order ladder walk reconstructed from the fills themselves.

    Price-time priority consumes the opposite ladder from the best level, so
    the fills enumerate exactly the consumed (level, volume) pairs; summing
    their gaps against the fixed pre-order mid reproduces the walk, with the
    partial last level handled for free.
    """
    c = 0
    levels = 0
    prev_price = None
    volume = 0
    for t in trades:
        if t.price != prev_price:
            levels += 1
            prev_price = t.price
        gap = 2 * t.price - p_mid_half_ticks if side is Side.BUY else p_mid_half_ticks - 2 * t.price
        c += gap * t.size
        volume += t.size
    return BookStructureValue(c, levels, side, volume, p_mid_half_ticks, tick_size)


def split_by_stock(events: Sequence[OrderEvent]) -> dict[str, list[OrderEvent]]:
    """Partition a mixed stream per stock, preserving relative order."""
    out: dict[str, list[OrderEvent]] = {}
    for e in events:
        out.setdefault(e.stock_code, []).append(e)
    return out


def replay_stream(events: Sequence[OrderEvent], tick_size: float = 0.01) -> dict[str, ReplayResult]:
    return {
        stock: replay_events(stock_events, tick_size)
        for stock, stock_events in sorted(split_by_stock(events).items())
    }
