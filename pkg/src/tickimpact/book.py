"""Limit order book replay with price-time priority matching.

The book keeps one FIFO queue per price level. Incoming submits that cross
the opposite best execute against resting orders in price-then-time order
until exhausted or no longer crossing; the remainder rests. Executions
always print at the resting order's limit price.

All arithmetic is integral: prices in ticks, sizes in shares, mid prices in
half-ticks (best_bid + best_ask), so the book-structure variable is an exact
integer in half-tick x share units.
"""
from __future__ import annotations

from bisect import bisect_left, insort
from collections import deque
from dataclasses import dataclass

from .orderflow import Action, OrderEvent, Side, TraderType


class BookError(Exception):
    """Base class for book-level rejections."""


class CancelRejected(BookError):
    """Cancel referenced an order that is not resting."""


class UndefinedMidError(BookError):
    """Mid price requested while at least one side of the book is empty."""


class InsufficientDepthError(BookError):
    """Walk volume exceeds the total resting volume on the opposite side."""

    def __init__(self, requested: int, attainable: int):
        super().__init__(f"requested {requested} shares but only {attainable} are resting")
        self.requested = requested
        self.attainable = attainable


@dataclass(frozen=True, slots=True)
class Trade:
    """One fill: aggressor order against a resting order, at the resting price."""

    seq: int
    timestamp: int
    price: int
    size: int
    aggressor_side: Side
    aggressor_order_id: int
    resting_order_id: int
    aggressor_trader_type: TraderType


@dataclass(frozen=True, slots=True)
class BookStructureValue:
    """Joint depth-and-gap measure of the ladder an order of size V consumes.

    c_half_ticks is the exact sum over consumed levels of
    gap(level price, mid) * consumed volume with gaps in half-ticks; the last
    level contributes only the partial volume needed to reach V.
    """

    c_half_ticks: int
    levels: int
    side: Side
    volume: int
    p_mid_half_ticks: int
    tick_size: float = 0.01

    @property
    def c_cny_shares(self) -> float:
        return self.c_half_ticks * self.tick_size / 2.0

    @property
    def c_tick_shares(self) -> float:
        return self.c_half_ticks / 2.0


@dataclass(frozen=True, slots=True)
class OrderClassification:
    effective_market: bool
    full_filled: bool


def classify_order(event: OrderEvent, trades: list[Trade]) -> OrderClassification:
    """Classify a submit from the fills it produced on arrival.

    Effective market order: crossed the opposite best at submission (at least
    one immediate fill). Full-filled: the whole submitted size executed with
    no resting remainder.
    """
    if not trades:
        return OrderClassification(False, False)
    executed = sum(t.size for t in trades)
    return OrderClassification(True, executed == event.size)


class LimitOrderBook:
    """Two-sided price ladder with FIFO time priority inside each level.

    Queue entries are mutable [order_id, remaining, seq] triples. One book
    serves one stock-day and is mutated strictly in event order.
    """

    __slots__ = ("tick_size", "_bid_prices", "_ask_prices", "_bids", "_asks", "_live")

    def __init__(self, tick_size: float = 0.01):
        self.tick_size = tick_size
        self._bid_prices: list[int] = []  # ascending; best bid is the last entry
        self._ask_prices: list[int] = []  # ascending; best ask is the first entry
        self._bids: dict[int, deque] = {}
        self._asks: dict[int, deque] = {}
        self._live: dict[int, tuple[Side, int, list]] = {}

    # -- quotes ---------------------------------------------------------

    @property
    def best_bid(self) -> int | None:
        return self._bid_prices[-1] if self._bid_prices else None

    @property
    def best_ask(self) -> int | None:
        return self._ask_prices[0] if self._ask_prices else None

    def best_quotes(self) -> tuple[int | None, int | None, int | None]:
        """(best_bid, best_ask, mid in half-ticks); mid only when two-sided."""
        bb = self.best_bid
        ba = self.best_ask
        mid = bb + ba if bb is not None and ba is not None else None
        return bb, ba, mid

    # -- event application ----------------------------------------------

    def apply(self, event: OrderEvent) -> list[Trade]:
        """Apply one validated event; return the fills it triggered.

        Raises CancelRejected for cancels whose target is no longer live
        (the book is left unchanged).
        """
        if event.action is Action.CANCEL:
            self.cancel(event.order_id)
            return []
        if event.order_id in self._live:
            raise BookError(f"order id {event.order_id} already live")
        if event.side is Side.BUY:
            return self._submit_buy(event)
        return self._submit_sell(event)

    def _submit_buy(self, event: OrderEvent) -> list[Trade]:
        remaining = event.size
        limit = event.price
        trades: list[Trade] = []
        ask_prices = self._ask_prices
        asks = self._asks
        while remaining and ask_prices and ask_prices[0] <= limit:
            price = ask_prices[0]
            queue = asks[price]
            while remaining and queue:
                entry = queue[0]
                take = entry[1] if entry[1] <= remaining else remaining
                trades.append(
                    Trade(event.seq, event.timestamp, price, take, Side.BUY,
                          event.order_id, entry[0], event.trader_type)
                )
                entry[1] -= take
                remaining -= take
                if entry[1] == 0:
                    queue.popleft()
                    del self._live[entry[0]]
            if not queue:
                del asks[price]
                ask_prices.pop(0)
        if remaining:
            self._rest(Side.BUY, limit, remaining, event.order_id, event.seq)
        return trades

    def _submit_sell(self, event: OrderEvent) -> list[Trade]:
        remaining = event.size
        limit = event.price
        trades: list[Trade] = []
        bid_prices = self._bid_prices
        bids = self._bids
        while remaining and bid_prices and bid_prices[-1] >= limit:
            price = bid_prices[-1]
            queue = bids[price]
            while remaining and queue:
                entry = queue[0]
                take = entry[1] if entry[1] <= remaining else remaining
                trades.append(
                    Trade(event.seq, event.timestamp, price, take, Side.SELL,
                          event.order_id, entry[0], event.trader_type)
                )
                entry[1] -= take
                remaining -= take
                if entry[1] == 0:
                    queue.popleft()
                    del self._live[entry[0]]
            if not queue:
                del bids[price]
                bid_prices.pop()
        if remaining:
            self._rest(Side.SELL, limit, remaining, event.order_id, event.seq)
        return trades

    def _rest(self, side: Side, price: int, size: int, order_id: int, seq: int) -> None:
        entry = [order_id, size, seq]
        if side is Side.BUY:
            queue = self._bids.get(price)
            if queue is None:
                queue = self._bids[price] = deque()
                insort(self._bid_prices, price)
        else:
            queue = self._asks.get(price)
            if queue is None:
                queue = self._asks[price] = deque()
                insort(self._ask_prices, price)
        queue.append(entry)
        self._live[order_id] = (side, price, entry)

    def cancel(self, order_id: int) -> int:
        """Remove the remaining size of a live order; returns the size removed."""
        info = self._live.get(order_id)
        if info is None:
            raise CancelRejected(f"cancel target {order_id} is not live")
        side, price, entry = info
        removed = entry[1]
        if side is Side.BUY:
            queue = self._bids[price]
            queue.remove(entry)
            if not queue:
                del self._bids[price]
                self._bid_prices.pop(bisect_left(self._bid_prices, price))
        else:
            queue = self._asks[price]
            queue.remove(entry)
            if not queue:
                del self._asks[price]
                self._ask_prices.pop(bisect_left(self._ask_prices, price))
        del self._live[order_id]
        return removed

    # -- inspection ------------------------------------------------------

    def is_live(self, order_id: int) -> bool:
        return order_id in self._live

    def live_order_count(self) -> int:
        return len(self._live)

    def resting_shares(self) -> int:
        return sum(info[2][1] for info in self._live.values())

    def side_depth(self, side: Side) -> int:
        levels = self._bids if side is Side.BUY else self._asks
        return sum(e[1] for q in levels.values() for e in q)

    def resting_orders(self) -> list[tuple[str, int, int, int, int]]:
        """Flat deterministic dump: (side, price, seq, order_id, remaining).

        Bids best-first (descending price), then asks best-first (ascending),
        FIFO inside each level.
        """
        out: list[tuple[str, int, int, int, int]] = []
        for price in reversed(self._bid_prices):
            for oid, rem, seq in self._bids[price]:
                out.append(("B", price, seq, oid, rem))
        for price in self._ask_prices:
            for oid, rem, seq in self._asks[price]:
                out.append(("S", price, seq, oid, rem))
        return out

    def depth_snapshot(self, n_levels: int | None = None) -> tuple[list[tuple[int, int]], list[tuple[int, int]]]:
        """Top-n aggregated ladders: bids best-first, asks best-first."""
        bid_levels = [(p, sum(e[1] for e in self._bids[p])) for p in reversed(self._bid_prices)]
        ask_levels = [(p, sum(e[1] for e in self._asks[p])) for p in self._ask_prices]
        if n_levels is not None:
            bid_levels = bid_levels[:n_levels]
            ask_levels = ask_levels[:n_levels]
        return bid_levels, ask_levels

    def seed_resting(self, side: Side, price: int, size: int, order_id: int, seq: int = 0) -> None:
        """Install an opening-book order without matching (snapshot load)."""
        if price <= 0 or size <= 0:
            raise BookError("opening orders need positive price and size")
        if order_id in self._live:
            raise BookError(f"order id {order_id} already live")
        self._rest(side, price, size, order_id, seq)

    # -- book-structure variable -----------------------------------------

    def compute_structure(self, side: Side, volume: int) -> BookStructureValue:
        """Walk the ladder opposite to an aggressor of the given side.

        Accumulates gap(level, mid) * consumed volume level by level until
        the cumulative consumed volume reaches `volume`; the last level
        contributes only the partial remainder. Requires a two-sided book.
        """
        if volume < 0:
            raise ValueError("volume must be non-negative")
        bb, ba, mid = self.best_quotes()
        if mid is None:
            raise UndefinedMidError("book is one-sided, mid price undefined")
        if volume == 0:
            return BookStructureValue(0, 0, side, 0, mid, self.tick_size)
        need = volume
        c = 0
        levels = 0
        if side is Side.BUY:
            for price in self._ask_prices:
                level_vol = sum(e[1] for e in self._asks[price])
                take = level_vol if level_vol <= need else need
                c += (2 * price - mid) * take
                levels += 1
                need -= take
                if need == 0:
                    break
        else:
            for price in reversed(self._bid_prices):
                level_vol = sum(e[1] for e in self._bids[price])
                take = level_vol if level_vol <= need else need
                c += (mid - 2 * price) * take
                levels += 1
                need -= take
                if need == 0:
                    break
        if need:
            raise InsufficientDepthError(volume, volume - need)
        return BookStructureValue(c, levels, side, volume, mid, self.tick_size)
