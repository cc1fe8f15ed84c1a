"""Daily close adjustment and drawup/drawdown segmentation.

Closing prices are backward-adjusted for dividends and rights so that
ex-date jumps disappear, then partitioned into alternating drawup and
drawdown runs. A counter-move interrupts the running trend only when it is
at least theta times the trend's magnitude AND at least kappa times its
daily mean; smaller counter-moves are absorbed.

Magnitudes are log-price changes. A segment's n_days counts the daily
changes composing it, so the first close of a series is the day-zero
baseline and consecutive segments share their boundary extremum date.
"""
from __future__ import annotations

import bisect
import csv
import logging
import math
from dataclasses import dataclass
from datetime import date as Date
from enum import Enum
from pathlib import Path
from typing import IO, Iterable, Sequence

from .orderflow import CorporateAction, StreamFormatError, _open_text

logger = logging.getLogger(__name__)


class AdjustmentError(ValueError):
    """Corporate-action adjustment produced a non-positive factor."""


class TrendKind(str, Enum):
    DRAWUP = "drawup"
    DRAWDOWN = "drawdown"


class RatioGroup(str, Enum):
    HIGH = "r>=0.55"
    MIDDLE = "0.45<r<0.55"
    LOW = "r<=0.45"


HIGH_RATIO_THRESHOLD = 0.55
LOW_RATIO_THRESHOLD = 0.45


@dataclass(frozen=True, slots=True)
class DailyClose:
    date: Date
    raw_close: float
    adjusted_close: float

    def __post_init__(self):
        if self.raw_close <= 0 or self.adjusted_close <= 0:
            raise ValueError("closes must be positive")


@dataclass(frozen=True, slots=True)
class TrendParams:
    """Continuation convention: interruption needs BOTH thresholds exceeded."""

    theta: float = 0.30  # fraction of the previous trend's magnitude
    kappa: float = 3.0  # multiple of the previous trend's daily mean

    def __post_init__(self):
        if not 0 < self.theta < 1:
            raise ValueError("theta must lie in (0, 1)")
        if self.kappa <= 0:
            raise ValueError("kappa must be positive")


@dataclass(frozen=True, slots=True)
class TrendSegment:
    kind: TrendKind
    start_date: Date
    end_date: Date
    n_days: int  # daily changes owned by the segment
    magnitude: float  # log-price change, extremum to extremum
    degenerate: bool = False

    @property
    def daily_mean(self) -> float:
        return abs(self.magnitude) / self.n_days


def adjust_prices(
    closes: Sequence[DailyClose],
    actions: Sequence[CorporateAction],
    stock_code: str | None = None,
) -> list[DailyClose]:
    """Backward-adjust a date-ordered close series for corporate actions.

    For each ex-date with cum-close P, total cash D, bonus ratio b and
    rights ratio k at price p_k, the theoretical ex-price is
    (P - D + k * p_k) / (1 + b + k); every close strictly before the ex-date
    is multiplied by factor ex/P, compounding across multiple actions.
    """
    if not closes:
        return []
    for a, b in zip(closes, closes[1:]):
        if b.date <= a.date:
            raise ValueError("closes must be strictly date-ordered")
    relevant: list[CorporateAction] = []
    for action in actions:
        if stock_code is not None and action.stock_code != stock_code:
            logger.warning("ignoring corporate action for unknown stock %s", action.stock_code)
            continue
        relevant.append(action)

    # combine same-date actions into a single ex-price formula
    by_date: dict[Date, list[CorporateAction]] = {}
    for action in relevant:
        by_date.setdefault(action.ex_date, []).append(action)

    factors: list[tuple[Date, float]] = []
    dates = [c.date for c in closes]
    for ex_date in sorted(by_date):
        idx = bisect.bisect_left(dates, ex_date)
        if idx == 0:
            continue  # nothing trades before the ex-date, no-op
        cum = closes[idx - 1].raw_close
        cash = sum(a.cash_per_share for a in by_date[ex_date])
        bonus = sum(a.bonus_ratio for a in by_date[ex_date])
        rights = sum(a.rights_ratio for a in by_date[ex_date])
        rights_value = sum(a.rights_ratio * a.rights_price for a in by_date[ex_date])
        ex_price = (cum - cash + rights_value) / (1.0 + bonus + rights)
        if ex_price <= 0:
            raise AdjustmentError(
                f"theoretical ex-price {ex_price:.4f} on {ex_date} is not positive"
            )
        factors.append((ex_date, ex_price / cum))

    adjusted: list[DailyClose] = []
    # suffix product: a close is scaled by every factor whose ex-date lies after it
    running = 1.0
    fi = len(factors) - 1
    for close in reversed(closes):
        while fi >= 0 and factors[fi][0] > close.date:
            running *= factors[fi][1]
            fi -= 1
        adjusted.append(DailyClose(close.date, close.raw_close, close.raw_close * running))
    adjusted.reverse()
    return adjusted


def segment_trends(closes: Sequence[DailyClose], params: TrendParams = TrendParams()) -> list[TrendSegment]:
    """Greedy left-to-right drawup/drawdown segmentation of adjusted closes.

    The running trend absorbs a counter-move unless the counter-move's log
    magnitude reaches both theta * |trend magnitude| and
    kappa * trend daily mean; then the trend ends at its extremum and the
    opposite segment starts there. A constant series yields one degenerate
    zero-magnitude segment.
    """
    if len(closes) < 2:
        raise ValueError("need at least two closes to segment")
    logs = [math.log(c.adjusted_close) for c in closes]
    dates = [c.date for c in closes]
    n = len(logs)

    direction = 0
    first_move = 1
    for t in range(1, n):
        if logs[t] != logs[t - 1]:
            direction = 1 if logs[t] > logs[t - 1] else -1
            first_move = t
            break
    if direction == 0:
        return [TrendSegment(TrendKind.DRAWUP, dates[0], dates[-1], n - 1, 0.0, degenerate=True)]

    segments: list[TrendSegment] = []
    start = 0
    ext = first_move

    def emit(d: int, s: int, e: int, end_idx: int) -> None:
        kind = TrendKind.DRAWUP if d > 0 else TrendKind.DRAWDOWN
        segments.append(
            TrendSegment(kind, dates[s], dates[end_idx], end_idx - s, logs[e] - logs[s])
        )

    for t in range(first_move + 1, n):
        x = logs[t]
        if (direction > 0 and x >= logs[ext]) or (direction < 0 and x <= logs[ext]):
            ext = t
            continue
        counter = abs(x - logs[ext])
        magnitude = abs(logs[ext] - logs[start])
        daily_mean = magnitude / (ext - start)
        if counter >= params.theta * magnitude and counter >= params.kappa * daily_mean:
            emit(direction, start, ext, ext)
            direction = -direction
            start = ext
            ext = t
    emit(direction, start, ext, n - 1)
    return segments


def drawup_ratio(segments: Sequence[TrendSegment]) -> float:
    """Fraction of trading days (daily changes) belonging to drawup segments."""
    if not segments:
        raise ValueError("no segments")
    total = sum(s.n_days for s in segments)
    up = sum(s.n_days for s in segments if s.kind is TrendKind.DRAWUP and not s.degenerate)
    return up / total


def ratio_group(r: float) -> RatioGroup:
    if r >= HIGH_RATIO_THRESHOLD:
        return RatioGroup.HIGH
    if r <= LOW_RATIO_THRESHOLD:
        return RatioGroup.LOW
    return RatioGroup.MIDDLE


def segment_for_date(segments: Sequence[TrendSegment], day: Date) -> TrendSegment | None:
    """Segment owning a date; boundary extrema belong to the earlier segment."""
    if not segments:
        return None
    first = segments[0]
    if day == first.start_date:
        return first
    for seg in segments:
        if seg.start_date < day <= seg.end_date:
            return seg
    return None


def parse_daily_closes(source: str | Path | IO[str]) -> dict[str, list[DailyClose]]:
    """Read the close CSV `stock_code,date,close_cny` grouped per stock."""
    fh = _open_text(source)
    close_fh = isinstance(source, (str, Path))
    try:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or ",".join(header) != "stock_code,date,close_cny":
            raise StreamFormatError(f"close header mismatch: {header!r}")
        out: dict[str, list[DailyClose]] = {}
        for row in reader:
            if not row:
                continue
            y, m, d = row[1].split("-")
            px = float(row[2])
            out.setdefault(row[0], []).append(DailyClose(Date(int(y), int(m), int(d)), px, px))
        for series in out.values():
            series.sort(key=lambda c: c.date)
        return out
    finally:
        if close_fh:
            fh.close()


def write_daily_closes(closes_by_stock: dict[str, Iterable[DailyClose]], dest: str | Path | IO[str]) -> None:
    own = isinstance(dest, (str, Path))
    fh = open(dest, "w", encoding="utf-8", newline="") if own else dest
    try:
        fh.write("stock_code,date,close_cny\n")
        for stock in sorted(closes_by_stock):
            for c in closes_by_stock[stock]:
                fh.write(f"{stock},{c.date.isoformat()},{c.raw_close:.6g}\n")
    finally:
        if own:
            fh.close()
