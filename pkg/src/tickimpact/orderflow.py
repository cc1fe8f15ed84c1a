"""Order-flow ingestion: event stream parsing, corporate actions, validation.

The canonical event record is one submission or cancellation with a
trader-type flag. Prices are integer ticks (one tick = 0.01 CNY by default)
and sizes integer shares, so downstream matching and VWAP stay exact.
"""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from datetime import date as Date
from enum import Enum
from pathlib import Path
from typing import IO, Iterable, Sequence

logger = logging.getLogger(__name__)

# Continuous-auction sessions, milliseconds within the trading day
# (09:30-11:30 and 13:00-15:00). The opening call auction is out of scope.
SESSIONS_MS: tuple[tuple[int, int], ...] = (
    (34_200_000, 41_400_000),
    (46_800_000, 54_000_000),
)

EVENT_HEADER = "stock_code,seq,timestamp_ms,order_id,trader_id,trader_type,side,action,price_ticks,size"
ACTION_HEADER = "stock_code,ex_date,kind,cash_per_share,bonus_ratio,rights_ratio,rights_price"
SUMMARY_HEADER = "stock_code,float_cap,n_orders,total_size"
CLOSE_HEADER = "stock_code,date,close_cny"


class StreamFormatError(ValueError):
    """Unrecoverable input defect: bad header, unreadable source, corrupt sequencing."""


class TraderType(str, Enum):
    INSTITUTION = "I"
    INDIVIDUAL = "P"


class Side(str, Enum):
    BUY = "B"
    SELL = "S"


class Action(str, Enum):
    SUBMIT = "SUBMIT"
    CANCEL = "CANCEL"


class ActionKind(str, Enum):
    CASH = "CASH"
    BONUS = "BONUS"
    RIGHTS = "RIGHTS"


@dataclass(frozen=True, slots=True)
class OrderEvent:
    """One submission or cancellation, the atomic input record."""

    stock_code: str
    seq: int
    timestamp: int  # ms within the trading day
    order_id: int
    trader_id: str
    trader_type: TraderType
    side: Side
    action: Action
    price: int  # ticks
    size: int  # shares


@dataclass(frozen=True, slots=True)
class CorporateAction:
    stock_code: str
    ex_date: Date
    kind: ActionKind
    cash_per_share: float = 0.0
    bonus_ratio: float = 0.0
    rights_ratio: float = 0.0
    rights_price: float = 0.0


@dataclass(frozen=True, slots=True)
class StockSummary:
    stock_code: str
    float_cap: float  # million CNY
    n_orders: int
    total_size: int


@dataclass(frozen=True, slots=True)
class RejectedRow:
    line_no: int
    reason: str
    raw: str


@dataclass(slots=True)
class ParseResult:
    events: list[OrderEvent]
    accepted: int
    rejected: list[RejectedRow]


@dataclass(frozen=True, slots=True)
class Finding:
    kind: str
    message: str
    seqs: tuple[int, ...]
    hard: bool


@dataclass(slots=True)
class ValidationReport:
    findings: list[Finding] = field(default_factory=list)

    @property
    def hard_findings(self) -> list[Finding]:
        return [f for f in self.findings if f.hard]

    @property
    def soft_findings(self) -> list[Finding]:
        return [f for f in self.findings if not f.hard]

    @property
    def accepted(self) -> bool:
        return not self.hard_findings


def in_session(timestamp_ms: int) -> bool:
    return any(lo <= timestamp_ms <= hi for lo, hi in SESSIONS_MS)


def session_bounds(timestamp_ms: int) -> tuple[int, int] | None:
    """Bounds of the continuous session containing the timestamp, if any."""
    for lo, hi in SESSIONS_MS:
        if lo <= timestamp_ms <= hi:
            return lo, hi
    return None


def _open_text(source: str | Path | IO[str]) -> IO[str]:
    if isinstance(source, (str, Path)):
        try:
            return open(source, "r", encoding="utf-8", newline="")
        except OSError as exc:
            raise StreamFormatError(f"cannot read {source}: {exc}") from exc
    return source


def parse_order_events(source: str | Path | IO[str]) -> ParseResult:
    """Parse an order-event CSV into validated events in (timestamp, seq) order.

    Malformed or invariant-violating rows are rejected with line numbers and
    the stream continues; a non-monotone seq within a stock is treated as file
    corruption and raises StreamFormatError.
    """
    fh = _open_text(source)
    close = isinstance(source, (str, Path))
    try:
        header = fh.readline().rstrip("\r\n")
        if header != EVENT_HEADER:
            raise StreamFormatError(f"header mismatch: {header!r}")
        events: list[OrderEvent] = []
        rejected: list[RejectedRow] = []
        last_seq: dict[str, int] = {}
        for line_no, line in enumerate(fh, start=2):
            raw = line.rstrip("\r\n")
            if not raw:
                continue
            parts = raw.split(",")
            if len(parts) != 10:
                rejected.append(RejectedRow(line_no, "wrong field count", raw))
                continue
            try:
                stock = parts[0]
                seq = int(parts[1])
                ts = int(parts[2])
                order_id = int(parts[3])
                trader = parts[4]
                ttype = TraderType(parts[5])
                side = Side(parts[6])
                action = Action(parts[7])
                price = int(parts[8])
                size = int(parts[9])
            except ValueError:
                rejected.append(RejectedRow(line_no, "unparseable field", raw))
                continue
            prev = last_seq.get(stock)
            if prev is not None and seq <= prev:
                raise StreamFormatError(
                    f"non-monotone seq for stock {stock} at line {line_no}: {seq} after {prev}"
                )
            last_seq[stock] = seq
            if action is Action.SUBMIT and (price <= 0 or size <= 0):
                rejected.append(RejectedRow(line_no, "submit with non-positive price or size", raw))
                continue
            if not in_session(ts):
                rejected.append(RejectedRow(line_no, "timestamp outside trading sessions", raw))
                continue
            events.append(OrderEvent(stock, seq, ts, order_id, trader, ttype, side, action, price, size))
        events.sort(key=lambda e: (e.timestamp, e.seq))
        return ParseResult(events, len(events), rejected)
    finally:
        if close:
            fh.close()


def write_order_events(events: Iterable[OrderEvent], dest: str | Path | IO[str]) -> None:
    """Serialize events in the canonical CSV schema (UTF-8, LF endings)."""
    own = isinstance(dest, (str, Path))
    fh = open(dest, "w", encoding="utf-8", newline="") if own else dest
    try:
        fh.write(EVENT_HEADER + "\n")
        for e in events:
            fh.write(
                f"{e.stock_code},{e.seq},{e.timestamp},{e.order_id},{e.trader_id},"
                f"{e.trader_type.value},{e.side.value},{e.action.value},{e.price},{e.size}\n"
            )
    finally:
        if own:
            fh.close()


def validate_stream(events: Sequence[OrderEvent]) -> ValidationReport:
    """Report-only scan for dangling cancels, duplicate ids, session violations.

    Liveness here is bookkeeping-level (submitted and not yet cancelled);
    executions are a matching-stage concern and surface there instead.
    """
    report = ValidationReport()
    live: dict[tuple[str, int], int] = {}
    seen_submit: dict[tuple[str, int], int] = {}
    for e in events:
        key = (e.stock_code, e.order_id)
        if e.action is Action.SUBMIT:
            if key in seen_submit:
                report.findings.append(
                    Finding(
                        "duplicate-order-id",
                        f"order {e.order_id} of stock {e.stock_code} submitted twice",
                        (seen_submit[key], e.seq),
                        hard=True,
                    )
                )
            else:
                seen_submit[key] = e.seq
                live[key] = e.seq
        else:
            if key in live:
                del live[key]
            else:
                report.findings.append(
                    Finding(
                        "dangling-cancel",
                        f"cancel of order {e.order_id} of stock {e.stock_code} has no live target",
                        (e.seq,),
                        hard=True,
                    )
                )
        if not in_session(e.timestamp):
            report.findings.append(
                Finding(
                    "out-of-session",
                    f"event at {e.timestamp} ms lies outside continuous sessions",
                    (e.seq,),
                    hard=False,
                )
            )
    return report


def _parse_date(text: str) -> Date:
    y, m, d = text.split("-")
    return Date(int(y), int(m), int(d))


def parse_corporate_actions(source: str | Path | IO[str]) -> list[CorporateAction]:
    """Parse the corporate-action CSV (kinds CASH, BONUS, RIGHTS)."""
    fh = _open_text(source)
    close = isinstance(source, (str, Path))
    try:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or ",".join(header) != ACTION_HEADER:
            raise StreamFormatError(f"corporate-action header mismatch: {header!r}")
        actions: list[CorporateAction] = []
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            stock, ex_date, kind_s = row[0], _parse_date(row[1]), row[2]
            try:
                kind = ActionKind(kind_s)
            except ValueError:
                raise StreamFormatError(f"unknown corporate-action kind {kind_s!r} at line {line_no}")
            cash = float(row[3]) if row[3] else 0.0
            bonus = float(row[4]) if row[4] else 0.0
            rratio = float(row[5]) if row[5] else 0.0
            rprice = float(row[6]) if row[6] else 0.0
            if min(cash, bonus, rratio, rprice) < 0:
                raise StreamFormatError(f"negative amount in corporate action at line {line_no}")
            if kind is ActionKind.CASH and cash <= 0:
                raise StreamFormatError(f"cash dividend without amount at line {line_no}")
            if kind is ActionKind.BONUS and bonus <= 0:
                raise StreamFormatError(f"bonus share without ratio at line {line_no}")
            if kind is ActionKind.RIGHTS and (rratio <= 0 or rprice <= 0):
                raise StreamFormatError(f"rights issue needs ratio and price at line {line_no}")
            actions.append(CorporateAction(stock, ex_date, kind, cash, bonus, rratio, rprice))
        return actions
    finally:
        if close:
            fh.close()


def write_corporate_actions(actions: Iterable[CorporateAction], dest: str | Path | IO[str]) -> None:
    own = isinstance(dest, (str, Path))
    fh = open(dest, "w", encoding="utf-8", newline="") if own else dest

    def cell(kind_match: bool, value: float) -> str:
        return repr(value) if kind_match else ""

    try:
        fh.write(ACTION_HEADER + "\n")
        for a in actions:
            fh.write(
                f"{a.stock_code},{a.ex_date.isoformat()},{a.kind.value},"
                f"{cell(a.kind is ActionKind.CASH, a.cash_per_share)},"
                f"{cell(a.kind is ActionKind.BONUS, a.bonus_ratio)},"
                f"{cell(a.kind is ActionKind.RIGHTS, a.rights_ratio)},"
                f"{cell(a.kind is ActionKind.RIGHTS, a.rights_price)}\n"
            )
    finally:
        if own:
            fh.close()


def parse_stock_summaries(source: str | Path | IO[str]) -> dict[str, StockSummary]:
    fh = _open_text(source)
    close = isinstance(source, (str, Path))
    try:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or ",".join(header) != SUMMARY_HEADER:
            raise StreamFormatError(f"summary header mismatch: {header!r}")
        out: dict[str, StockSummary] = {}
        for row in reader:
            if not row:
                continue
            s = StockSummary(row[0], float(row[1]), int(row[2]), int(row[3]))
            if s.float_cap < 0 or s.n_orders < 0 or s.total_size < 0:
                raise StreamFormatError(f"negative summary figure for stock {s.stock_code}")
            out[s.stock_code] = s
        return out
    finally:
        if close:
            fh.close()
