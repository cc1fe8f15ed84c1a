"""CSV and plain-text report emission with deterministic formatting.

Floats are rendered at six significant digits everywhere, so regenerating a
report from the same inputs is byte-identical.
"""
from __future__ import annotations

import json
from pathlib import Path
from typing import IO, Iterable, Mapping, Sequence

from .book import LimitOrderBook, Trade
from .impact import EventStudyTable, InstitutionalTransaction
from .orderflow import Side
from .replay import ReplayResult
from .stats import RegressionResult, TTestResult
from .trends import TrendSegment

TAPE_HEADER = "seq,timestamp_ms,price_ticks,size,aggressor_side,aggressor_order_id,resting_order_id,aggressor_trader_type"
TX_HEADER = "stock,order_id,side,V,PI,C,V_p,full_filled,trend,anchor_ms"
SEGMENT_HEADER = "stock_code,kind,start,end,n_days,magnitude"
EVENT_HEADER = "subset,bin,side,mean_R,mean_C,count,t_stat,signif"
REGRESSION_HEADER = "subset,model,coef,value,t_stat,signif"


def fmt(value) -> str:
    """Render a number at 6 significant digits; None and NaN become empty."""
    if value is None:
        return ""
    if isinstance(value, float):
        if value != value:  # NaN
            return ""
        return f"{value:.6g}"
    return str(value)


def write_rows(dest: str | Path | IO[str], header: str, rows: Iterable[Sequence]) -> None:
    own = isinstance(dest, (str, Path))
    fh = open(dest, "w", encoding="utf-8", newline="") if own else dest
    try:
        fh.write(header + "\n")
        for row in rows:
            fh.write(",".join(fmt(v) for v in row) + "\n")
    finally:
        if own:
            fh.close()


def render_text_table(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    """Right-aligned fixed-width rendering of a small table."""
    cells = [[fmt(v) for v in row] for row in rows]
    widths = [len(h) for h in header]
    for row in cells:
        for i, cell in enumerate(row):
            widths[i] = max(widths[i], len(cell))
    lines = [
        "  ".join(h.rjust(w) for h, w in zip(header, widths)),
        "  ".join("-" * w for w in widths),
    ]
    for row in cells:
        lines.append("  ".join(c.rjust(w) for c, w in zip(row, widths)))
    return "\n".join(lines) + "\n"


def write_tape(tape: Sequence[Trade], dest: str | Path | IO[str]) -> None:
    write_rows(
        dest,
        TAPE_HEADER,
        (
            (t.seq, t.timestamp, t.price, t.size, t.aggressor_side.value,
             t.aggressor_order_id, t.resting_order_id, t.aggressor_trader_type.value)
            for t in tape
        ),
    )


def write_trade_c(trade_c_cny: Sequence[float | None], dest: str | Path | IO[str]) -> None:
    """Sidecar with each tape trade's own structure value (CNY x shares)."""
    write_rows(dest, "tape_index,c_cny", ((i, c) for i, c in enumerate(trade_c_cny)))


def write_transactions(
    transactions: Sequence[InstitutionalTransaction],
    dest: str | Path | IO[str],
    scale: float = 1.0,
) -> None:
    rows = []
    for tx in transactions:
        rows.append(
            (
                tx.stock_code,
                tx.order_id,
                tx.side.value,
                tx.executed,
                tx.pi * scale,
                tx.c_before.c_cny_shares if tx.c_before is not None else None,
                tx.v_p,
                1 if tx.full_filled else 0,
                tx.trend.value if tx.trend is not None else "",
                tx.anchor_ms,
            )
        )
    write_rows(dest, TX_HEADER, rows)


def write_segments(segments_by_stock: Mapping[str, Sequence[TrendSegment]], dest) -> None:
    rows = []
    for stock in sorted(segments_by_stock):
        for seg in segments_by_stock[stock]:
            rows.append((stock, seg.kind.value, seg.start_date.isoformat(),
                         seg.end_date.isoformat(), seg.n_days, seg.magnitude))
    write_rows(dest, SEGMENT_HEADER, rows)


def write_event_study(tables: Sequence[EventStudyTable], dest, scale: float = 1.0) -> None:
    """Table-shaped CSV: two side rows per bin, then per-side ANOVA F rows."""
    rows = []
    for table in tables:
        for row in table.rows:
            for side, label in ((Side.BUY, "purchase"), (Side.SELL, "sale")):
                mr = row.mean_r[side]
                rows.append(
                    (
                        table.subset.value,
                        row.label,
                        label,
                        mr * scale if mr is not None else None,
                        row.mean_c[side],
                        row.count[side],
                        row.t_abs_r.t if row.t_abs_r is not None else None,
                        row.t_abs_r.signif.value if row.t_abs_r is not None else "",
                    )
                )
        for side, label in ((Side.BUY, "purchase"), (Side.SELL, "sale")):
            res = table.anova_c[side]
            rows.append(
                (
                    table.subset.value,
                    "F",
                    label,
                    None,
                    None,
                    table.truncated_anchors,
                    res.f if res is not None else None,
                    res.signif.value if res is not None else "",
                )
            )
    write_rows(dest, EVENT_HEADER, rows)


def write_regressions(results: Mapping[str, Mapping[str, RegressionResult]], dest) -> None:
    """Flat battery report; panel keys are 'all_orders' / 'full_filled'."""
    rows = []
    for subset in results:
        for model, res in results[subset].items():
            for name, coef, t, sig in zip(res.names, res.coef, res.t_stats, res.signif):
                rows.append((subset, model, name, coef, t, sig.value))
            rows.append((subset, model, "r_square", res.r_square, None, ""))
            rows.append((subset, model, "n", res.n_rows, None, ""))
    write_rows(dest, REGRESSION_HEADER, rows)


def write_impact_by_trend(groups: Sequence[tuple[str, str, int, float | None, int, float | None, TTestResult | None]], dest) -> None:
    """Rows: (stock, trend, n_purchase, mean_pi_purchase, n_sale, mean_pi_sale, t)."""
    rows = []
    for stock, trend, n_p, m_p, n_s, m_s, t_res in groups:
        rows.append(
            (
                stock,
                trend,
                n_p,
                m_p,
                n_s,
                m_s,
                t_res.t if t_res is not None else None,
                t_res.signif.value if t_res is not None else "",
            )
        )
    write_rows(dest, "stock,trend,n_purchase,mean_pi_purchase,n_sale,mean_pi_sale,t_stat,signif", rows)


def write_snapshot_json(book: LimitOrderBook, dest: str | Path, n_levels: int | None = None) -> None:
    bids, asks = book.depth_snapshot(n_levels)
    payload = {
        "tick_size": book.tick_size,
        "bids": [[p, v] for p, v in bids],
        "asks": [[p, v] for p, v in asks],
    }
    Path(dest).write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def load_snapshot_json(path: str | Path) -> tuple[list[tuple[int, int]], list[tuple[int, int]]]:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    bids = [(int(p), int(v)) for p, v in payload.get("bids", [])]
    asks = [(int(p), int(v)) for p, v in payload.get("asks", [])]
    return bids, asks


def write_exclusions(replays: Mapping[str, ReplayResult], dest) -> None:
    rows = []
    for stock in sorted(replays):
        result = replays[stock]
        for reason in sorted(result.exclusions):
            rows.append((stock, reason, result.exclusions[reason]))
        rows.append((stock, "rejected_cancels", result.counters.rejected_cancels))
    write_rows(dest, "stock,reason,count", rows)
