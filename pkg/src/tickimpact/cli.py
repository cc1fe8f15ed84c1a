"""Command-line pipeline: ingest, replay, segment, impact, eventstudy,
regress, synth and the manifest-driven report command.

Exit codes: 0 success, 1 usage, 2 data validation, 3 numerical degeneracy.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from datetime import date as Date
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .book import BookStructureValue, Trade
from .impact import (
    DEFAULT_BIN_MS,
    DEFAULT_WINDOW_MS,
    InstitutionalTransaction,
    Subset,
    accumulate_event_samples,
    finalize_event_study,
    split_by_volume,
    trade_returns,
)
from .orderflow import (
    Action,
    Side,
    StreamFormatError,
    TraderType,
    parse_corporate_actions,
    parse_order_events,
    parse_stock_summaries,
    validate_stream,
    write_order_events,
)
from .replay import ReplayResult, replay_events, split_by_stock
from .reports import (
    fmt,
    load_snapshot_json,
    render_text_table,
    write_event_study,
    write_exclusions,
    write_impact_by_trend,
    write_regressions,
    write_rows,
    write_segments,
    write_snapshot_json,
    write_tape,
    write_trade_c,
    write_transactions,
)
from .stats import DegenerateSampleError, SingularDesignError, regression_battery, welch_t
from .synth import FlowConfig, gen_flow, gen_price_series
from .trends import (
    AdjustmentError,
    HIGH_RATIO_THRESHOLD,
    LOW_RATIO_THRESHOLD,
    TrendKind,
    TrendParams,
    TrendSegment,
    adjust_prices,
    drawup_ratio,
    parse_daily_closes,
    ratio_group,
    segment_for_date,
    segment_trends,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3

CONFIG_ENV_VAR = "TICKIMPACT_CONFIG"


class UsageError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage problems exit 1, not argparse's 2
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: {message}\n")
        raise SystemExit(EXIT_USAGE)


def read_kv_config(path: str | Path) -> dict[str, str]:
    values: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, val = line.partition("=")
            if not sep:
                raise UsageError(f"malformed config line: {raw.rstrip()!r}")
            values[key.strip()] = val.strip()
    return values


def _window_bin(args) -> tuple[int, int]:
    window_ms = int(args.window * 1000)
    bin_ms = int(args.bin * 1000)
    if window_ms <= 0 or bin_ms <= 0 or window_ms % bin_ms:
        raise UsageError("window must be a positive multiple of the bin width")
    return window_ms, bin_ms


# -- shared loaders ----------------------------------------------------------


def load_tape(path: str | Path) -> list[Trade]:
    tape: list[Trade] = []
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n")
        if not header.startswith("seq,timestamp_ms"):
            raise StreamFormatError(f"unexpected tape header in {path}")
        for line in fh:
            p = line.rstrip("\n").split(",")
            if len(p) != 8:
                continue
            tape.append(
                Trade(int(p[0]), int(p[1]), int(p[2]), int(p[3]), Side(p[4]),
                      int(p[5]), int(p[6]), TraderType(p[7]))
            )
    return tape


def load_trade_c(path: str | Path) -> list[float | None]:
    out: list[float | None] = []
    with open(path, "r", encoding="utf-8") as fh:
        fh.readline()
        for line in fh:
            _, _, val = line.rstrip("\n").partition(",")
            out.append(float(val) if val else None)
    return out


def load_transactions(path: str | Path, tick_size: float = 0.01) -> list[InstitutionalTransaction]:
    """Rebuild transactions from the table CSV (reduced precision for C)."""
    txs: list[InstitutionalTransaction] = []
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n")
        if not header.startswith("stock,order_id"):
            raise StreamFormatError(f"unexpected transaction header in {path}")
        for line in fh:
            p = line.rstrip("\n").split(",")
            if len(p) != 10:
                continue
            side = Side(p[2])
            executed = int(p[3])
            c_before = None
            if p[5]:
                c_half_ticks = round(float(p[5]) * 2.0 / tick_size)
                c_before = BookStructureValue(c_half_ticks, 0, side, executed, 0, tick_size)
            txs.append(
                InstitutionalTransaction(
                    stock_code=p[0],
                    seq=0,
                    order_id=int(p[1]),
                    side=side,
                    submitted=executed,
                    executed=executed,
                    trades=(),
                    tape_slice=(0, 0),
                    p_r_half_ticks=1,
                    p_r_is_mid=c_before is not None,
                    vwap_ticks=Fraction(1),
                    pi=float(p[4]),
                    c_before=c_before,
                    v_p=float(p[6]) if p[6] else None,
                    full_filled=p[7] == "1",
                    anchor_ms=int(p[9]),
                    trend=TrendKind(p[8]) if p[8] else None,
                )
            )
    return txs


def _attach_tape_slices(
    txs: list[InstitutionalTransaction], tapes: dict[str, list[Trade]]
) -> list[InstitutionalTransaction]:
    """Locate each reloaded transaction's component fills in its stock tape."""
    index: dict[str, dict[int, list[int]]] = {}
    for stock, tape in tapes.items():
        by_order: dict[int, list[int]] = {}
        for i, t in enumerate(tape):
            by_order.setdefault(t.aggressor_order_id, []).append(i)
        index[stock] = by_order
    out = []
    for tx in txs:
        rows = index.get(tx.stock_code, {}).get(tx.order_id)
        if not rows:
            continue
        out.append(replace(tx, tape_slice=(rows[0], rows[-1] + 1)))
    return out


# -- subcommands -------------------------------------------------------------


def cmd_ingest(args) -> int:
    result = parse_order_events(args.orders)
    report = validate_stream(result.events)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for stock, events in sorted(split_by_stock(result.events).items()):
        write_order_events(events, out / f"events_{stock}.csv")
    rows = [(f.kind, ";".join(map(str, f.seqs)), "hard" if f.hard else "soft", f.message)
            for f in report.findings]
    rows.extend(
        [("accepted_rows", "", "", str(result.accepted)),
         ("rejected_rows", "", "", str(len(result.rejected)))]
    )
    rows.extend(("rejected_row", str(r.line_no), "soft", r.reason) for r in result.rejected)
    write_rows(out / "validation.csv", "finding,ref,severity,detail", rows)
    if not report.accepted:
        print(f"ingest: {len(report.hard_findings)} hard finding(s)", file=sys.stderr)
        return EXIT_DATA
    print(f"ingest: accepted {result.accepted} events, rejected {len(result.rejected)} rows")
    return EXIT_OK


def _replay_one(payload) -> tuple[str, ReplayResult]:
    stock, events, tick_size, opening = payload
    bids, asks = opening if opening else ((), ())
    return stock, replay_events(events, tick_size, bids, asks)


def _run_replays(events_by_stock, tick_size, opening=None, jobs=1) -> dict[str, ReplayResult]:
    payloads = [
        (stock, events, tick_size, opening if len(events_by_stock) == 1 else None)
        for stock, events in sorted(events_by_stock.items())
    ]
    if jobs > 1 and len(payloads) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return dict(pool.map(_replay_one, payloads))
    return dict(map(_replay_one, payloads))


def cmd_replay(args) -> int:
    result = parse_order_events(args.orders)
    report = validate_stream(result.events)
    if not report.accepted:
        print(f"replay: stream rejected, {len(report.hard_findings)} hard finding(s)", file=sys.stderr)
        return EXIT_DATA
    opening = load_snapshot_json(args.opening_book) if args.opening_book else None
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    replays = _run_replays(split_by_stock(result.events), args.tick_size, opening, args.jobs)
    transactions: list[InstitutionalTransaction] = []
    for stock, rep in replays.items():
        write_tape(rep.tape, out / f"tape_{stock}.csv")
        write_trade_c(rep.trade_c_cny, out / f"trade_c_{stock}.csv")
        if args.dump_book:
            write_snapshot_json(rep.book, out / f"book_{stock}.json")
        transactions.extend(rep.transactions)
    write_transactions(transactions, out / "transactions.csv")
    write_exclusions(replays, out / "exclusions.csv")
    n_trades = sum(len(r.tape) for r in replays.values())
    print(f"replay: {len(replays)} stock(s), {n_trades} trades, {len(transactions)} institutional transactions")
    return EXIT_OK


def cmd_segment(args) -> int:
    closes_by_stock = parse_daily_closes(args.closes)
    actions = parse_corporate_actions(args.actions) if args.actions else []
    params = TrendParams(args.theta, args.kappa)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    segments_by_stock = {}
    ratio_rows = []
    plot_rows = []
    for stock in sorted(closes_by_stock):
        adjusted = adjust_prices(closes_by_stock[stock], actions, stock)
        segments = segment_trends(adjusted, params)
        segments_by_stock[stock] = segments
        r = drawup_ratio(segments)
        ratio_rows.append((stock, r, ratio_group(r).value, sum(s.n_days for s in segments)))
        for c in adjusted:
            seg = segment_for_date(segments, c.date)
            plot_rows.append((stock, c.date.isoformat(), c.adjusted_close,
                              seg.kind.value if seg else ""))
    write_segments(segments_by_stock, out / "segments.csv")
    write_rows(out / "ratios.csv", "stock_code,r,group,n_days_total", ratio_rows)
    write_rows(out / "plot_closes.csv", "stock_code,date,adjusted_close,segment_kind", plot_rows)
    print(f"segment: {len(segments_by_stock)} stock(s)")
    return EXIT_OK


def _impact_by_trend_rows(transactions):
    """Welch comparison of purchase vs sale impact per (stock, trend) cell."""
    rows = []
    keys = sorted({(tx.stock_code, tx.trend) for tx in transactions if tx.trend is not None})
    groups = [("TOTAL", None)] + keys

    def cell(stock, trend):
        sel = [tx for tx in transactions
               if tx.trend is not None
               and (stock == "TOTAL" or tx.stock_code == stock)
               and (trend is None or tx.trend == trend)]
        buys = [tx.pi for tx in sel if tx.side is Side.BUY]
        sells = [tx.pi for tx in sel if tx.side is Side.SELL]
        t_res = None
        if len(buys) >= 2 and len(sells) >= 2 and (np.var(buys) > 0 or np.var(sells) > 0):
            t_res = welch_t(buys, sells)
        return (
            stock,
            trend.value if trend else "all",
            len(buys),
            float(np.mean(buys)) if buys else None,
            len(sells),
            float(np.mean(sells)) if sells else None,
            t_res,
        )

    for trend in (TrendKind.DRAWUP, TrendKind.DRAWDOWN):
        rows.append(cell("TOTAL", trend))
    for stock, trend in keys:
        rows.append(cell(stock, trend))
    return rows


def cmd_impact(args) -> int:
    txs = load_transactions(args.transactions)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.segments and args.date:
        day = Date.fromisoformat(args.date)
        seg_by_stock: dict[str, list] = {}
        with open(args.segments, "r", encoding="utf-8") as fh:
            fh.readline()
            for line in fh:
                p = line.rstrip("\n").split(",")
                seg_by_stock.setdefault(p[0], []).append(
                    TrendSegment(TrendKind(p[1]), Date.fromisoformat(p[2]),
                                 Date.fromisoformat(p[3]), int(p[4]), float(p[5]))
                )
        txs = [
            tx.with_trend(
                seg.kind if (seg := segment_for_date(seg_by_stock.get(tx.stock_code, []), day)) else None
            )
            for tx in txs
        ]
    write_transactions(txs, out / "transactions_trend.csv", scale=1.0)
    rows = _impact_by_trend_rows(txs)
    write_impact_by_trend(rows, out / "impact_by_trend.csv")
    text_rows = [
        (s, tr, np_, (mp * args.scale) if mp is not None else None,
         ns, (ms * args.scale) if ms is not None else None,
         t.t if t else None, t.signif.value if t else "")
        for s, tr, np_, mp, ns, ms, t in rows
    ]
    (out / "impact_by_trend.txt").write_text(
        render_text_table(
            ["stock", "trend", "n_buy", "PI_buy", "n_sell", "PI_sell", "t", "sig"], text_rows
        ),
        encoding="utf-8",
    )
    print(f"impact: {len(txs)} transactions, {len(rows)} report cells")
    return EXIT_OK


def _event_tables(tapes, trade_cs, transactions, window_ms, bin_ms):
    """Per-subset tables; samples are accumulated per stock then merged."""
    tables = []
    if len(transactions) >= 2:
        small, large = split_by_volume(transactions)
        subsets = [(Subset.SMALL, small), (Subset.LARGE, large), (Subset.TOTAL, list(transactions))]
    else:
        subsets = [(Subset.TOTAL, list(transactions))]
    returns_by_stock = {stock: trade_returns(tape) for stock, tape in tapes.items()}
    for subset, txs in subsets:
        merged = None
        for stock in sorted(tapes):
            stock_txs = [tx for tx in txs if tx.stock_code == stock]
            samples = accumulate_event_samples(
                tapes[stock], returns_by_stock[stock], trade_cs[stock], stock_txs,
                window_ms, bin_ms,
            )
            if merged is None:
                merged = samples
            else:
                merged.merge(samples)
        if merged is not None:
            tables.append(finalize_event_study(merged, subset))
    return tables


def _render_event_text(tables, scale) -> str:
    blocks = []
    for table in tables:
        rows = []
        for row in table.rows:
            mr_b = row.mean_r[Side.BUY]
            mr_s = row.mean_r[Side.SELL]
            rows.append(
                (
                    row.label,
                    mr_b * scale if mr_b is not None else None,
                    mr_s * scale if mr_s is not None else None,
                    row.mean_c[Side.BUY],
                    row.mean_c[Side.SELL],
                    row.count[Side.BUY],
                    row.count[Side.SELL],
                    row.t_abs_r.t if row.t_abs_r else None,
                    row.t_abs_r.signif.value if row.t_abs_r else "",
                )
            )
        f_b = table.anova_c[Side.BUY]
        f_s = table.anova_c[Side.SELL]
        rows.append(("F", None, None, f_b.f if f_b else None, f_s.f if f_s else None,
                     0, 0, None, ""))
        blocks.append(
            f"subset: {table.subset.value}\n"
            + render_text_table(
                ["T", "R_buy", "R_sell", "C_buy", "C_sell", "n_buy", "n_sell", "t", "sig"], rows
            )
        )
    return "\n".join(blocks)


def cmd_eventstudy(args) -> int:
    window_ms, bin_ms = _window_bin(args)
    tapes: dict[str, list[Trade]] = {}
    trade_cs: dict[str, list[float | None]] = {}
    for spec in args.tape:
        stock, _, path = spec.partition("=")
        if not path:
            raise UsageError("tape arguments take the form CODE=path")
        tapes[stock] = load_tape(path)
        trade_cs[stock] = [None] * len(tapes[stock])
    for spec in args.trade_c or []:
        stock, _, path = spec.partition("=")
        if stock not in tapes:
            raise UsageError(f"trade-c given for unknown stock {stock}")
        trade_cs[stock] = load_trade_c(path)
    txs = load_transactions(args.transactions)
    txs = _attach_tape_slices([tx for tx in txs if tx.stock_code in tapes], tapes)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    tables = _event_tables(tapes, trade_cs, txs, window_ms, bin_ms)
    write_event_study(tables, out / "event_study.csv", scale=args.scale)
    (out / "event_study.txt").write_text(_render_event_text(tables, args.scale), encoding="utf-8")
    print(f"eventstudy: {len(txs)} anchors across {len(tapes)} stock(s)")
    return EXIT_OK


def _regression_panels(txs, summaries):
    usable = [
        tx for tx in txs
        if tx.c_before is not None and tx.v_p is not None and tx.stock_code in summaries
    ]
    panels: dict[str, dict] = {}
    for label, rows in (("all_orders", usable), ("full_filled", [t for t in usable if t.full_filled])):
        if len(rows) < 10:
            raise DegenerateSampleError(f"too few usable rows for panel {label}")
        pi = [t.pi for t in rows]
        c_f = [summaries[t.stock_code].float_cap for t in rows]
        c = [t.c_before.c_cny_shares for t in rows]
        s = [1.0 if t.side is Side.SELL else 0.0 for t in rows]
        v_p = [t.v_p for t in rows]
        panels[label] = regression_battery(pi, c_f, c, s, v_p)
    return panels


def cmd_regress(args) -> int:
    txs = load_transactions(args.transactions)
    summaries = parse_stock_summaries(args.summaries)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    panels = _regression_panels(txs, summaries)
    write_regressions(panels, out / "regression.csv")
    text = []
    for subset, models in panels.items():
        for model, res in models.items():
            rows = [
                (name, coef, t, sig.value)
                for name, coef, t, sig in zip(res.names, res.coef, res.t_stats, res.signif)
            ]
            rows.append(("r_square", res.r_square, None, ""))
            rows.append(("n", res.n_rows, None, ""))
            text.append(f"{subset} / {model}\n" + render_text_table(["coef", "value", "t", "sig"], rows))
    (out / "regression.txt").write_text("\n".join(text), encoding="utf-8")
    print(f"regress: {len(panels)} panels")
    return EXIT_OK


def cmd_synth_flow(args) -> int:
    if args.config:
        config = FlowConfig.from_file(args.config)
    else:
        config = FlowConfig()
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.events is not None:
        overrides["n_events"] = args.events
    if args.duration is not None:
        overrides["duration_ms"] = args.duration * 1000
    if args.asymmetry is not None:
        overrides["liquidity_asymmetry"] = args.asymmetry
    if args.stock is not None:
        overrides["stock_code"] = args.stock
    if overrides:
        config = replace(config, **overrides)
    events = gen_flow(config)
    write_order_events(events, args.out)
    print(f"synth flow: {len(events)} events -> {args.out}")
    return EXIT_OK


def _parse_segment_spec(text: str):
    spec = []
    for part in text.split(","):
        kind_s, n_s, mag_s = part.split(":")
        spec.append((TrendKind(kind_s), int(n_s), float(mag_s)))
    return spec


def cmd_synth_closes(args) -> int:
    spec = _parse_segment_spec(args.spec)
    closes = gen_price_series(spec, noise=args.noise, seed=args.seed or 0)
    rows = [(args.stock, c.date.isoformat(), c.raw_close) for c in closes]
    write_rows(args.out, "stock_code,date,close_cny", rows)
    print(f"synth closes: {len(closes)} days -> {args.out}")
    return EXIT_OK


def cmd_report(args) -> int:
    config_path = args.config or os.environ.get(CONFIG_ENV_VAR)
    if not config_path:
        raise UsageError(f"--config required (or set {CONFIG_ENV_VAR})")
    cfg = read_kv_config(config_path)
    if "orders" not in cfg:
        raise UsageError("report config needs an orders= entry")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    theta = float(cfg.get("theta", 0.30))
    kappa = float(cfg.get("kappa", 3.0))
    window_ms = int(float(cfg.get("window_s", 60)) * 1000)
    bin_ms = int(float(cfg.get("bin_s", 5)) * 1000)
    scale = float(cfg.get("scale", 1.0))
    tick_size = float(cfg.get("tick_size", 0.01))
    if window_ms <= 0 or bin_ms <= 0 or window_ms % bin_ms:
        raise UsageError("window_s must be a positive multiple of bin_s")

    status: dict[str, str] = {}
    result = parse_order_events(cfg["orders"])
    report = validate_stream(result.events)
    if not report.accepted:
        print(f"report: stream rejected with {len(report.hard_findings)} hard finding(s)", file=sys.stderr)
        return EXIT_DATA

    replays = _run_replays(split_by_stock(result.events), tick_size, jobs=args.jobs)
    for stock, rep in replays.items():
        write_tape(rep.tape, out / f"tape_{stock}.csv")
        write_trade_c(rep.trade_c_cny, out / f"trade_c_{stock}.csv")
        status[stock] = "replayed"
    write_exclusions(replays, out / "exclusions.csv")

    transactions = [tx for rep in replays.values() for tx in rep.transactions]

    segments_by_stock = {}
    if "closes" in cfg:
        closes_by_stock = parse_daily_closes(cfg["closes"])
        actions = parse_corporate_actions(cfg["actions"]) if "actions" in cfg else []
        ratio_rows = []
        for stock in sorted(closes_by_stock):
            adjusted = adjust_prices(closes_by_stock[stock], actions, stock)
            segments_by_stock[stock] = segment_trends(adjusted, TrendParams(theta, kappa))
            r = drawup_ratio(segments_by_stock[stock])
            ratio_rows.append((stock, r, ratio_group(r).value,
                               sum(s.n_days for s in segments_by_stock[stock])))
        write_segments(segments_by_stock, out / "segments.csv")
        write_rows(out / "ratios.csv", "stock_code,r,group,n_days_total", ratio_rows)
        if "date" in cfg:
            day = Date.fromisoformat(cfg["date"])
            transactions = [
                tx.with_trend(
                    seg.kind
                    if (seg := segment_for_date(segments_by_stock.get(tx.stock_code, []), day))
                    else None
                )
                for tx in transactions
            ]

    write_transactions(transactions, out / "transactions.csv")
    write_impact_by_trend(_impact_by_trend_rows(transactions), out / "impact_by_trend.csv")

    tapes = {stock: rep.tape for stock, rep in replays.items()}
    trade_cs = {stock: rep.trade_c_cny for stock, rep in replays.items()}
    tables = _event_tables(tapes, trade_cs, transactions, window_ms, bin_ms)
    write_event_study(tables, out / "event_study.csv", scale=scale)
    (out / "event_study.txt").write_text(_render_event_text(tables, scale), encoding="utf-8")

    if "summaries" in cfg:
        summaries = parse_stock_summaries(cfg["summaries"])
        try:
            panels = _regression_panels(transactions, summaries)
            write_regressions(panels, out / "regression.csv")
            status["regression"] = "ok"
        except (DegenerateSampleError, SingularDesignError, ValueError) as exc:
            status["regression"] = f"skipped: {exc}"

    manifest = {
        "tool_version": __version__,
        "config_sha256": hashlib.sha256(Path(config_path).read_bytes()).hexdigest(),
        "params": {
            "theta": theta,
            "kappa": kappa,
            "window_ms": window_ms,
            "bin_ms": bin_ms,
            "scale": scale,
            "tick_size": tick_size,
            "ratio_thresholds": [LOW_RATIO_THRESHOLD, HIGH_RATIO_THRESHOLD],
        },
        "inputs": {k: cfg[k] for k in sorted(cfg)},
        "stocks": {k: status[k] for k in sorted(status)},
    }
    (out / "run_manifest.json").write_text(
        json.dumps(manifest, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    print(f"report: wrote {out}")
    return EXIT_OK


# -- parser ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tickimpact", description=__doc__)
    parser.add_argument("--version", action="version", version=f"tickimpact {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("ingest", help="parse and validate an order-event CSV")
    p.add_argument("--orders", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("replay", help="replay order flow into tape and transactions")
    p.add_argument("--orders", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--tick-size", type=float, default=0.01)
    p.add_argument("--opening-book", help="JSON ladder snapshot (single-stock streams)")
    p.add_argument("--dump-book", action="store_true", help="write final book snapshots")
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("segment", help="adjust closes and segment trends")
    p.add_argument("--closes", required=True)
    p.add_argument("--actions")
    p.add_argument("--theta", type=float, default=0.30)
    p.add_argument("--kappa", type=float, default=3.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("impact", help="attach trend context and compare impact by side")
    p.add_argument("--transactions", required=True)
    p.add_argument("--segments")
    p.add_argument("--date", help="trading date of the replayed streams (ISO)")
    p.add_argument("--scale", type=float, default=1.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_impact)

    p = sub.add_parser("eventstudy", help="binned returns and book structure around anchors")
    p.add_argument("--tape", action="append", required=True, metavar="CODE=PATH")
    p.add_argument("--trade-c", action="append", metavar="CODE=PATH")
    p.add_argument("--transactions", required=True)
    p.add_argument("--window", type=float, default=60.0, help="window half-width, seconds")
    p.add_argument("--bin", type=float, default=5.0, help="bin width, seconds")
    p.add_argument("--scale", type=float, default=1.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_eventstudy)

    p = sub.add_parser("regress", help="impact regression battery")
    p.add_argument("--transactions", required=True)
    p.add_argument("--summaries", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_regress)

    p = sub.add_parser("synth", help="synthetic data generators")
    synth_sub = p.add_subparsers(dest="synth_command", required=True, parser_class=_Parser)
    pf = synth_sub.add_parser("flow", help="seeded synthetic order flow")
    pf.add_argument("--config", help="flat key=value flow config")
    pf.add_argument("--seed", type=int)
    pf.add_argument("--events", type=int)
    pf.add_argument("--duration", type=int, help="seconds of flow")
    pf.add_argument("--asymmetry", type=float)
    pf.add_argument("--stock")
    pf.add_argument("--out", required=True)
    pf.set_defaults(func=cmd_synth_flow)
    pc = synth_sub.add_parser("closes", help="daily closes with known segmentation")
    pc.add_argument("--spec", required=True, help="e.g. drawup:10:0.3,drawdown:8:-0.25")
    pc.add_argument("--noise", type=float, default=0.0)
    pc.add_argument("--seed", type=int)
    pc.add_argument("--stock", default="000001")
    pc.add_argument("--out", required=True)
    pc.set_defaults(func=cmd_synth_closes)

    p = sub.add_parser("report", help="run the whole pipeline from a manifest config")
    p.add_argument("--config", help=f"manifest config (default from ${CONFIG_ENV_VAR})")
    p.add_argument("--out", required=True)
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (StreamFormatError, AdjustmentError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (SingularDesignError, DegenerateSampleError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
