import math
from datetime import date, timedelta

import numpy as np
import pytest

from tickimpact.orderflow import ActionKind, CorporateAction
from tickimpact.synth import gen_price_series
from tickimpact.trends import (
    AdjustmentError,
    DailyClose,
    RatioGroup,
    TrendKind,
    TrendParams,
    TrendSegment,
    adjust_prices,
    drawup_ratio,
    ratio_group,
    segment_for_date,
    segment_trends,
)

D0 = date(2003, 1, 2)


def closes(prices, start=D0):
    return [
        DailyClose(start + timedelta(days=i), p, p) for i, p in enumerate(prices)
    ]


def cash(amount, ex, stock="000001"):
    return CorporateAction(stock, ex, ActionKind.CASH, cash_per_share=amount)


def bonus(ratio, ex, stock="000001"):
    return CorporateAction(stock, ex, ActionKind.BONUS, bonus_ratio=ratio)


def rights(ratio, price, ex, stock="000001"):
    return CorporateAction(stock, ex, ActionKind.RIGHTS, rights_ratio=ratio, rights_price=price)


# -- adjustment ---------------------------------------------------------------


def test_adjust_no_actions_is_identity():
    series = closes([10.0, 10.5, 11.0])
    assert adjust_prices(series, []) == series


def test_adjust_cash_dividend_factor():
    # cum-close 10.00, dividend 0.15: f = 9.85/10 = 0.985 on earlier closes
    series = closes([10.0, 10.0, 9.85])
    adjusted = adjust_prices(series, [cash(0.15, D0 + timedelta(days=2))])
    assert adjusted[0].adjusted_close == pytest.approx(9.85, rel=1e-12)
    assert adjusted[1].adjusted_close == pytest.approx(9.85, rel=1e-12)
    assert adjusted[2].adjusted_close == 9.85  # on/after ex-date untouched


def test_adjust_bonus_share_10_to_10():
    # cum-close 20.00, b=1: theoretical ex 10.00, f = 0.5
    series = closes([20.0, 10.0])
    adjusted = adjust_prices(series, [bonus(1.0, D0 + timedelta(days=1))])
    assert adjusted[0].adjusted_close == pytest.approx(10.0, rel=1e-12)


def test_adjust_rights_issue_3_to_10():
    # cum-close 10.00, k=0.3 at 8.93: ex = (10 + 0.3*8.93)/1.3
    expected_ex = (10.0 + 0.3 * 8.93) / 1.3
    series = closes([10.0, expected_ex])
    adjusted = adjust_prices(series, [rights(0.3, 8.93, D0 + timedelta(days=1))])
    assert expected_ex == pytest.approx(9.753, abs=5e-4)
    assert adjusted[0].adjusted_close == pytest.approx(expected_ex, rel=1e-12)


def test_adjust_same_date_cash_plus_bonus_combined():
    # stock 000002 pattern: 0.2 CNY cash and 10:10 bonus on one ex-date
    ex = D0 + timedelta(days=1)
    p = 21.0
    expected_ex = (p - 0.2) / 2.0
    series = closes([p, expected_ex])
    adjusted = adjust_prices(series, [cash(0.2, ex, "000002"), bonus(1.0, ex, "000002")], "000002")
    assert adjusted[0].adjusted_close == pytest.approx(expected_ex, rel=1e-12)


def test_adjust_flat_value_series_is_constant():
    # construct raw closes that keep holder value constant through each action;
    # adjusted series must come out flat to 1e-12 relative
    actions = [
        cash(0.15, D0 + timedelta(days=2)),
        bonus(1.0, D0 + timedelta(days=4)),
        rights(0.3, 8.93, D0 + timedelta(days=6)),
    ]
    p = 10.0
    raw = [p, p]
    p = p - 0.15
    raw += [p, p]
    p = p / 2.0
    raw += [p, p]
    p = (p + 0.3 * 8.93) / 1.3
    raw += [p, p]
    adjusted = adjust_prices(closes(raw), actions)
    values = [c.adjusted_close for c in adjusted]
    for v in values:
        assert v == pytest.approx(values[-1], rel=1e-12)


def test_adjust_dividend_exceeding_price_is_hard_error():
    series = closes([0.10, 0.10])
    with pytest.raises(AdjustmentError):
        adjust_prices(series, [cash(0.5, D0 + timedelta(days=1))])


def test_adjust_unknown_stock_action_ignored():
    series = closes([10.0, 10.0])
    adjusted = adjust_prices(series, [cash(0.15, D0 + timedelta(days=1), "999999")], "000001")
    assert [c.adjusted_close for c in adjusted] == [10.0, 10.0]


# -- segmentation -------------------------------------------------------------


def test_monotone_series_is_one_drawup():
    segs = segment_trends(closes([10, 11, 12, 13, 14]))
    assert len(segs) == 1
    seg = segs[0]
    assert seg.kind is TrendKind.DRAWUP
    assert seg.n_days == 4
    assert seg.magnitude == pytest.approx(math.log(14 / 10))


def test_small_countermove_absorbed():
    # ln(14/12)=0.154 >= 0.30*ln(14/10)=0.101 but < 3*(ln(14/10)/2)=0.505
    segs = segment_trends(closes([10, 12, 14, 12]))
    assert len(segs) == 1
    assert segs[0].kind is TrendKind.DRAWUP
    assert segs[0].magnitude == pytest.approx(math.log(14 / 10))
    assert segs[0].n_days == 3  # absorbed counter-day belongs to the drawup


def test_large_countermove_breaks_trend():
    # ln(14/8)=0.560 exceeds both thresholds: drawup ends at 14
    segs = segment_trends(closes([10, 12, 14, 8]))
    assert [s.kind for s in segs] == [TrendKind.DRAWUP, TrendKind.DRAWDOWN]
    up, down = segs
    assert up.magnitude == pytest.approx(math.log(14 / 10))
    assert up.n_days == 2 and up.end_date == down.start_date
    assert down.magnitude == pytest.approx(math.log(8 / 14))
    assert down.n_days == 1


def test_interruption_requires_both_thresholds():
    # theta alone satisfied (absorbed) vs both satisfied (break): pin kappa's role
    params = TrendParams(theta=0.10, kappa=3.0)
    segs = segment_trends(closes([10, 12, 14, 12]), params)
    assert len(segs) == 1  # counter 0.154 >= theta*0.336 but < kappa*0.168


def test_constant_series_degenerate():
    segs = segment_trends(closes([10, 10, 10]))
    assert len(segs) == 1 and segs[0].degenerate and segs[0].magnitude == 0.0


def test_flat_prefix_belongs_to_first_segment():
    segs = segment_trends(closes([10, 10, 12, 14]))
    assert len(segs) == 1
    assert segs[0].n_days == 3 and segs[0].start_date == D0


def test_zero_change_extends_trend():
    segs = segment_trends(closes([10, 12, 12, 14]))
    assert len(segs) == 1 and segs[0].n_days == 3


def random_walk(seed, n=250):
    rng = np.random.default_rng(seed)
    prices = 10.0 * np.exp(np.cumsum(rng.normal(0, 0.02, size=n)))
    return closes(list(prices))


@pytest.mark.parametrize("seed", range(25))
def test_alternation_and_partition_on_random_walks(seed):
    series = random_walk(seed)
    segs = segment_trends(series)
    for a, b in zip(segs, segs[1:]):
        assert a.kind is not b.kind
        assert a.end_date == b.start_date
    assert sum(s.n_days for s in segs) == len(series) - 1
    for s in segs:
        if not s.degenerate:
            assert (s.magnitude > 0) == (s.kind is TrendKind.DRAWUP)


@pytest.mark.parametrize("seed", range(10))
def test_threshold_monotonicity(seed):
    series = random_walk(seed)
    loose = len(segment_trends(series, TrendParams(0.20, 2.0)))
    default = len(segment_trends(series, TrendParams(0.30, 3.0)))
    strict = len(segment_trends(series, TrendParams(0.45, 4.5)))
    assert loose >= default >= strict


def test_segment_for_date_boundary_belongs_to_earlier():
    segs = segment_trends(closes([10, 12, 14, 8]))
    up, down = segs
    assert segment_for_date(segs, up.end_date) is up
    assert segment_for_date(segs, up.end_date + timedelta(days=1)) is down
    assert segment_for_date(segs, up.start_date) is up


# -- drawup ratio -------------------------------------------------------------


def test_ratio_all_drawup():
    segs = segment_trends(closes([10, 11, 12]))
    assert drawup_ratio(segs) == 1.0


def test_ratio_counting_oracle():
    # 120 drawup days of 240 via constructed series
    spec = [(TrendKind.DRAWUP, 120, 0.5), (TrendKind.DRAWDOWN, 120, -0.5)]
    series = gen_price_series(spec)
    segs = segment_trends(series)
    r = drawup_ratio(segs)
    assert r == pytest.approx(0.5)
    assert ratio_group(r) is RatioGroup.MIDDLE


def test_ratio_groups_table_thresholds():
    assert ratio_group(0.60) is RatioGroup.HIGH  # stock-000002-like
    assert ratio_group(0.55) is RatioGroup.HIGH
    assert ratio_group(0.45) is RatioGroup.LOW
    assert ratio_group(0.54) is RatioGroup.MIDDLE
    assert ratio_group(0.46) is RatioGroup.MIDDLE


def test_ratio_empty_is_error():
    with pytest.raises(ValueError):
        drawup_ratio([])
