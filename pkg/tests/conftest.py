import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from tickimpact.book import LimitOrderBook
from tickimpact.orderflow import Action, OrderEvent, Side, TraderType

_SEQ = {"n": 0}


def ev(
    side=Side.BUY,
    action=Action.SUBMIT,
    price=1000,
    size=100,
    seq=None,
    ts=34_200_000,
    order_id=None,
    trader_type=TraderType.INDIVIDUAL,
    stock="000001",
    trader="t1",
):
    """Terse event builder; seq and order_id auto-increment when omitted."""
    _SEQ["n"] += 1
    seq = _SEQ["n"] if seq is None else seq
    order_id = seq if order_id is None else order_id
    return OrderEvent(stock, seq, ts, order_id, trader, trader_type, side, action, price, size)


@pytest.fixture(autouse=True)
def _reset_seq():
    _SEQ["n"] = 0
    yield


def book_with(bids=(), asks=(), tick_size=0.01):
    """Book preloaded with resting (price, size) ladders, FIFO by insertion."""
    book = LimitOrderBook(tick_size)
    oid = -1
    for price, size in bids:
        book.seed_resting(Side.BUY, price, size, oid, seq=-oid)
        oid -= 1
    for price, size in asks:
        book.seed_resting(Side.SELL, price, size, oid, seq=-oid)
        oid -= 1
    return book
