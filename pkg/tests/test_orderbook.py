import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from obimarket.orderbook import (BUY, M_NEXT_ID, SELL, NoLiquidity, Order, OrderBook, OrderBookError,
                                 TRADE_CSV_HEADER, write_trades_csv)
from reference_matcher import NaiveBook


def limit(book, side, price, t, life=20_000, owner=1):
    return book.submit_limit(book.new_order(side, price, owner, t, life))


@pytest.fixture
def book():
    return OrderBook(max_price=20_000)


class TestLimitOrders:
    def test_rests_on_empty_book(self, book):
        out = limit(book, BUY, 9_999, 0)
        assert out.trade is None
        assert book.best_bid == 9_999
        assert book.best_ask is None

    def test_time_priority_within_level(self, book):
        early = limit(book, SELL, 10_001, 3, owner=7).resting
        limit(book, SELL, 10_001, 5, owner=8)
        out = limit(book, BUY, 10_002, 6)
        assert out.trade.price == 10_001
        assert out.trade.sell_order_id == early.id
        assert out.trade.seller == 7
        assert book.last_trade_price == 10_001

    def test_executes_at_resting_price(self, book):
        limit(book, BUY, 10_000, 0)
        out = limit(book, SELL, 1, 1)
        assert out.trade.price == 10_000
        assert book.best_bid is None

    def test_price_priority_beats_time(self, book):
        limit(book, SELL, 10_005, 0)
        better = limit(book, SELL, 10_003, 1).resting
        out = limit(book, BUY, 10_010, 2)
        assert out.trade.sell_order_id == better.id

    def test_one_share_per_submission(self, book):
        for t in range(3):
            limit(book, SELL, 10_001, t)
        limit(book, BUY, 10_001, 3)
        assert len(book.asks()) == 2
        assert len(book.trades) == 1

    @pytest.mark.parametrize("price", [0, -5, 20_001])
    def test_rejects_bad_price(self, book, price):
        with pytest.raises(OrderBookError):
            book.submit_limit(Order(1, BUY, price, 1, 0, 10))

    def test_rejects_duplicate_id(self, book):
        book.submit_limit(Order(1, BUY, 100, 1, 0, 10))
        with pytest.raises(OrderBookError, match="duplicate"):
            book.submit_limit(Order(1, BUY, 101, 1, 0, 10))

    def test_rejects_cancel_not_after_placement(self, book):
        with pytest.raises(OrderBookError):
            book.submit_limit(Order(1, BUY, 100, 1, 5, 5))

    def test_rejects_multi_share(self, book):
        with pytest.raises(OrderBookError):
            book.submit_limit(Order(1, BUY, 100, 1, 0, 10, quantity=2))


class TestMarketOrders:
    def test_best_price(self, book):
        limit(book, SELL, 10_005, 0)
        limit(book, SELL, 10_003, 1)
        assert book.submit_market(BUY, 99, 2).trade.price == 10_003

    def test_time_priority(self, book):
        first = limit(book, SELL, 10_001, 2).resting
        limit(book, SELL, 10_001, 9)
        out = book.submit_market(BUY, 99, 10)
        assert out.trade.sell_order_id == first.id
        assert out.trade.buyer == 99

    def test_no_liquidity_leaves_book_alone(self, book):
        limit(book, BUY, 9_000, 0)
        before = book.bids()
        with pytest.raises(NoLiquidity):
            book.submit_market(BUY, 99, 1)
        assert book.bids() == before
        assert book.trades == []


class TestExpiry:
    def test_removed_at_deadline(self, book):
        limit(book, BUY, 9_000, 0, life=20_000)
        assert book.expire(20_000) == 1
        assert book.best_bid is None

    def test_retained_before_deadline(self, book):
        limit(book, BUY, 9_000, 0, life=20_000)
        assert book.expire(19_999) == 0
        assert book.best_bid == 9_000

    def test_three_orders(self, book):
        for t in range(3):
            limit(book, BUY, 9_000 + t, t, life=2)
        assert book.expire(3) == 2
        assert [o.placed_at for o in book.bids()] == [2]

    def test_traded_order_is_skipped(self, book):
        limit(book, SELL, 10_000, 0, life=5)
        limit(book, SELL, 10_001, 1, life=5)
        limit(book, BUY, 10_000, 2)
        assert book.expire(6) == 1
        assert book.best_ask is None


class TestDepth:
    def test_empty_side(self, book):
        assert book.depth(BUY, 50) == 0

    def test_window_counts_best_and_below(self, book):
        t = 0
        for price, n in ((10_000, 3), (9_960, 2), (9_940, 1)):
            for _ in range(n):
                limit(book, BUY, price, t)
                t += 1
        assert book.depth(BUY, 50) == 5
        for price in (10_010, 10_020, 10_060, 10_061):
            limit(book, SELL, price, t)
            t += 1
        assert book.depth(SELL, 50) == 3
        assert book.obi(50) == 2

    def test_mirrored_book(self, book):
        t = 0
        for price, n in ((10_000, 3), (9_960, 2), (9_940, 1)):
            for _ in range(n):
                limit(book, BUY, price, t)
                limit(book, SELL, 20_000 - price + 1, t)
                t += 1
        assert book.obi(50) == 0

    def test_example_plus_four_asks(self, book):
        t = 0
        for price, n in ((10_000, 3), (9_960, 2), (9_940, 1)):
            for _ in range(n):
                limit(book, BUY, price, t)
                t += 1
        for price in (10_001, 10_002, 10_030, 10_051):
            limit(book, SELL, price, t)
            t += 1
        assert book.obi(50) == 1

    def test_spoof_orders_counted_on_request(self, book):
        limit(book, BUY, 10_000, 0)
        for i in range(1_000):
            book.submit_limit(book.new_order(BUY, 9_950 + i % 50, 0, 1, 1 << 40, is_spoof=True))
        assert book.depth(BUY, 50) == 1_001
        assert book.depth(BUY, 50, include_spoof=False) == 1

    def test_window_clamped_at_one(self, book):
        limit(book, BUY, 3, 0)
        limit(book, BUY, 1, 1)
        assert book.depth(BUY, 50) == 2


def test_trades_csv(tmp_path, book):
    limit(book, SELL, 10_001, 0, owner=4)
    limit(book, BUY, 10_001, 1, owner=5)
    path = tmp_path / "trades.csv"
    write_trades_csv(path, book.trades)
    lines = path.read_text().splitlines()
    assert lines[0] == ",".join(TRADE_CSV_HEADER)
    assert lines[1].startswith("1,10001,5,4,")


# -- oracle comparison ------------------------------------------------------

def _run_both(ops, lifetime, max_price=40):
    fast, slow = OrderBook(max_price=max_price, capacity=4), NaiveBook()
    t = 0
    for op in ops:
        t += op[-1]
        if op[0] == "limit":
            _, side, price, owner, _ = op
            order = fast.new_order(side, price, owner, t, lifetime)
            fast.submit_limit(order)
            slow.limit(order.id, side, price, owner, t, order.cancel_at)
        elif op[0] == "market":
            _, side, owner, _ = op
            try:
                fast.submit_market(side, owner, t)
                ok = True
            except NoLiquidity:
                ok = False
            oid = int(fast.arrays.meta[M_NEXT_ID]) - 1 if ok else None
            assert slow.market(oid, side, owner, t) == ok
        else:
            fast.expire(t)
            slow.expire(t)
        assert fast.best_bid == slow.best(BUY)
        assert fast.best_ask == slow.best(SELL)
        assert not fast.is_crossed()
    return fast, slow


def _tape(book):
    return [(tr.time, tr.price, tr.buy_order_id, tr.sell_order_id, tr.buyer, tr.seller)
            for tr in book.trades]


def _random_ops(rng):
    ops = []
    for _ in range(int(rng.integers(1, 51))):
        dt = int(rng.integers(0, 3))
        kind = rng.random()
        if kind < 0.7:
            ops.append(("limit", int(rng.choice([BUY, SELL])), int(rng.integers(1, 41)),
                        int(rng.integers(1, 10)), dt))
        elif kind < 0.85:
            ops.append(("market", int(rng.choice([BUY, SELL])), int(rng.integers(1, 10)), dt))
        else:
            ops.append(("expire", dt))
    return ops


def test_matches_naive_matcher_on_random_sequences():
    rng = np.random.default_rng(2024)
    n_trades = 0
    for _ in range(10_000):
        fast, slow = _run_both(_random_ops(rng), lifetime=int(rng.integers(1, 15)))
        assert _tape(fast) == slow.tape
        assert sorted(o.id for o in fast.bids() + fast.asks()) == sorted(o["id"] for o in slow.resting)
        n_trades += len(slow.tape)
    assert n_trades > 10_000  # the sequences actually exercise matching


limit_op = st.tuples(st.just("limit"), st.sampled_from([BUY, SELL]), st.integers(1, 40),
                     st.integers(1, 9), st.integers(0, 2))
market_op = st.tuples(st.just("market"), st.sampled_from([BUY, SELL]), st.integers(1, 9),
                      st.integers(0, 2))
expire_op = st.tuples(st.just("expire"), st.integers(0, 2))


class TestBookProperties:
    @settings(max_examples=300, deadline=None)
    @given(st.lists(st.one_of(limit_op, market_op, expire_op), max_size=50), st.integers(1, 20))
    def test_tape_matches_oracle(self, ops, lifetime):
        fast, slow = _run_both(ops, lifetime)
        assert _tape(fast) == slow.tape

    @settings(max_examples=200, deadline=None)
    @given(st.lists(st.one_of(limit_op, market_op), max_size=50), st.integers(1, 10))
    def test_depth_identities(self, ops, window):
        fast, _ = _run_both(ops, 1_000)
        bids, asks = fast.bids(), fast.asks()
        bb, ba = fast.best_bid, fast.best_ask
        want_buy = sum(1 for o in bids if o.price >= bb - window) if bids else 0
        want_sell = sum(1 for o in asks if o.price <= ba + window) if asks else 0
        assert fast.depth(BUY, window) == want_buy
        assert fast.depth(SELL, window) == want_sell
        assert fast.obi(window) == want_buy - want_sell
        assert len(fast) == len(bids) + len(asks)

    @settings(max_examples=200, deadline=None)
    @given(st.lists(limit_op, max_size=50))
    def test_levels_in_time_order(self, ops):
        fast, _ = _run_both(ops, 1_000)
        for side in (fast.bids(), fast.asks()):
            for a, b in zip(side, side[1:]):
                if a.price == b.price:
                    assert (a.placed_at, a.id) < (b.placed_at, b.id)

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.one_of(limit_op, expire_op), max_size=50), st.integers(1, 5))
    def test_resting_orders_not_yet_due(self, ops, lifetime):
        fast, _ = _run_both(ops, lifetime)
        now = fast._now or 0
        fast.expire(now)
        assert all(o.cancel_at > now for o in fast.bids() + fast.asks())


def test_capacity_grows(book):
    for i in range(5_000):
        limit(book, BUY, 1 + i % 500, i)
    assert len(book) == 5_000
    assert book.best_bid == 500
