"""Limit order book with price-time priority for one-share orders.

The book state is a bundle of flat numpy arrays (``BookArrays``) so that the
same matching code runs inside the compiled simulation loop and behind the
:class:`OrderBook` wrapper used by tests and interactive code.

Layout
------
* Prices are integer ticks in ``[1, max_price]``. Each side keeps a FIFO queue
  per price level as a doubly linked list over order slots.
* Orders live in slots; freed slots are recycled through a stack.
* Non-spoof resting orders are also queued in an expiry ring ordered by
  ``cancel_at``; executed orders stay in the ring as stale entries and are
  skipped when popped.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Iterable, NamedTuple

import numpy as np
from numba import njit

BUY = 1
SELL = -1

_BID = 0
_ASK = 1

# meta slots
M_BEST_BID = 0
M_BEST_ASK = 1
M_N_BIDS = 2
M_N_ASKS = 3
M_LAST_PRICE = 4
M_NEXT_ID = 5
M_N_FREE = 6
M_N_TRADES = 7
M_RING_HEAD = 8
M_RING_LEN = 9
M_N_SPOOF = 10
M_MAX_PRICE = 11
M_LAST_CANCEL = 12
_META_SIZE = 16

NO_TRADE = -1
NO_LIQUIDITY = -2


class BookArrays(NamedTuple):
    meta: np.ndarray
    head: np.ndarray  # (2, max_price + 1)
    tail: np.ndarray
    count: np.ndarray
    spoof: np.ndarray
    o_id: np.ndarray
    o_side: np.ndarray
    o_price: np.ndarray
    o_owner: np.ndarray
    o_placed: np.ndarray
    o_cancel: np.ndarray
    o_spoof: np.ndarray
    o_prev: np.ndarray
    o_next: np.ndarray
    o_live: np.ndarray
    free: np.ndarray
    ring_slot: np.ndarray
    ring_id: np.ndarray
    tr_time: np.ndarray
    tr_price: np.ndarray
    tr_buy_id: np.ndarray
    tr_sell_id: np.ndarray
    tr_buyer: np.ndarray
    tr_seller: np.ndarray


def new_book_arrays(max_price: int, slots: int = 1024, ring: int = 1024,
                    trades: int = 1024) -> BookArrays:
    """Allocate an empty book able to hold prices ``1..max_price``."""
    i8 = np.int64
    meta = np.zeros(_META_SIZE, dtype=i8)
    meta[M_N_FREE] = slots
    meta[M_MAX_PRICE] = max_price
    meta[M_NEXT_ID] = 1
    meta[M_LAST_CANCEL] = np.iinfo(np.int64).min
    levels = (2, max_price + 1)
    return BookArrays(
        meta=meta,
        head=np.full(levels, -1, dtype=i8),
        tail=np.full(levels, -1, dtype=i8),
        count=np.zeros(levels, dtype=i8),
        spoof=np.zeros(levels, dtype=i8),
        o_id=np.zeros(slots, dtype=i8),
        o_side=np.zeros(slots, dtype=i8),
        o_price=np.zeros(slots, dtype=i8),
        o_owner=np.zeros(slots, dtype=i8),
        o_placed=np.zeros(slots, dtype=i8),
        o_cancel=np.zeros(slots, dtype=i8),
        o_spoof=np.zeros(slots, dtype=i8),
        o_prev=np.full(slots, -1, dtype=i8),
        o_next=np.full(slots, -1, dtype=i8),
        o_live=np.zeros(slots, dtype=i8),
        # popped from the end, so slot 0 is handed out first
        free=np.arange(slots - 1, -1, -1, dtype=i8),
        ring_slot=np.zeros(ring, dtype=i8),
        ring_id=np.zeros(ring, dtype=i8),
        tr_time=np.zeros(trades, dtype=i8),
        tr_price=np.zeros(trades, dtype=i8),
        tr_buy_id=np.zeros(trades, dtype=i8),
        tr_sell_id=np.zeros(trades, dtype=i8),
        tr_buyer=np.zeros(trades, dtype=i8),
        tr_seller=np.zeros(trades, dtype=i8),
    )


# ---------------------------------------------------------------------------
# compiled kernels
# ---------------------------------------------------------------------------


@njit(cache=True, inline="always")
def _link(b, s):
    side = 0 if b.o_side[s] == BUY else 1
    p = b.o_price[s]
    t = b.tail[side, p]
    b.o_prev[s] = t
    b.o_next[s] = -1
    if t == -1:
        b.head[side, p] = s
    else:
        b.o_next[t] = s
    b.tail[side, p] = s
    b.count[side, p] += 1
    if b.o_spoof[s]:
        b.spoof[side, p] += 1
        b.meta[M_N_SPOOF] += 1
    b.o_live[s] = 1
    if side == 0:
        b.meta[M_N_BIDS] += 1
        if b.meta[M_BEST_BID] == 0 or p > b.meta[M_BEST_BID]:
            b.meta[M_BEST_BID] = p
    else:
        b.meta[M_N_ASKS] += 1
        if b.meta[M_BEST_ASK] == 0 or p < b.meta[M_BEST_ASK]:
            b.meta[M_BEST_ASK] = p


@njit(cache=True, inline="always")
def _unlink(b, s):
    """Detach a resting order from its level and free its slot."""
    side = 0 if b.o_side[s] == BUY else 1
    p = b.o_price[s]
    prv = b.o_prev[s]
    nxt = b.o_next[s]
    if prv == -1:
        b.head[side, p] = nxt
    else:
        b.o_next[prv] = nxt
    if nxt == -1:
        b.tail[side, p] = prv
    else:
        b.o_prev[nxt] = prv
    b.count[side, p] -= 1
    if b.o_spoof[s]:
        b.spoof[side, p] -= 1
        b.meta[M_N_SPOOF] -= 1
    b.o_live[s] = 0
    b.o_prev[s] = -1
    b.o_next[s] = -1
    b.free[b.meta[M_N_FREE]] = s
    b.meta[M_N_FREE] += 1
    if side == 0:
        b.meta[M_N_BIDS] -= 1
        if b.count[0, p] == 0 and p == b.meta[M_BEST_BID]:
            if b.meta[M_N_BIDS] == 0:
                b.meta[M_BEST_BID] = 0
            else:
                q = p - 1
                while b.count[0, q] == 0:
                    q -= 1
                b.meta[M_BEST_BID] = q
    else:
        b.meta[M_N_ASKS] -= 1
        if b.count[1, p] == 0 and p == b.meta[M_BEST_ASK]:
            if b.meta[M_N_ASKS] == 0:
                b.meta[M_BEST_ASK] = 0
            else:
                q = p + 1
                while b.count[1, q] == 0:
                    q += 1
                b.meta[M_BEST_ASK] = q


@njit(cache=True, inline="always")
def _record_trade(b, now, price, buy_id, sell_id, buyer, seller):
    n = b.meta[M_N_TRADES]
    b.tr_time[n] = now
    b.tr_price[n] = price
    b.tr_buy_id[n] = buy_id
    b.tr_sell_id[n] = sell_id
    b.tr_buyer[n] = buyer
    b.tr_seller[n] = seller
    b.meta[M_N_TRADES] = n + 1
    b.meta[M_LAST_PRICE] = price
    return n


@njit(cache=True, inline="always")
def _hit(b, aggressor_side, order_id, owner, now):
    """Match one share against the best opposite order; return trade index."""
    if aggressor_side == BUY:
        p = b.meta[M_BEST_ASK]
        s = b.head[1, p]
        idx = _record_trade(b, now, p, order_id, b.o_id[s], owner, b.o_owner[s])
    else:
        p = b.meta[M_BEST_BID]
        s = b.head[0, p]
        idx = _record_trade(b, now, p, b.o_id[s], order_id, b.o_owner[s], owner)
    _unlink(b, s)
    return idx


@njit(cache=True)
def submit_limit_arrays(b, order_id, side, price, owner, placed, cancel, spoof):
    """Submit a one-share limit order.

    Returns the trade index when the order crosses, ``NO_TRADE`` when it rests.
    Callers guarantee ``1 <= price <= max_price`` and free capacity.
    """
    if side == BUY:
        crosses = b.meta[M_N_ASKS] > 0 and b.meta[M_BEST_ASK] <= price
    else:
        crosses = b.meta[M_N_BIDS] > 0 and b.meta[M_BEST_BID] >= price
    if crosses:
        return _hit(b, side, order_id, owner, placed)
    nf = b.meta[M_N_FREE] - 1
    s = b.free[nf]
    b.meta[M_N_FREE] = nf
    b.o_id[s] = order_id
    b.o_side[s] = side
    b.o_price[s] = price
    b.o_owner[s] = owner
    b.o_placed[s] = placed
    b.o_cancel[s] = cancel
    b.o_spoof[s] = 1 if spoof else 0
    _link(b, s)
    if not spoof:
        cap = b.ring_slot.shape[0]
        pos = (b.meta[M_RING_HEAD] + b.meta[M_RING_LEN]) % cap
        b.ring_slot[pos] = s
        b.ring_id[pos] = order_id
        b.meta[M_RING_LEN] += 1
        b.meta[M_LAST_CANCEL] = cancel
    return NO_TRADE


@njit(cache=True)
def submit_market_arrays(b, order_id, side, owner, now):
    """Execute one share against the best opposite order, or ``NO_LIQUIDITY``."""
    if side == BUY:
        if b.meta[M_N_ASKS] == 0:
            return NO_LIQUIDITY
    else:
        if b.meta[M_N_BIDS] == 0:
            return NO_LIQUIDITY
    return _hit(b, side, order_id, owner, now)


@njit(cache=True)
def expire_arrays(b, now):
    """Remove every non-spoof resting order with ``cancel_at <= now``."""
    cap = b.ring_slot.shape[0]
    removed = 0
    while b.meta[M_RING_LEN] > 0:
        h = b.meta[M_RING_HEAD]
        s = b.ring_slot[h]
        oid = b.ring_id[h]
        live = b.o_live[s] == 1 and b.o_id[s] == oid
        if live and b.o_cancel[s] > now:
            break
        b.meta[M_RING_HEAD] = (h + 1) % cap
        b.meta[M_RING_LEN] -= 1
        if live:
            _unlink(b, s)
            removed += 1
    return removed


@njit(cache=True, inline="always")
def cancel_slot(b, s):
    if b.o_live[s] == 1:
        _unlink(b, s)


@njit(cache=True)
def depth_arrays(b, side, window, include_spoof):
    """Resting order count within ``window`` ticks of the best quote, inclusive."""
    if side == BUY:
        best = b.meta[M_BEST_BID]
        if best == 0:
            return 0
        lo = best - window
        if lo < 1:
            lo = 1
        n = 0
        for p in range(lo, best + 1):
            n += b.count[0, p]
            if not include_spoof:
                n -= b.spoof[0, p]
        return n
    best = b.meta[M_BEST_ASK]
    if best == 0:
        return 0
    hi = best + window
    top = b.count.shape[1] - 1
    if hi > top:
        hi = top
    n = 0
    for p in range(best, hi + 1):
        n += b.count[1, p]
        if not include_spoof:
            n -= b.spoof[1, p]
    return n


@njit(cache=True)
def side_slots(b, side):
    """Slots of one side in matching priority order."""
    if side == BUY:
        n = b.meta[M_N_BIDS]
        out = np.empty(n, dtype=np.int64)
        k = 0
        p = b.meta[M_BEST_BID]
        while k < n:
            s = b.head[0, p]
            while s != -1:
                out[k] = s
                k += 1
                s = b.o_next[s]
            p -= 1
        return out
    n = b.meta[M_N_ASKS]
    out = np.empty(n, dtype=np.int64)
    k = 0
    p = b.meta[M_BEST_ASK]
    while k < n:
        s = b.head[1, p]
        while s != -1:
            out[k] = s
            k += 1
            s = b.o_next[s]
        p += 1
    return out


# ---------------------------------------------------------------------------
# Python-facing wrapper
# ---------------------------------------------------------------------------


class OrderBookError(ValueError):
    pass


class NoLiquidity(OrderBookError):
    """A market order found the opposite side empty; nothing changed."""


@dataclass(frozen=True)
class Order:
    id: int
    side: int
    price: int
    owner: int
    placed_at: int
    cancel_at: int
    quantity: int = 1
    is_spoof: bool = False


@dataclass(frozen=True)
class Trade:
    time: int
    price: int
    buy_order_id: int
    sell_order_id: int
    buyer: int
    seller: int


@dataclass(frozen=True)
class MatchOutcome:
    trade: Trade | None
    resting: Order | None


TRADE_CSV_HEADER = ("time", "price", "buyerOwner", "sellerOwner", "buyOrderId", "sellOrderId")


class OrderBook:
    """Continuous double auction book for one-share orders.

    >>> book = OrderBook(max_price=20_000)
    >>> book.submit_limit(book.new_order(BUY, 9_999, owner=1, time=0, cancel_after=100)).trade is None
    True
    >>> book.best_bid
    9999
    """

    def __init__(self, max_price: int = 200_000, capacity: int = 1024):
        if max_price < 1:
            raise OrderBookError("max_price must be >= 1")
        self.arrays = new_book_arrays(max_price, capacity, capacity, capacity)
        self._seen_ids: set[int] = set()
        self._now = None

    # -- capacity ---------------------------------------------------------
    def _grow_slots(self) -> None:
        b = self.arrays
        old = b.o_id.shape[0]
        new = old * 2
        changes = {}
        for name in ("o_id", "o_side", "o_price", "o_owner", "o_placed",
                     "o_cancel", "o_spoof", "o_live"):
            arr = np.zeros(new, dtype=np.int64)
            arr[:old] = getattr(b, name)
            changes[name] = arr
        for name in ("o_prev", "o_next"):
            arr = np.full(new, -1, dtype=np.int64)
            arr[:old] = getattr(b, name)
            changes[name] = arr
        nf = int(b.meta[M_N_FREE])
        free = np.zeros(new, dtype=np.int64)
        free[: new - old] = np.arange(new - 1, old - 1, -1)
        free[new - old: new - old + nf] = b.free[:nf]
        changes["free"] = free
        b.meta[M_N_FREE] = nf + new - old
        self.arrays = b._replace(**changes)

    def reserve(self, free_slots: int) -> None:
        """Make sure at least ``free_slots`` orders can be added without matching."""
        while self.arrays.meta[M_N_FREE] < free_slots:
            self._grow_slots()

    def _ensure_capacity(self) -> None:
        self.reserve(1)
        b = self.arrays
        changes = {}
        if b.meta[M_RING_LEN] == b.ring_slot.shape[0]:
            cap = b.ring_slot.shape[0]
            order = (b.meta[M_RING_HEAD] + np.arange(cap)) % cap
            for name in ("ring_slot", "ring_id"):
                arr = np.zeros(cap * 2, dtype=np.int64)
                arr[:cap] = getattr(b, name)[order]
                changes[name] = arr
            b.meta[M_RING_HEAD] = 0
        if b.meta[M_N_TRADES] == b.tr_time.shape[0]:
            cap = b.tr_time.shape[0]
            for name in ("tr_time", "tr_price", "tr_buy_id", "tr_sell_id",
                         "tr_buyer", "tr_seller"):
                arr = np.zeros(cap * 2, dtype=np.int64)
                arr[:cap] = getattr(b, name)
                changes[name] = arr
        if changes:
            self.arrays = b._replace(**changes)

    # -- properties -------------------------------------------------------
    @property
    def max_price(self) -> int:
        return int(self.arrays.meta[M_MAX_PRICE])

    @property
    def best_bid(self) -> int | None:
        p = int(self.arrays.meta[M_BEST_BID])
        return p or None

    @property
    def best_ask(self) -> int | None:
        p = int(self.arrays.meta[M_BEST_ASK])
        return p or None

    @property
    def last_trade_price(self) -> int | None:
        p = int(self.arrays.meta[M_LAST_PRICE])
        return p or None

    def __len__(self) -> int:
        return int(self.arrays.meta[M_N_BIDS] + self.arrays.meta[M_N_ASKS])

    # -- orders -----------------------------------------------------------
    def new_order(self, side: int, price: int, owner: int, time: int,
                  cancel_after: int, is_spoof: bool = False) -> Order:
        """Build an order with the next free id."""
        meta = self.arrays.meta
        while int(meta[M_NEXT_ID]) in self._seen_ids:
            meta[M_NEXT_ID] += 1
        oid = int(meta[M_NEXT_ID])
        meta[M_NEXT_ID] += 1
        return Order(oid, side, price, owner, time, time + cancel_after, 1, is_spoof)

    def _check_time(self, time: int) -> None:
        if self._now is not None and time < self._now:
            raise OrderBookError(f"time went backwards: {time} < {self._now}")
        self._now = time

    def submit_limit(self, order: Order) -> MatchOutcome:
        if order.side not in (BUY, SELL):
            raise OrderBookError(f"bad side {order.side!r}")
        if order.quantity != 1:
            raise OrderBookError("only one-share orders are supported")
        if order.price < 1:
            raise OrderBookError(f"price must be positive, got {order.price}")
        if order.price > self.max_price:
            raise OrderBookError(f"price {order.price} above max_price {self.max_price}")
        if order.cancel_at <= order.placed_at:
            raise OrderBookError("cancel_at must be after placed_at")
        if order.id in self._seen_ids:
            raise OrderBookError(f"duplicate order id {order.id}")
        if not order.is_spoof and order.cancel_at < self.arrays.meta[M_LAST_CANCEL]:
            raise OrderBookError("cancel_at must be non-decreasing across orders")
        self._check_time(order.placed_at)
        self._seen_ids.add(order.id)
        self._ensure_capacity()
        idx = submit_limit_arrays(self.arrays, order.id, order.side, order.price,
                                  order.owner, order.placed_at, order.cancel_at,
                                  order.is_spoof)
        if idx == NO_TRADE:
            return MatchOutcome(None, order)
        return MatchOutcome(self._trade(idx), None)

    def submit_market(self, side: int, owner: int, time: int) -> MatchOutcome:
        """Take one share from the best opposite order.

        Raises :class:`NoLiquidity` (book untouched) if that side is empty.
        """
        if side not in (BUY, SELL):
            raise OrderBookError(f"bad side {side!r}")
        opposite = self.arrays.meta[M_N_ASKS if side == BUY else M_N_BIDS]
        if opposite == 0:
            raise NoLiquidity("opposite side is empty")
        self._check_time(time)
        self._ensure_capacity()
        order = self.new_order(side, self.max_price if side == BUY else 1, owner, time, 1)
        self._seen_ids.add(order.id)
        idx = submit_market_arrays(self.arrays, order.id, side, owner, time)
        return MatchOutcome(self._trade(idx), None)

    def expire(self, now: int) -> int:
        self._check_time(now)
        return int(expire_arrays(self.arrays, now))

    # -- queries ----------------------------------------------------------
    def depth(self, side: int, window: int, include_spoof: bool = True) -> int:
        if window < 1:
            raise OrderBookError("window must be >= 1")
        return int(depth_arrays(self.arrays, side, window, include_spoof))

    def obi(self, window: int, include_spoof: bool = True) -> int:
        return self.depth(BUY, window, include_spoof) - self.depth(SELL, window, include_spoof)

    def _order(self, s: int) -> Order:
        b = self.arrays
        return Order(int(b.o_id[s]), int(b.o_side[s]), int(b.o_price[s]),
                     int(b.o_owner[s]), int(b.o_placed[s]), int(b.o_cancel[s]),
                     1, bool(b.o_spoof[s]))

    def bids(self) -> list[Order]:
        """Resting buy orders, best first."""
        return [self._order(s) for s in side_slots(self.arrays, BUY)]

    def asks(self) -> list[Order]:
        return [self._order(s) for s in side_slots(self.arrays, SELL)]

    def _trade(self, i: int) -> Trade:
        b = self.arrays
        return Trade(int(b.tr_time[i]), int(b.tr_price[i]), int(b.tr_buy_id[i]),
                     int(b.tr_sell_id[i]), int(b.tr_buyer[i]), int(b.tr_seller[i]))

    @property
    def trades(self) -> list[Trade]:
        return [self._trade(i) for i in range(int(self.arrays.meta[M_N_TRADES]))]

    def is_crossed(self) -> bool:
        bb, ba = self.best_bid, self.best_ask
        return bb is not None and ba is not None and bb >= ba


def write_trades_csv(path, trades: Iterable[Trade]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRADE_CSV_HEADER)
        for tr in trades:
            w.writerow((tr.time, tr.price, tr.buyer, tr.seller, tr.buy_order_id, tr.sell_order_id))
