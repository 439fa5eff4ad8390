"""Market-environment injectors layered on top of the stable market.

* crash / surge: during the injection window each normal-agent turn is, with a
  fixed probability, replaced by a one-share limit order at an extreme price
  (sell at 1 or buy at 100,000) that hits the opposite best quote.
* spoof: in alternating windows a spoofer keeps a fixed number of one-share
  buy orders laddered just under the best genuine bid, re-pegging them as the
  bid moves.
"""
from __future__ import annotations

import numpy as np
from numba import njit

from .config import ScenarioConfig
from .orderbook import (BUY, M_BEST_BID, M_N_BIDS, M_N_FREE, M_N_SPOOF, M_NEXT_ID,
                        SELL, OrderBook, cancel_slot, submit_limit_arrays)

STABLE = 0
CRASH = 1
SURGE = 2
SPOOF = 3

SCENARIO_CODES = {"stable": STABLE, "crash": CRASH, "surge": SURGE, "spoof": SPOOF}

OWNER_SPOOFER = 0
SPOOF_LIFETIME = 1 << 40  # spoof orders are never aged out


@njit(cache=True)
def forced_order_kernel(kind, t, start, end, prob, sell_price, buy_price, u):
    """``(side, price)`` of a forced order for uniform draw ``u``, or ``(0, 0)``."""
    if t < start or t >= end or u >= prob:
        return 0, 0
    if kind == CRASH:
        return SELL, sell_price
    if kind == SURGE:
        return BUY, buy_price
    return 0, 0


def maybe_force_order(cfg: ScenarioConfig, t: int, rng: np.random.Generator):
    """Forced ``(side, price)`` replacing an NA's order this turn, else ``None``."""
    if cfg.kind not in ("crash", "surge"):
        return None
    side, price = forced_order_kernel(SCENARIO_CODES[cfg.kind], t, cfg.window_start,
                                      cfg.window_end, cfg.forced_probability,
                                      cfg.forced_sell_price, cfg.forced_buy_price,
                                      rng.random())
    return None if side == 0 else (side, price)


@njit(cache=True)
def spoof_active(t, start, cycle):
    if t < start:
        return False
    return ((t - start) // cycle) % 2 == 0


@njit(cache=True)
def best_genuine_bid(b):
    """Highest bid price holding at least one non-spoof order, 0 if none."""
    if b.meta[M_N_BIDS] - b.meta[M_N_SPOOF] <= 0:
        return 0
    p = b.meta[M_BEST_BID]
    while b.count[0, p] == b.spoof[0, p]:
        p -= 1
    return p


@njit(cache=True)
def clear_spoofs(b, slots, ids, n):
    for i in range(n):
        s = slots[i]
        if b.o_live[s] == 1 and b.o_id[s] == ids[i]:
            cancel_slot(b, s)


@njit(cache=True)
def _level_target(j, count, levels):
    """Spoof orders wanted ``j + 1`` ticks under the reference bid."""
    return count // levels + (1 if j < count % levels else 0)


@njit(cache=True)
def spoof_tick_kernel(b, slots, ids, state, t, start, cycle, count, window):
    """Maintain spoof orders for step ``t``.

    The ladder spreads ``count`` buys evenly over the ``window`` ticks just
    under the best genuine bid. ``state[0]`` holds the bid the ladder is
    pegged to (0 when no ladder is live). When the bid moves, only orders
    that fell out of the new band (or were filled) are moved; the others keep
    their queue position. Returns +1 when the ladder was placed or re-pegged,
    -1 when it was removed, 0 when nothing changed.
    """
    live = state[0] != 0
    if not spoof_active(t, start, cycle) or count == 0:
        if live:
            clear_spoofs(b, slots, ids, count)
            state[0] = 0
            return -1
        return 0
    ref = best_genuine_bid(b)
    levels = min(window, ref - 1)
    if ref == 0 or levels < 1:
        if live:
            clear_spoofs(b, slots, ids, count)
            state[0] = 0
            return -1
        return 0
    if live and ref == state[0] and b.meta[M_N_SPOOF] == count:
        return 0
    todo = np.empty(count, dtype=np.int64)
    n_todo = 0
    for i in range(count):
        s = slots[i]
        if live and b.o_live[s] == 1 and b.o_id[s] == ids[i]:
            p = b.o_price[s]
            j = ref - 1 - p
            if 0 <= j < levels and b.spoof[0, p] <= _level_target(j, count, levels):
                continue
            cancel_slot(b, s)
        todo[n_todo] = i
        n_todo += 1
    j = 0
    for k in range(n_todo):
        while b.spoof[0, ref - 1 - j] >= _level_target(j, count, levels):
            j += 1
        i = todo[k]
        oid = b.meta[M_NEXT_ID]
        b.meta[M_NEXT_ID] = oid + 1
        submit_limit_arrays(b, oid, BUY, ref - 1 - j, OWNER_SPOOFER, t, t + SPOOF_LIFETIME, True)
        # the order rested (it is below every ask), so its slot is the one just popped
        slots[i] = b.free[b.meta[M_N_FREE]]
        ids[i] = oid
    state[0] = ref
    return 1


class Spoofer:
    """Spoof ladder bound to an :class:`OrderBook` (for interactive use and tests)."""

    def __init__(self, cfg: ScenarioConfig):
        self.cfg = cfg
        self.slots = np.zeros(max(cfg.spoof_count, 1), dtype=np.int64)
        self.ids = np.zeros(max(cfg.spoof_count, 1), dtype=np.int64)
        self.state = np.zeros(1, dtype=np.int64)

    def tick(self, book: OrderBook, t: int) -> int:
        cfg = self.cfg
        book.reserve(cfg.spoof_count + 1)
        return int(spoof_tick_kernel(book.arrays, self.slots, self.ids, self.state, t,
                                     cfg.window_start, cfg.spoof_cycle, cfg.spoof_count,
                                     cfg.spoof_window))

    def count_in(self, book: OrderBook) -> int:
        return int(book.arrays.meta[M_N_SPOOF])
