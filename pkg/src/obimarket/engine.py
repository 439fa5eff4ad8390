"""Deterministic simulation loop.

One time step is one agent action: either a normal agent's turn (learn, then
submit a model-driven or forced order) or an algorithm agent's decision turn.
Before the action, aged orders are expired and the spoof ladder is
maintained; after it the market price and the book depths are recorded.

Random numbers come from named substreams spawned off the run seed and are
indexed by time step, so switching scenarios or algorithm kinds leaves every
other draw untouched.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numba import njit

from .agents import (expected_return_kernel, init_agents, learn_kernel,
                     order_from_expectation_kernel, price_at, strategy_returns_kernel)
from .config import SimConfig
from .execution import KIND_CODES, KIND_NONE, decide_kernel, decision_turns, schedule_kernel
from .orderbook import (BUY, M_LAST_PRICE, M_N_TRADES, M_NEXT_ID, SELL, depth_arrays,
                        expire_arrays, new_book_arrays, submit_limit_arrays,
                        submit_market_arrays)
from .scenarios import SCENARIO_CODES, SPOOF, forced_order_kernel, spoof_tick_kernel

STREAMS = ("init", "noise", "order_price", "learning", "scenario")

COUNTER_NAMES = (
    "na_orders",        # limit orders sent by normal agents (model + forced)
    "forced_orders",
    "skipped_turns",    # NA turns that produced no valid order
    "algo_turns",
    "algo_orders",      # market buys that executed
    "no_liquidity",
    "spoof_ladders",    # ladder placements including re-pegs
    "expired",
)
C_NA, C_FORCED, C_SKIP, C_TURNS, C_ALGO, C_NOLIQ, C_SPOOF, C_EXPIRED = range(len(COUNTER_NAMES))

SPOOF_ON = 1
SPOOF_OFF = -1


def owner_label(owner: int, n_normal: int, algo_kind: str) -> str:
    if owner == 0:
        return "SPOOF"
    if owner <= n_normal:
        return f"NA{owner}"
    return f"{algo_kind}{owner - n_normal}"


@njit(cache=True)
def _simulate(b, hist, buy_depth, sell_depth, fill_t, fill_p, fill_k, counters,
              ev_t, ev_a, w1, w2, u, tau, eps, z, lu, fu,
              p_f, t_e, t_c, t_l, k_l, delta_l, w1_max, w2_max, n_normal, max_price,
              algo_kind, algo_count, algo_interval, algo_start, window,
              sc_kind, win_start, win_end, prob, sell_price, buy_price,
              spoof_cycle, spoof_count, spoof_window, spoof_slots, spoof_ids, spoof_state, warmup):
    hist[0] = p_f
    na = 0
    n_fill = 0
    n_ev = 0
    for t in range(1, t_e + 1):
        counters[C_EXPIRED] += expire_arrays(b, t)

        if sc_kind == SPOOF:
            was_live = spoof_state[0] != 0
            r = spoof_tick_kernel(b, spoof_slots, spoof_ids, spoof_state, t, win_start,
                                  spoof_cycle, spoof_count, spoof_window)
            if r == 1:
                counters[C_SPOOF] += 1
                if not was_live:
                    ev_t[n_ev] = t
                    ev_a[n_ev] = SPOOF_ON
                    n_ev += 1
            elif r == -1:
                ev_t[n_ev] = t
                ev_a[n_ev] = SPOOF_OFF
                n_ev += 1

        k = 0
        if algo_kind != KIND_NONE:
            k = schedule_kernel(t, algo_start, algo_interval, algo_count)

        if k > 0:
            counters[C_TURNS] += 1
            bd = depth_arrays(b, BUY, window, True)
            sd = depth_arrays(b, SELL, window, True)
            if decide_kernel(algo_kind, bd, sd):
                oid = b.meta[M_NEXT_ID]
                b.meta[M_NEXT_ID] = oid + 1
                idx = submit_market_arrays(b, oid, BUY, n_normal + k, t)
                if idx >= 0:
                    fill_t[n_fill] = t
                    fill_p[n_fill] = b.tr_price[idx]
                    fill_k[n_fill] = k
                    n_fill += 1
                    counters[C_ALGO] += 1
                else:
                    counters[C_NOLIQ] += 1
        else:
            j = na % n_normal
            na += 1
            prev = hist[t - 1]
            r1, r2 = strategy_returns_kernel(hist, t, tau[j], p_f)
            r_l = math.log(prev / price_at(hist, t - 1 - t_l, p_f))
            if t <= warmup:
                # book seeding: no trend signal and no learning yet
                r2 = 0.0
                r_l = 0.0
            w1[j], w2[j] = learn_kernel(w1[j], w2[j], w1_max, w2_max, r1, r2, r_l, k_l,
                                        lu[t, 0], lu[t, 1], delta_l, lu[t, 2], lu[t, 3],
                                        lu[t, 4], lu[t, 5])
            side, price = forced_order_kernel(sc_kind, t, win_start, win_end, prob,
                                              sell_price, buy_price, fu[t])
            if side != 0:
                counters[C_FORCED] += 1
            elif w1[j] + w2[j] + u[j] > 0.0:
                re = expected_return_kernel(w1[j], w2[j], u[j], r1, r2, eps[t])
                side, price = order_from_expectation_kernel(re, prev, z[t])
                if price > max_price:
                    side = 0
            if side != 0:
                oid = b.meta[M_NEXT_ID]
                b.meta[M_NEXT_ID] = oid + 1
                submit_limit_arrays(b, oid, side, price, j + 1, t, t + t_c, False)
                counters[C_NA] += 1
            else:
                counters[C_SKIP] += 1

        last = b.meta[M_LAST_PRICE]
        hist[t] = last if last > 0 else hist[t - 1]
        buy_depth[t] = depth_arrays(b, BUY, window, True)
        sell_depth[t] = depth_arrays(b, SELL, window, True)
    return n_fill, n_ev


@dataclass
class TradeTape:
    time: np.ndarray
    price: np.ndarray
    buy_order_id: np.ndarray
    sell_order_id: np.ndarray
    buyer: np.ndarray
    seller: np.ndarray

    def __len__(self) -> int:
        return len(self.time)


@dataclass
class RunResult:
    """Everything recorded during one run.

    ``prices[i]``, ``buy_depth[i]`` and ``sell_depth[i]`` describe the state
    at the end of step ``i + 1``; the market price before step 1 is ``p_f``.
    """

    config: SimConfig
    prices: np.ndarray
    buy_depth: np.ndarray
    sell_depth: np.ndarray
    trades: TradeTape
    fill_time: np.ndarray
    fill_price: np.ndarray
    fill_agent: np.ndarray
    counters: dict[str, int]
    spoof_events: np.ndarray = field(default_factory=lambda: np.zeros((0, 2), dtype=np.int64))

    @property
    def seed(self) -> int:
        return self.config.seed

    @property
    def n_orders(self) -> int:
        """Market buys executed by the algorithm agents."""
        return int(self.counters["algo_orders"])

    def price_path(self) -> np.ndarray:
        """Prices at steps ``0..t_e`` (step 0 is the initial price)."""
        return np.concatenate(([self.config.p_f], self.prices))


def _streams(seed: int) -> dict[str, np.random.Generator]:
    children = np.random.SeedSequence(seed).spawn(len(STREAMS))
    return {name: np.random.default_rng(c) for name, c in zip(STREAMS, children)}


def run_simulation(cfg: SimConfig) -> RunResult:
    """Run one simulation; the result depends only on ``cfg`` (seed included)."""
    ex, sc = cfg.execution, cfg.scenario
    rng = _streams(cfg.seed)
    w1, w2, u, tau = init_agents(cfg.n_normal, rng["init"], cfg.w1_max, cfg.w2_max,
                                 cfg.u_max, cfg.tau_max)
    n = cfg.t_e + 1
    eps = rng["noise"].normal(0.0, cfg.sigma_eps, n)
    z = rng["order_price"].standard_normal(n)
    lu = rng["learning"].random((n, 6))
    fu = rng["scenario"].random(n)

    spoof_count = sc.spoof_count if sc.kind == "spoof" else 0
    b = new_book_arrays(cfg.max_price, slots=cfg.t_c + spoof_count + 16,
                        ring=cfg.t_c + 16, trades=n + 16)
    hist = np.zeros(n, dtype=np.float64)
    buy_depth = np.zeros(n, dtype=np.int64)
    sell_depth = np.zeros(n, dtype=np.int64)
    algo_kind = KIND_CODES[ex.kind]
    max_fills = decision_turns(cfg.t_e, ex.start, ex.interval) + 1
    fill_t = np.zeros(max_fills, dtype=np.int64)
    fill_p = np.zeros(max_fills, dtype=np.int64)
    fill_k = np.zeros(max_fills, dtype=np.int64)
    counters = np.zeros(len(COUNTER_NAMES), dtype=np.int64)
    # a ladder can also drop and come back when the bid side runs dry, so
    # the event log is sized for the worst case of one event per step
    max_ev = n + 16 if sc.kind == "spoof" else 1
    ev_t = np.zeros(max_ev, dtype=np.int64)
    ev_a = np.zeros(max_ev, dtype=np.int64)
    spoof_slots = np.zeros(max(spoof_count, 1), dtype=np.int64)
    spoof_ids = np.zeros(max(spoof_count, 1), dtype=np.int64)
    spoof_state = np.zeros(1, dtype=np.int64)

    n_fill, n_ev = _simulate(
        b, hist, buy_depth, sell_depth, fill_t, fill_p, fill_k, counters, ev_t, ev_a,
        w1, w2, u, tau.astype(np.int64), eps, z, lu, fu,
        float(cfg.p_f), cfg.t_e, cfg.t_c, cfg.t_l, cfg.k_l, cfg.delta_l,
        cfg.w1_max, cfg.w2_max, cfg.n_normal, cfg.max_price,
        algo_kind, ex.count, ex.interval, ex.start, ex.depth_window,
        SCENARIO_CODES[sc.kind], sc.window_start, sc.window_end, sc.forced_probability,
        sc.forced_sell_price, sc.forced_buy_price,
        sc.spoof_cycle, spoof_count, sc.spoof_window, spoof_slots, spoof_ids, spoof_state, cfg.warmup)

    nt = int(b.meta[M_N_TRADES])
    tape = TradeTape(b.tr_time[:nt].copy(), b.tr_price[:nt].copy(), b.tr_buy_id[:nt].copy(),
                     b.tr_sell_id[:nt].copy(), b.tr_buyer[:nt].copy(), b.tr_seller[:nt].copy())
    return RunResult(
        config=cfg,
        prices=hist[1:].astype(np.int64),
        buy_depth=buy_depth[1:].copy(),
        sell_depth=sell_depth[1:].copy(),
        trades=tape,
        fill_time=fill_t[:n_fill].copy(),
        fill_price=fill_p[:n_fill].copy(),
        fill_agent=fill_k[:n_fill].copy(),
        counters={name: int(counters[i]) for i, name in enumerate(COUNTER_NAMES)},
        spoof_events=np.stack([ev_t[:n_ev], ev_a[:n_ev]], axis=1),
    )


def default_workers() -> int:
    return max(1, os.cpu_count() or 1)


def run_batch(cfg: SimConfig, seeds: Sequence[int], workers: int | None = None) -> list[RunResult]:
    """Run ``cfg`` once per seed; results come back in seed-list order."""
    seeds = list(seeds)
    if len(set(seeds)) != len(seeds):
        raise ValueError("seeds must be distinct")
    cfgs = [cfg.with_(seed=s) for s in seeds]
    workers = default_workers() if workers is None else workers
    if workers <= 1 or len(cfgs) <= 1:
        return [run_simulation(c) for c in cfgs]
    with ProcessPoolExecutor(max_workers=min(workers, len(cfgs))) as pool:
        return list(pool.map(run_simulation, cfgs))
