"""Execution algorithm agents: plain periodic buyers (AA) and OBI-gated buyers (OAA)."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from numba import njit

from .config import ExecAlgoConfig
from .orderbook import BUY, SELL, OrderBook

KIND_NONE = 0
KIND_AA = 1
KIND_OAA = 2

KIND_CODES = {"none": KIND_NONE, "AA": KIND_AA, "OAA": KIND_OAA}

NOT_ALGO_TURN = 0


class InfeasibleTarget(ValueError):
    pass


@dataclass(frozen=True)
class FillRecord:
    time: int
    price: int
    algo_index: int


@njit(cache=True)
def decide_kernel(kind, buy_depth, sell_depth):
    """True when the agent should send a market buy this turn."""
    if kind == KIND_AA:
        return True
    if kind == KIND_OAA:
        return buy_depth > sell_depth
    return False


@njit(cache=True)
def schedule_kernel(t, start, interval, count):
    """Algorithm agent index (1-based) acting at step ``t``, or 0 for an NA turn.

    Decision turns fall strictly after ``start``, every ``interval`` steps.
    """
    if t <= start:
        return NOT_ALGO_TURN
    d = t - start
    if d % interval != 0:
        return NOT_ALGO_TURN
    return (d // interval - 1) % count + 1


def decide(kind: str, book: OrderBook, window: int) -> bool:
    """Whether an agent of ``kind`` places a market buy given ``book``."""
    return bool(decide_kernel(KIND_CODES[kind], book.depth(BUY, window), book.depth(SELL, window)))


def schedule_turn(t: int, cfg: ExecAlgoConfig) -> int:
    return int(schedule_kernel(t, cfg.start, cfg.interval, cfg.count))


def decision_turns(t_e: int, start: int, interval: int) -> int:
    """Number of decision turns in a run of ``t_e`` steps."""
    if t_e <= start:
        return 0
    return (t_e - start) // interval


@dataclass(frozen=True)
class Equalization:
    target: int
    interval: int
    implied_count: int


def equalize_order_counts(oaa_run_counts: Sequence[int], t_e: int, start: int) -> Equalization:
    """Choose the AA decision interval that reproduces the mean OAA order count.

    >>> equalize_order_counts([284], 400_000, 100_000)
    Equalization(target=284, interval=1056, implied_count=284)
    """
    if not oaa_run_counts:
        raise ValueError("need at least one OAA run count")
    span = t_e - start
    mean = sum(oaa_run_counts) / len(oaa_run_counts)
    # round half up, independent of banker's rounding
    target = int(math.floor(mean + 0.5))
    if target < 1:
        raise InfeasibleTarget(f"mean OAA order count {mean:.2f} rounds to zero")
    if target > span:
        raise InfeasibleTarget(f"{target} orders do not fit in {span} steps")
    interval = max(1, int(math.floor(span / target + 0.5)))
    return Equalization(target, interval, decision_turns(t_e, start, interval))
