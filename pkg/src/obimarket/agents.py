"""Normal agents: fundamental / technical / noise mixing with learned weights.

Each turn an agent first adapts its two strategy weights to the realised
return over the learning horizon, then forms an expected return, an expected
price around the last market price, and a one-share limit order drawn around
that expected price.

The scalar kernels (``*_kernel``) are compiled and called from the simulation
loop; the dataclass-level functions below them are the readable entry points.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .orderbook import BUY, SELL

EST = 0.003
"""Relative standard deviation of the order price around the expected price."""


class DegenerateWeights(ValueError):
    pass


@njit(cache=True)
def price_at(prices, t, p0):
    """Market price at step ``t``, padded with ``p0`` for ``t < 0``."""
    if t < 0:
        return p0
    return prices[t]


@njit(cache=True)
def strategy_returns_kernel(prices, t, tau, p_f):
    prev = price_at(prices, t - 1, p_f)
    r1 = math.log(p_f / prev)
    r2 = math.log(prev / price_at(prices, t - 1 - tau, p_f))
    return r1, r2


@njit(cache=True)
def expected_return_kernel(w1, w2, u, r1, r2, eps):
    # caller checks w1 + w2 + u > 0
    return (w1 * r1 + w2 * r2 + u * eps) / (w1 + w2 + u)


@njit(cache=True)
def _adapt(w, w_max, r, r_l, k_l, q):
    if r == 0.0 or r_l == 0.0:
        return w
    step = k_l * abs(r_l) * q
    if (r > 0.0) == (r_l > 0.0):
        w = w + step * (w_max - w)
    else:
        w = w - step * w
    if w < 0.0:
        return 0.0
    if w > w_max:
        return w_max
    return w


@njit(cache=True)
def learn_kernel(w1, w2, w1_max, w2_max, r1, r2, r_l, k_l, q1, q2,
                 delta_l, reset_u1, reset_u2, redraw1, redraw2):
    """One learning step. ``reset_u*`` decide resets, ``redraw*`` are U(0,1)."""
    w1 = _adapt(w1, w1_max, r1, r_l, k_l, q1)
    w2 = _adapt(w2, w2_max, r2, r_l, k_l, q2)
    if reset_u1 < delta_l:
        w1 = redraw1 * w1_max
    if reset_u2 < delta_l:
        w2 = redraw2 * w2_max
    return w1, w2


@njit(cache=True)
def order_from_expectation_kernel(re, prev_price, z):
    """Return ``(side, price)`` for a standard-normal draw ``z``; side 0 means skip."""
    pe = prev_price * math.exp(re)
    po = pe + pe * EST * z
    if po < pe:
        side = BUY
    elif po > pe:
        side = SELL
    else:
        return 0, 0
    price = int(math.floor(po + 0.5))
    if price < 1:
        return 0, 0
    return side, price


# ---------------------------------------------------------------------------
# readable API
# ---------------------------------------------------------------------------


@dataclass
class NormalAgentState:
    w1: float
    w2: float
    u: float
    tau: int
    w1_max: float = 1.0
    w2_max: float = 10.0

    def check(self) -> None:
        assert 0.0 <= self.w1 <= self.w1_max, self.w1
        assert 0.0 <= self.w2 <= self.w2_max, self.w2


@dataclass
class MarketView:
    """Price history ``prices[0..]`` with ``prices[0] == fundamental``."""

    prices: np.ndarray
    fundamental: float

    def price_at(self, t: int) -> float:
        return float(price_at(self.prices, t, self.fundamental))


def init_agents(n: int, rng: np.random.Generator, w1_max=1.0, w2_max=10.0,
                u_max=1.0, tau_max=10_000):
    """Draw initial weights and lookbacks for ``n`` agents as arrays."""
    w1 = rng.uniform(0.0, w1_max, n)
    w2 = rng.uniform(0.0, w2_max, n)
    u = rng.uniform(0.0, u_max, n)
    tau = rng.integers(1, tau_max, size=n, endpoint=True)
    return w1, w2, u, tau


def strategy_returns(state: NormalAgentState, view: MarketView, t: int) -> tuple[float, float]:
    return strategy_returns_kernel(np.asarray(view.prices, dtype=np.float64), t,
                                   state.tau, float(view.fundamental))


def expected_return(state: NormalAgentState, view: MarketView, t: int,
                    rng: np.random.Generator, sigma_eps: float = 0.06):
    """Return ``(re, r1, r2)`` with the noise term drawn from ``rng``."""
    if state.w1 + state.w2 + state.u == 0.0:
        raise DegenerateWeights("w1 + w2 + u == 0")
    r1, r2 = strategy_returns(state, view, t)
    eps = rng.normal(0.0, sigma_eps)
    return expected_return_kernel(state.w1, state.w2, state.u, r1, r2, eps), r1, r2


def order_from_expectation(re: float, view: MarketView, t: int, rng: np.random.Generator):
    """``(side, price)`` of the agent's order, or ``None`` to skip."""
    side, price = order_from_expectation_kernel(re, view.price_at(t - 1), rng.standard_normal())
    return None if side == 0 else (side, price)


def learning_return(view: MarketView, t: int, t_l: int) -> float:
    prev = view.price_at(t - 1)
    return math.log(prev / view.price_at(t - 1 - t_l))


def learn(state: NormalAgentState, r1: float, r2: float, view: MarketView, t: int,
          rng: np.random.Generator, t_l: int = 10_000, k_l: float = 4.0,
          delta_l: float = 0.01) -> NormalAgentState:
    r_l = learning_return(view, t, t_l)
    q1, q2, u1, u2, d1, d2 = rng.random(6)
    state.w1, state.w2 = learn_kernel(state.w1, state.w2, state.w1_max, state.w2_max,
                                      r1, r2, r_l, k_l, q1, q2, delta_l, u1, u2, d1, d2)
    return state
