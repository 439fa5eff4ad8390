"""Run metrics: trading cost, stylized facts, OBI concordance and interval averages.

All functions are pure and operate on plain arrays, so a run reloaded from
disk yields exactly the numbers computed right after the simulation.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

SUMMARY_SCHEMA_VERSION = 1
DEFAULT_LAGS = (1, 2, 3, 4, 5)


class NoFills(ValueError):
    pass


class DegenerateSeries(ValueError):
    pass


class EmptyInterval(ValueError):
    pass


def trading_cost(fill_prices, p_f: float) -> float:
    """Mean deviation of the algorithm agents' buy prices from ``p_f``.

    >>> trading_cost([10_010, 10_020], 10_000)
    15.0
    """
    fills = np.asarray(fill_prices, dtype=np.float64)
    if fills.size == 0:
        raise NoFills("no algorithm-agent fills")
    return float(np.mean(fills - p_f))


def sample_returns(price_path, interval: int) -> np.ndarray:
    """Log returns of ``price_path`` sampled every ``interval`` steps.

    ``price_path[0]`` is the price before the first step.
    """
    if interval < 1:
        raise ValueError("interval must be >= 1")
    p = np.asarray(price_path, dtype=np.float64)[::interval]
    if np.any(p <= 0):
        raise DegenerateSeries("prices must be positive")
    return np.diff(np.log(p))


def excess_kurtosis(returns) -> float:
    """Fourth standardized central moment minus 3 (population moments)."""
    x = np.asarray(returns, dtype=np.float64)
    if x.size < 4:
        raise DegenerateSeries("need at least 4 samples")
    d = x - x.mean()
    m2 = np.mean(d * d)
    if m2 <= 0.0:
        raise DegenerateSeries("zero variance")
    return float(np.mean(d ** 4) / m2 ** 2 - 3.0)


def sq_return_autocorr(returns, lags: Sequence[int] = DEFAULT_LAGS) -> list[float]:
    """Pearson correlation between squared returns ``lag`` samples apart."""
    x = np.asarray(returns, dtype=np.float64)
    lags = list(lags)
    if x.size <= max(lags) + 1:
        raise DegenerateSeries(f"need more than {max(lags) + 1} samples")
    s = x * x
    if np.var(s) <= 0.0:
        raise DegenerateSeries("squared returns have zero variance")
    out = []
    for lag in lags:
        a, b = s[lag:], s[:-lag]
        sa, sb = a.std(), b.std()
        if sa == 0.0 or sb == 0.0:
            raise DegenerateSeries(f"zero variance at lag {lag}")
        out.append(float(np.mean((a - a.mean()) * (b - b.mean())) / (sa * sb)))
    return out


def obi_concordance(prices, buy_depth, sell_depth) -> int:
    """Concordant minus discordant (OBI sign, next price move) pairs.

    Arrays are per step: ``buy_depth[i]`` and ``sell_depth[i]`` are the depths
    at the end of a step and ``prices[i + 1] - prices[i]`` is the move over
    the following step. Zero imbalance or no move counts for neither side.
    """
    p = np.asarray(prices, dtype=np.int64)
    obi = np.sign(np.asarray(buy_depth, dtype=np.int64)[:-1]
                  - np.asarray(sell_depth, dtype=np.int64)[:-1])
    move = np.sign(np.diff(p))
    return int(np.sum(obi * move))


@dataclass(frozen=True)
class IntervalStats:
    start: int
    end: int
    avg_price: float
    avg_buy_depth: float
    avg_sell_depth: float


def interval_averages(price_path, buy_depth_path, sell_depth_path, t_a: int, t_b: int) -> IntervalStats:
    """Means over steps ``t_a <= t < t_b`` of series indexed by step number."""
    n = len(price_path)
    if not (0 <= t_a < t_b <= n):
        raise EmptyInterval(f"interval [{t_a}, {t_b}) is empty or outside 0..{n}")
    sl = slice(t_a, t_b)
    return IntervalStats(t_a, t_b,
                         float(np.mean(price_path[sl])),
                         float(np.mean(buy_depth_path[sl])),
                         float(np.mean(sell_depth_path[sl])))


def extreme_interval(price_path, start: int, falling: bool = True) -> tuple[int, int]:
    """``[start, t*)`` where ``t*`` is the first global minimum (or maximum) at or after ``start``.

    Used to locate the stretch over which a crash falls (or a surge rises).
    The end is at least ``start + 1`` so the interval is never empty.
    """
    tail = np.asarray(price_path)[start:]
    if tail.size == 0:
        raise EmptyInterval("start lies beyond the price path")
    k = int(np.argmin(tail) if falling else np.argmax(tail))
    return start, start + max(k, 1)


@dataclass
class MetricsSummary:
    seed: int
    config_hash: str
    n_buy: int
    tc: float | None
    kurtosis: float | None
    acf_sq_returns: list[float] | None
    obi_concordance: int
    avg_price: float
    mean_trade_price: float | None
    avg_buy_depth: float
    avg_sell_depth: float
    n_trades: int
    counters: dict[str, int]
    intervals: dict[str, dict] = field(default_factory=dict)
    fills_in_interval: dict[str, int] = field(default_factory=dict)
    schema_version: int = SUMMARY_SCHEMA_VERSION

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "MetricsSummary":
        return cls(**d)


def _guarded(fn, *args):
    try:
        return fn(*args)
    except DegenerateSeries:
        return None


def summarize(run) -> MetricsSummary:
    """Compute every per-run metric from a :class:`~obimarket.engine.RunResult`."""
    cfg = run.config
    path = run.price_path()
    bd = np.concatenate(([0], run.buy_depth))
    sd = np.concatenate(([0], run.sell_depth))
    rets = sample_returns(path, cfg.return_interval)
    tc = trading_cost(run.fill_price, cfg.p_f) if len(run.fill_price) else None
    whole = interval_averages(path, bd, sd, 0, len(path))

    intervals = {"all": asdict(whole)}
    fills_in = {}
    sc = cfg.scenario
    if sc.kind in ("crash", "surge") and sc.window_start < len(path):
        a, b = extreme_interval(path, sc.window_start, falling=sc.kind == "crash")
        intervals["A"] = asdict(interval_averages(path, bd, sd, a, b))
        if b < len(path):
            intervals["B"] = asdict(interval_averages(path, bd, sd, b, len(path)))
        ft = np.asarray(run.fill_time)
        fills_in["A"] = int(np.sum((ft >= a) & (ft < b)))

    return MetricsSummary(
        seed=cfg.seed,
        config_hash=cfg.config_hash(),
        n_buy=int(len(run.fill_price)),
        tc=tc,
        kurtosis=_guarded(excess_kurtosis, rets),
        acf_sq_returns=_guarded(sq_return_autocorr, rets),
        obi_concordance=obi_concordance(run.prices, run.buy_depth, run.sell_depth),
        avg_price=whole.avg_price,
        mean_trade_price=float(np.mean(run.trades.price)) if len(run.trades) else None,
        avg_buy_depth=whole.avg_buy_depth,
        avg_sell_depth=whole.avg_sell_depth,
        n_trades=len(run.trades),
        counters=dict(run.counters),
        intervals=intervals,
        fills_in_interval=fills_in,
    )
