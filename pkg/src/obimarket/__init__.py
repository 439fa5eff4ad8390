"""Agent-based limit order book market for studying OBI-gated execution algorithms."""
from .config import ConfigError, ExecAlgoConfig, ScenarioConfig, SimConfig, validate_config
from .engine import RunResult, run_batch, run_simulation
from .experiment import ExperimentReport, run_experiment
from .metrics import MetricsSummary, summarize
from .orderbook import BUY, SELL, Order, OrderBook, Trade

__all__ = [
    "BUY", "SELL", "ConfigError", "ExecAlgoConfig", "ExperimentReport", "MetricsSummary",
    "Order", "OrderBook", "RunResult", "ScenarioConfig", "SimConfig", "Trade",
    "run_batch", "run_experiment", "run_simulation", "summarize", "validate_config",
]
