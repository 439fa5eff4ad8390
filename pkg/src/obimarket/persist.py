"""On-disk layout of a run: one directory of CSV files plus JSON config and summary.

Every CSV starts with a ``#`` provenance line carrying the config hash and
seed; the rest is a plain header row and integer data. Writing the same run
twice produces identical bytes.
"""
from __future__ import annotations

import json
import warnings
from pathlib import Path

import numpy as np

from .config import SimConfig, validate_config
from .engine import RunResult, TradeTape
from .metrics import MetricsSummary, summarize

PRICE_FILE = "priceSeries.csv"
DEPTH_FILE = "depthSeries.csv"
TRADES_FILE = "trades.csv"
FILLS_FILE = "fills.csv"
SPOOF_FILE = "spoofEvents.csv"
CONFIG_FILE = "config.json"
SUMMARY_FILE = "summary.json"

RUN_FILES = (PRICE_FILE, DEPTH_FILE, TRADES_FILE, FILLS_FILE, SPOOF_FILE, CONFIG_FILE)

TRADE_COLUMNS = ("time", "price", "buyerOwner", "sellerOwner", "buyOrderId", "sellOrderId")
FILL_COLUMNS = ("time", "algoIndex", "price", "deviation")


class MissingRunFiles(FileNotFoundError):
    pass


def run_dir(root, cfg: SimConfig) -> Path:
    return Path(root) / cfg.scenario.kind / cfg.execution.kind / str(cfg.seed)


def _provenance(cfg: SimConfig) -> str:
    return f"# configHash={cfg.config_hash()} seed={cfg.seed}"


def _write_table(path: Path, cfg: SimConfig, columns, data: np.ndarray) -> None:
    data = np.asarray(data, dtype=np.int64).reshape(-1, len(columns))
    with open(path, "w", newline="") as fh:
        fh.write(_provenance(cfg) + "\n")
        fh.write(",".join(columns) + "\n")
        if len(data):
            np.savetxt(fh, data, fmt="%d", delimiter=",")


def _read_table(path: Path, ncols: int) -> np.ndarray:
    if not path.exists():
        raise MissingRunFiles(str(path))
    with warnings.catch_warnings():
        # header-only files (no fills, no spoof events) are expected
        warnings.simplefilter("ignore", UserWarning)
        data = np.loadtxt(path, dtype=np.int64, delimiter=",", comments="#", skiprows=2, ndmin=2)
    return data.reshape(-1, ncols)


def write_json(path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def config_document(cfg: SimConfig) -> dict:
    return {"configHash": cfg.config_hash(), "seed": cfg.seed, "config": cfg.to_dict()}


def save_run(run: RunResult, out: Path, summary: MetricsSummary | None = None) -> MetricsSummary:
    """Write ``run`` into directory ``out`` and return its metrics summary."""
    cfg = run.config
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    steps = np.arange(1, len(run.prices) + 1)
    _write_table(out / PRICE_FILE, cfg, ("time", "price"), np.column_stack([steps, run.prices]))
    _write_table(out / DEPTH_FILE, cfg, ("time", "buyDepth", "sellDepth"),
                 np.column_stack([steps, run.buy_depth, run.sell_depth]))
    tr = run.trades
    _write_table(out / TRADES_FILE, cfg, TRADE_COLUMNS,
                 np.column_stack([tr.time, tr.price, tr.buyer, tr.seller,
                                  tr.buy_order_id, tr.sell_order_id]))
    _write_table(out / FILLS_FILE, cfg, FILL_COLUMNS,
                 np.column_stack([run.fill_time, run.fill_agent, run.fill_price,
                                  run.fill_price - cfg.p_f]))
    _write_table(out / SPOOF_FILE, cfg, ("time", "action"), run.spoof_events)
    doc = config_document(cfg)
    doc["counters"] = run.counters
    write_json(out / CONFIG_FILE, doc)
    summary = summary or summarize(run)
    write_json(out / SUMMARY_FILE, summary.to_dict())
    return summary


def load_config(out: Path) -> SimConfig:
    path = Path(out) / CONFIG_FILE
    if not path.exists():
        raise MissingRunFiles(str(path))
    with open(path) as fh:
        return validate_config(json.load(fh)["config"])


def load_run(out) -> RunResult:
    """Rebuild a :class:`RunResult` from a directory written by :func:`save_run`."""
    out = Path(out)
    missing = [name for name in RUN_FILES if not (out / name).exists()]
    if missing:
        raise MissingRunFiles(f"{out}: missing {', '.join(missing)}")
    cfg = load_config(out)
    with open(out / CONFIG_FILE) as fh:
        counters = {k: int(v) for k, v in json.load(fh)["counters"].items()}
    prices = _read_table(out / PRICE_FILE, 2)
    depth = _read_table(out / DEPTH_FILE, 3)
    tr = _read_table(out / TRADES_FILE, len(TRADE_COLUMNS))
    fills = _read_table(out / FILLS_FILE, len(FILL_COLUMNS))
    spoof = _read_table(out / SPOOF_FILE, 2)
    tape = TradeTape(time=tr[:, 0].copy(), price=tr[:, 1].copy(), buyer=tr[:, 2].copy(),
                     seller=tr[:, 3].copy(), buy_order_id=tr[:, 4].copy(),
                     sell_order_id=tr[:, 5].copy())
    return RunResult(
        config=cfg,
        prices=prices[:, 1].copy(),
        buy_depth=depth[:, 1].copy(),
        sell_depth=depth[:, 2].copy(),
        trades=tape,
        fill_time=fills[:, 0].copy(),
        fill_price=fills[:, 2].copy(),
        fill_agent=fills[:, 1].copy(),
        counters=counters,
        spoof_events=spoof.copy(),
    )


def load_summary(out) -> MetricsSummary:
    path = Path(out) / SUMMARY_FILE
    if not path.exists():
        raise MissingRunFiles(str(path))
    with open(path) as fh:
        return MetricsSummary.from_dict(json.load(fh))


def find_run_dirs(root) -> list[Path]:
    """Run directories below ``root`` (``root`` itself included), sorted."""
    root = Path(root)
    return sorted(p.parent for p in root.rglob(PRICE_FILE))
