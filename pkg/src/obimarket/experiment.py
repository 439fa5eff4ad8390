"""Paired OAA/AA experiments and the CSV tables built from them.

Phase one runs the OBI-gated agents for each decision interval and records
how many market buys they sent. Phase two gives the unconditional agents the
interval that reproduces that count, so both kinds buy the same quantity.
"""
from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from importlib import metadata
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .config import SimConfig
from .engine import default_workers, run_simulation
from .execution import equalize_order_counts
from .metrics import MetricsSummary, summarize
from .persist import run_dir, save_run, write_json, config_document, CONFIG_FILE, SUMMARY_FILE


def tool_version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "0+unknown"


@dataclass(frozen=True)
class Stat:
    mean: float
    std: float
    n: int

    @classmethod
    def of(cls, values: Iterable[float | None]) -> "Stat":
        x = np.array([math.nan if v is None else v for v in values], dtype=np.float64)
        if x.size == 0:
            return cls(math.nan, math.nan, 0)
        std = float(np.std(x, ddof=1)) if x.size > 1 else 0.0
        return cls(float(np.mean(x)), std, int(x.size))


@dataclass
class PairedRow:
    oaa_interval: int
    aa_interval: int
    target: int
    orders_oaa: Stat
    orders_aa: Stat
    tc_oaa: Stat
    tc_aa: Stat
    price_oaa: Stat
    price_aa: Stat

    @property
    def tc_diff(self) -> float:
        """Mean TC of the OBI agents minus that of the plain agents."""
        return self.tc_oaa.mean - self.tc_aa.mean


@dataclass
class ExperimentReport:
    scenario: str
    seeds: list[int]
    config_hash: str
    version: str
    rows: list[PairedRow] = field(default_factory=list)
    runs: dict[str, list[MetricsSummary]] = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = asdict(self)
        for row, rd in zip(self.rows, d["rows"]):
            rd["tc_diff"] = row.tc_diff
        return d


def _job(args) -> MetricsSummary:
    cfg, out_root, save_series = args
    run = run_simulation(cfg)
    if out_root is None:
        return summarize(run)
    out = run_dir(out_root, cfg)
    if save_series:
        return save_run(run, out)
    out.mkdir(parents=True, exist_ok=True)
    summary = summarize(run)
    doc = config_document(cfg)
    doc["counters"] = run.counters
    write_json(out / CONFIG_FILE, doc)
    write_json(out / SUMMARY_FILE, summary.to_dict())
    return summary


def summarize_batch(cfg: SimConfig, seeds: Sequence[int], workers: int | None = None,
                    out_root=None, save_series: bool = False) -> list[MetricsSummary]:
    """Run one config per seed and keep only the metric summaries (seed order).

    Only summaries travel back from worker processes, which keeps memory flat
    for large sweeps. With ``out_root`` each run also lands in its directory.
    """
    seeds = list(seeds)
    if len(set(seeds)) != len(seeds):
        raise ValueError("seeds must be distinct")
    jobs = [(cfg.with_(seed=s), out_root, save_series) for s in seeds]
    workers = default_workers() if workers is None else workers
    if workers <= 1 or len(jobs) <= 1:
        return [_job(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
        return list(pool.map(_job, jobs))


def run_experiment(template: SimConfig, oaa_intervals: Sequence[int], seeds: Sequence[int],
                   workers: int | None = None, out_root=None,
                   save_series: bool = False) -> ExperimentReport:
    """Two-phase OAA then AA protocol for every OAA decision interval.

    Raises :class:`~obimarket.execution.InfeasibleTarget` when an OAA batch
    places (on average) no orders at all.
    """
    seeds = list(seeds)
    report = ExperimentReport(scenario=template.scenario.kind, seeds=seeds,
                              config_hash=template.config_hash(), version=tool_version())
    for l_oaa in oaa_intervals:
        oaa_cfg = template.with_(execution__kind="OAA", execution__interval=int(l_oaa))
        oaa = summarize_batch(oaa_cfg, seeds, workers, out_root, save_series)
        eq = equalize_order_counts([s.n_buy for s in oaa], template.t_e, template.execution.start)
        aa_cfg = template.with_(execution__kind="AA", execution__interval=eq.interval)
        aa = summarize_batch(aa_cfg, seeds, workers, out_root, save_series)
        report.runs[f"OAA/{l_oaa}"] = oaa
        report.runs[f"AA/{eq.interval}"] = aa
        report.rows.append(PairedRow(
            oaa_interval=int(l_oaa), aa_interval=eq.interval, target=eq.target,
            orders_oaa=Stat.of(s.n_buy for s in oaa), orders_aa=Stat.of(s.n_buy for s in aa),
            tc_oaa=Stat.of(s.tc for s in oaa), tc_aa=Stat.of(s.tc for s in aa),
            price_oaa=Stat.of(s.avg_price for s in oaa), price_aa=Stat.of(s.avg_price for s in aa),
        ))
    return report


TABLE_COLUMNS = (
    "scenario", "oaaInterval", "aaInterval",
    "ordersAA", "ordersAASd", "ordersOAA", "ordersOAASd",
    "tcAA", "tcAASd", "tcOAA", "tcOAASd",
    "avgPriceAA", "avgPriceAASd", "avgPriceOAA", "avgPriceOAASd",
    "configHash", "seeds",
)

FIGURE1_COLUMNS = ("oaaInterval", "orders", "tcAA", "tcOAA", "tcDiff", "configHash", "seeds")


def _seed_label(seeds: Sequence[int]) -> str:
    return " ".join(str(s) for s in seeds)


def write_table_csv(report: ExperimentReport, path) -> None:
    """Paired rows in the layout of the order-count / TC / price tables."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TABLE_COLUMNS)
        for r in report.rows:
            w.writerow((report.scenario, r.oaa_interval, r.aa_interval,
                        r.orders_aa.mean, r.orders_aa.std, r.orders_oaa.mean, r.orders_oaa.std,
                        r.tc_aa.mean, r.tc_aa.std, r.tc_oaa.mean, r.tc_oaa.std,
                        r.price_aa.mean, r.price_aa.std, r.price_oaa.mean, r.price_oaa.std,
                        report.config_hash, _seed_label(report.seeds)))


def write_figure1_csv(report: ExperimentReport, path) -> None:
    """TC of both agent kinds against the (OAA) order count, one row per grid point."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(FIGURE1_COLUMNS)
        for r in sorted(report.rows, key=lambda r: r.orders_oaa.mean):
            w.writerow((r.oaa_interval, r.orders_oaa.mean, r.tc_aa.mean, r.tc_oaa.mean,
                        r.tc_diff, report.config_hash, _seed_label(report.seeds)))


def write_report(report: ExperimentReport, out_root, figure1: bool = False) -> list[Path]:
    out_root = Path(out_root)
    out_root.mkdir(parents=True, exist_ok=True)
    paths = [out_root / f"{report.scenario}_table.csv", out_root / f"{report.scenario}_report.json"]
    write_table_csv(report, paths[0])
    write_json(paths[1], report.to_dict())
    if figure1:
        paths.append(out_root / f"{report.scenario}_figure1.csv")
        write_figure1_csv(report, paths[-1])
    return paths
