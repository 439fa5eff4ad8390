"""Command-line front end.

Subcommands: ``run`` (one seed), ``batch`` (seed list), ``experiment`` (paired
OAA/AA protocol), ``sweep`` (OAA interval grid for the TC-vs-orders curve) and
``report`` (recompute metrics from saved runs and compare).

Configuration is layered: built-in defaults, then an optional YAML/JSON file
(``--config``), then one flag per config field (``--t-e``,
``--execution-interval``, ``--scenario-forced-probability`` ...).
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import yaml

from .config import ConfigError, SimConfig, flat_fields, validate_config
from .engine import run_simulation
from .execution import InfeasibleTarget
from .experiment import run_experiment, summarize_batch, write_report
from .metrics import summarize
from .persist import MissingRunFiles, find_run_dirs, load_run, load_summary, run_dir, save_run

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_CONFIG = 3
EXIT_MISSING = 4
EXIT_INFEASIBLE = 5
EXIT_MISMATCH = 6

log = logging.getLogger("obimarket")

_CFG_PREFIX = "cfg:"


def parse_seeds(text: str) -> list[int]:
    """``"25"`` -> 1..25, ``"3-7"`` or ``"3..7"`` -> 3..7, ``"1,4,9"`` -> that list."""
    text = text.strip()
    try:
        if "," in text:
            seeds = [int(s) for s in text.split(",") if s.strip()]
        elif ".." in text or "-" in text[1:]:
            a, b = text.replace("..", "-").split("-", 1)
            seeds = list(range(int(a), int(b) + 1))
        else:
            seeds = list(range(1, int(text) + 1))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad seed list {text!r}") from None
    if not seeds or len(set(seeds)) != len(seeds):
        raise argparse.ArgumentTypeError(f"seed list {text!r} is empty or has repeats")
    return seeds


def parse_grid(text: str) -> list[int]:
    try:
        grid = [int(s) for s in text.replace(" ", "").split(",") if s]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad interval grid {text!r}") from None
    if not grid or min(grid) < 1:
        raise argparse.ArgumentTypeError("intervals must be positive integers")
    return grid


def _flag(flat_name: str) -> str:
    return "--" + flat_name.replace(".", "-").replace("_", "-")


def _config_parent() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False, allow_abbrev=False)
    g = p.add_argument_group("configuration")
    g.add_argument("--config", type=Path, help="YAML or JSON file with config values")
    g.add_argument("--scenario", dest=_CFG_PREFIX + "scenario.kind",
                   help="shorthand for --scenario-kind")
    g.add_argument("--algo", dest=_CFG_PREFIX + "execution.kind",
                   help="shorthand for --execution-kind (none, AA, OAA)")
    for name, _, _, typ in flat_fields():
        g.add_argument(_flag(name), dest=_CFG_PREFIX + name, metavar=typ.__name__.upper(),
                       help=argparse.SUPPRESS if name in ("scenario.kind", "execution.kind") else None)
    p.add_argument("--out-dir", type=Path, default=Path("runs"), help="output root (default: runs)")
    p.add_argument("--workers", type=int, default=None, help="parallel worker processes")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def build_parser() -> argparse.ArgumentParser:
    parent = _config_parent()
    parser = argparse.ArgumentParser(prog="obimarket", description=__doc__.splitlines()[0],
                                     allow_abbrev=False)
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("run", parents=[parent], help="one simulation, saved as a run directory")

    p = sub.add_parser("batch", parents=[parent], help="one run per seed")
    p.add_argument("--seeds", type=parse_seeds, default=parse_seeds("25"))

    for name, helptext in (("experiment", "paired OAA/AA experiment"),
                           ("sweep", "OAA interval sweep (TC vs order count)")):
        p = sub.add_parser(name, parents=[parent], help=helptext)
        p.add_argument("--seeds", type=parse_seeds, default=parse_seeds("25"))
        p.add_argument("--intervals", type=parse_grid, required=name == "sweep",
                       help="comma-separated OAA decision intervals")
        p.add_argument("--save-series", action="store_true",
                       help="also write the per-step CSV files of every run")

    p = sub.add_parser("report", help="recompute metrics of saved runs and compare")
    p.add_argument("paths", nargs="+", type=Path)
    p.add_argument("-v", "--verbose", action="store_true")
    return parser


def load_config_file(path: Path) -> dict:
    if not path.exists():
        raise MissingRunFiles(f"config file not found: {path}")
    try:
        with open(path) as fh:
            raw = yaml.safe_load(fh)
    except yaml.YAMLError as exc:
        raise ConfigError([f"{path}: {exc}"]) from None
    if raw is None:
        return {}
    if not isinstance(raw, dict):
        raise ConfigError([f"{path}: top level must be a mapping"])
    return raw


def resolve_config(args: argparse.Namespace) -> SimConfig:
    raw: dict = {}
    if args.config is not None:
        for key, value in load_config_file(args.config).items():
            if isinstance(value, dict):
                for k2, v2 in value.items():
                    raw[f"{key}.{k2}"] = v2
            else:
                raw[key] = value
    for dest, value in vars(args).items():
        if dest.startswith(_CFG_PREFIX) and value is not None:
            raw[dest[len(_CFG_PREFIX):]] = value
    return validate_config(raw)


def _cmd_run(args, cfg: SimConfig) -> int:
    run = run_simulation(cfg)
    out = run_dir(args.out_dir, cfg)
    summary = save_run(run, out)
    print(out)
    print(json.dumps({"tc": summary.tc, "n_buy": summary.n_buy, "avg_price": summary.avg_price}))
    return EXIT_OK


def _cmd_batch(args, cfg: SimConfig) -> int:
    summaries = summarize_batch(cfg, args.seeds, args.workers, args.out_dir, save_series=True)
    for s in summaries:
        print(f"seed={s.seed} n_buy={s.n_buy} tc={s.tc} avg_price={s.avg_price:.2f}")
    return EXIT_OK


def _cmd_experiment(args, cfg: SimConfig, figure1: bool) -> int:
    grid = args.intervals or [cfg.execution.interval]
    report = run_experiment(cfg, grid, args.seeds, args.workers, args.out_dir, args.save_series)
    for path in write_report(report, args.out_dir, figure1=figure1):
        print(path)
    for r in report.rows:
        print(f"l_OAA={r.oaa_interval} l_AA={r.aa_interval} "
              f"orders {r.orders_oaa.mean:.2f}/{r.orders_aa.mean:.2f} "
              f"TC OAA {r.tc_oaa.mean:.2f}±{r.tc_oaa.std:.2f} AA {r.tc_aa.mean:.2f}±{r.tc_aa.std:.2f}")
    return EXIT_OK


def _cmd_report(args) -> int:
    dirs = []
    for p in args.paths:
        found = find_run_dirs(p)
        if not found:
            raise MissingRunFiles(f"no run directories under {p}")
        dirs.extend(found)
    status = EXIT_OK
    for d in dirs:
        fresh = summarize(load_run(d)).to_dict()
        stored = load_summary(d).to_dict()
        ok = json.dumps(fresh, sort_keys=True) == json.dumps(stored, sort_keys=True)
        print(f"{d}: {'match' if ok else 'MISMATCH'} tc={fresh['tc']}")
        if not ok:
            status = EXIT_MISMATCH
    return status


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        if args.command == "report":
            return _cmd_report(args)
        cfg = resolve_config(args)
        if args.command == "run":
            return _cmd_run(args, cfg)
        if args.command == "batch":
            return _cmd_batch(args, cfg)
        return _cmd_experiment(args, cfg, figure1=args.command == "sweep")
    except ConfigError as exc:
        for e in exc.errors:
            print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except MissingRunFiles as exc:
        print(f"missing file: {exc}", file=sys.stderr)
        return EXIT_MISSING
    except InfeasibleTarget as exc:
        print(f"infeasible equalization: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE


if __name__ == "__main__":
    sys.exit(main())
