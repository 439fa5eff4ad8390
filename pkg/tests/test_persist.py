import json

import numpy as np
import pytest

from obimarket.engine import run_simulation
from obimarket.metrics import summarize
from obimarket.persist import (MissingRunFiles, PRICE_FILE, SUMMARY_FILE, find_run_dirs, load_run,
                               load_summary, run_dir, save_run)


@pytest.fixture
def spoof_run(small_cfg):
    return run_simulation(small_cfg.with_(scenario__kind="spoof"))


def _snapshot(directory):
    return {p.name: p.read_bytes() for p in sorted(directory.iterdir())}


def test_round_trip(tmp_path, spoof_run):
    out = run_dir(tmp_path, spoof_run.config)
    save_run(spoof_run, out)
    back = load_run(out)
    assert back.config == spoof_run.config
    for name in ("prices", "buy_depth", "sell_depth", "fill_time", "fill_price", "fill_agent",
                 "spoof_events"):
        np.testing.assert_array_equal(getattr(back, name), getattr(spoof_run, name))
    for name in ("time", "price", "buy_order_id", "sell_order_id", "buyer", "seller"):
        np.testing.assert_array_equal(getattr(back.trades, name), getattr(spoof_run.trades, name))
    assert back.counters == spoof_run.counters


def test_replayed_metrics_identical(tmp_path, spoof_run):
    out = tmp_path / "r"
    online = save_run(spoof_run, out)
    assert summarize(load_run(out)).to_dict() == online.to_dict()
    assert load_summary(out).to_dict() == online.to_dict()


def test_rewrite_is_byte_identical(tmp_path, small_cfg):
    a, b = tmp_path / "a", tmp_path / "b"
    save_run(run_simulation(small_cfg), a)
    save_run(run_simulation(small_cfg), b)
    assert _snapshot(a) == _snapshot(b)
    save_run(run_simulation(small_cfg), a)
    assert _snapshot(a) == _snapshot(b)


def test_artifacts_carry_provenance(tmp_path, small_cfg):
    out = tmp_path / "r"
    save_run(run_simulation(small_cfg), out)
    tag = f"# configHash={small_cfg.config_hash()} seed={small_cfg.seed}"
    for csv_file in out.glob("*.csv"):
        assert csv_file.read_text().splitlines()[0] == tag
    summary = json.loads((out / SUMMARY_FILE).read_text())
    assert summary["config_hash"] == small_cfg.config_hash()
    assert summary["seed"] == small_cfg.seed


def test_price_series_has_one_row_per_step(tmp_path, small_cfg):
    out = tmp_path / "r"
    save_run(run_simulation(small_cfg), out)
    lines = (out / PRICE_FILE).read_text().splitlines()
    assert lines[1] == "time,price"
    assert len(lines) == 2 + small_cfg.t_e


def test_missing_files(tmp_path):
    with pytest.raises(MissingRunFiles):
        load_run(tmp_path)


def test_layout(tmp_path, small_cfg):
    cfg = small_cfg.with_(seed=7, execution__kind="AA", scenario__kind="crash")
    assert run_dir(tmp_path, cfg) == tmp_path / "crash" / "AA" / "7"
    save_run(run_simulation(cfg), run_dir(tmp_path, cfg))
    assert find_run_dirs(tmp_path) == [tmp_path / "crash" / "AA" / "7"]
