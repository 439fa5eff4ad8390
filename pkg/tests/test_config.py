import pytest

from obimarket.config import ConfigError, SimConfig, flat_fields, validate_config


def test_empty_config_gives_defaults():
    cfg = validate_config({})
    assert cfg == SimConfig()
    assert (cfg.p_f, cfg.t_e, cfg.t_c, cfg.t_l) == (10_000, 400_000, 20_000, 10_000)
    assert (cfg.w1_max, cfg.w2_max, cfg.u_max, cfg.tau_max) == (1.0, 10.0, 1.0, 10_000)
    assert (cfg.sigma_eps, cfg.k_l, cfg.delta_l, cfg.tick) == (0.06, 4.0, 0.01, 1)
    assert cfg.n_normal == 990 and cfg.execution.count == 10
    assert cfg.scenario.forced_probability == 0.20
    assert cfg.scenario.spoof_count == 1_000


def test_t_c_zero_names_field():
    with pytest.raises(ConfigError) as err:
        validate_config({"t_c": 0})
    assert any(e.startswith("t_c") for e in err.value.errors)


def test_probability_out_of_range():
    with pytest.raises(ConfigError, match="scenario.forced_probability"):
        validate_config({"scenario": {"forced_probability": 1.5}})


def test_errors_are_aggregated():
    with pytest.raises(ConfigError) as err:
        validate_config({"t_c": 0, "n_normal": 0, "bogus": 1, "execution.kind": "TWAP"})
    names = {e.split(":")[0] for e in err.value.errors}
    assert names == {"t_c", "n_normal", "bogus", "execution.kind"}


def test_unknown_nested_key():
    with pytest.raises(ConfigError, match="scenario.colour: unknown key"):
        validate_config({"scenario": {"colour": "red"}})


def test_dotted_and_nested_keys_agree():
    a = validate_config({"execution.interval": 173, "scenario.kind": "crash"})
    b = validate_config({"execution": {"interval": 173}, "scenario": {"kind": "crash"}})
    assert a == b
    assert a.execution.interval == 173


@pytest.mark.parametrize("raw,want", [("400_000", 400_000), (1e5, 100_000), ("12", 12)])
def test_integer_coercion(raw, want):
    assert validate_config({"t_e": raw}).t_e == want


@pytest.mark.parametrize("raw", [True, 2.5, "ten"])
def test_integer_rejects(raw):
    with pytest.raises(ConfigError, match="t_e"):
        validate_config({"t_e": raw})


def test_every_field_is_flat_addressable():
    names = [name for name, *_ in flat_fields()]
    assert "execution.interval" in names and "scenario.spoof_window" in names
    assert len(names) == len(set(names))


class TestHash:
    def test_seed_excluded_by_default(self):
        assert SimConfig(seed=1).config_hash() == SimConfig(seed=2).config_hash()
        assert SimConfig(seed=1).config_hash(True) != SimConfig(seed=2).config_hash(True)

    def test_any_field_changes_hash(self):
        base = SimConfig().config_hash()
        assert SimConfig().with_(execution__interval=529).config_hash() != base
        assert SimConfig(k_l=4.5).config_hash() != base


def test_with_section_overrides():
    cfg = SimConfig().with_(t_e=1_000, execution__kind="AA", scenario__kind="spoof")
    assert (cfg.t_e, cfg.execution.kind, cfg.scenario.kind) == (1_000, "AA", "spoof")
    assert cfg.execution.interval == SimConfig().execution.interval
