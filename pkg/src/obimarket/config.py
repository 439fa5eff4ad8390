"""Simulation configuration, defaults and validation."""
from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Any

ALGO_KINDS = ("none", "AA", "OAA")
SCENARIO_KINDS = ("stable", "crash", "surge", "spoof")


class ConfigError(ValueError):
    """Aggregated validation failure; ``errors`` holds one message per problem."""

    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


@dataclass(frozen=True)
class ExecAlgoConfig:
    kind: str = "OAA"
    count: int = 10
    interval: int = 528
    start: int = 100_000
    depth_window: int = 50


@dataclass(frozen=True)
class ScenarioConfig:
    kind: str = "stable"
    window_start: int = 100_000
    window_end: int = 130_000
    forced_probability: float = 0.20
    forced_sell_price: int = 1
    forced_buy_price: int = 100_000
    spoof_cycle: int = 10_000
    spoof_count: int = 1_000
    spoof_window: int = 50


@dataclass(frozen=True)
class SimConfig:
    w1_max: float = 1.0
    w2_max: float = 10.0
    u_max: float = 1.0
    tau_max: int = 10_000
    sigma_eps: float = 0.06
    tick: int = 1
    p_f: int = 10_000
    t_l: int = 10_000
    t_c: int = 20_000
    t_e: int = 400_000
    warmup: int = 20_000
    k_l: float = 4.0
    delta_l: float = 0.01
    n_normal: int = 990
    max_price: int = 1_000_000
    return_interval: int = 100
    seed: int = 1
    execution: ExecAlgoConfig = field(default_factory=ExecAlgoConfig)
    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    def config_hash(self, include_seed: bool = False) -> str:
        d = self.to_dict()
        if not include_seed:
            d.pop("seed")
        blob = json.dumps(d, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def with_(self, **changes) -> "SimConfig":
        """Copy with top-level or ``section__field`` overrides."""
        top, ex, sc = {}, {}, {}
        for k, v in changes.items():
            if k.startswith("execution__"):
                ex[k[len("execution__"):]] = v
            elif k.startswith("scenario__"):
                sc[k[len("scenario__"):]] = v
            else:
                top[k] = v
        if ex:
            top["execution"] = replace(self.execution, **ex)
        if sc:
            top["scenario"] = replace(self.scenario, **sc)
        return replace(self, **top)


_SECTIONS = {"execution": ExecAlgoConfig, "scenario": ScenarioConfig}


def flat_fields() -> list[tuple[str, str | None, str, type]]:
    """``(flat_name, section, attr, type)`` for every leaf field."""
    out = []
    for f in fields(SimConfig):
        if f.name in _SECTIONS:
            for g in fields(_SECTIONS[f.name]):
                out.append((f"{f.name}.{g.name}", f.name, g.name, _leaf_type(g)))
        else:
            out.append((f.name, None, f.name, _leaf_type(f)))
    return out


def _leaf_type(f) -> type:
    t = f.type if isinstance(f.type, str) else f.type.__name__
    return {"int": int, "float": float, "str": str}[t]


def _coerce(value, typ, name, errors):
    if typ is int:
        if isinstance(value, bool):
            errors.append(f"{name}: expected integer, got {value!r}")
            return None
        if isinstance(value, float) and value.is_integer():
            return int(value)
        if isinstance(value, int):
            return value
        if isinstance(value, str):
            try:
                return int(value.replace("_", "").replace(",", ""))
            except ValueError:
                pass
        errors.append(f"{name}: expected integer, got {value!r}")
        return None
    if typ is float:
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            return float(value)
        if isinstance(value, str):
            try:
                return float(value)
            except ValueError:
                pass
        errors.append(f"{name}: expected number, got {value!r}")
        return None
    return str(value)


def validate_config(raw: dict[str, Any] | None) -> SimConfig:
    """Build a :class:`SimConfig` from a (possibly nested) mapping.

    Missing keys take their defaults. Unknown keys, type errors and range
    violations are collected and raised together as :class:`ConfigError`.
    """
    raw = dict(raw or {})
    errors: list[str] = []
    top: dict[str, Any] = {}
    sections: dict[str, dict[str, Any]] = {name: {} for name in _SECTIONS}
    types = {name: (sec, attr, typ) for name, sec, attr, typ in flat_fields()}

    def put(name, value):
        if name not in types:
            errors.append(f"{name}: unknown key")
            return
        sec, attr, typ = types[name]
        v = _coerce(value, typ, name, errors)
        if v is None:
            return
        if sec is None:
            top[attr] = v
        else:
            sections[sec][attr] = v

    for key, value in raw.items():
        if key in _SECTIONS and isinstance(value, dict):
            for k2, v2 in value.items():
                put(f"{key}.{k2}", v2)
        else:
            put(key, value)

    cfg = SimConfig(**top,
                    execution=ExecAlgoConfig(**sections["execution"]),
                    scenario=ScenarioConfig(**sections["scenario"]))
    errors.extend(_range_errors(cfg))
    if errors:
        raise ConfigError(errors)
    return cfg


def _range_errors(c: SimConfig) -> list[str]:
    e = []

    def need(ok, msg):
        if not ok:
            e.append(msg)

    for name in ("w1_max", "w2_max", "sigma_eps", "k_l"):
        need(getattr(c, name) > 0, f"{name}: must be > 0")
    need(c.u_max >= 0, "u_max: must be >= 0")
    need(0 <= c.delta_l <= 1, "delta_l: must be in [0, 1]")
    need(c.tick == 1, "tick: only a tick size of 1 is supported")
    for name in ("tau_max", "p_f", "t_l", "t_c", "t_e", "n_normal", "return_interval"):
        need(getattr(c, name) >= 1, f"{name}: must be >= 1")
    need(c.warmup >= 0, "warmup: must be >= 0")
    need(c.max_price >= c.p_f, "max_price: must be >= p_f")
    ex, sc = c.execution, c.scenario
    need(ex.kind in ALGO_KINDS, f"execution.kind: must be one of {ALGO_KINDS}")
    need(ex.count >= 1, "execution.count: must be >= 1")
    need(ex.interval >= 1, "execution.interval: must be >= 1")
    need(ex.start >= 0, "execution.start: must be >= 0")
    need(ex.depth_window >= 1, "execution.depth_window: must be >= 1")
    need(sc.kind in SCENARIO_KINDS, f"scenario.kind: must be one of {SCENARIO_KINDS}")
    need(0.0 <= sc.forced_probability <= 1.0, "scenario.forced_probability: must be in [0, 1]")
    need(sc.window_start >= 0, "scenario.window_start: must be >= 0")
    need(sc.window_start < sc.window_end, "scenario.window_end: must be > window_start")
    need(1 <= sc.forced_sell_price <= c.max_price,
         "scenario.forced_sell_price: must be in [1, max_price]")
    need(1 <= sc.forced_buy_price <= c.max_price,
         "scenario.forced_buy_price: must be in [1, max_price]")
    need(sc.spoof_cycle >= 1, "scenario.spoof_cycle: must be >= 1")
    need(sc.spoof_count >= 0, "scenario.spoof_count: must be >= 0")
    need(sc.spoof_window >= 1, "scenario.spoof_window: must be >= 1")
    return e
