"""
Experiment configuration: a flat JSON object, validated key by key.

Omitted keys take defaults. Each experiment may override some base defaults
(the block-time sweep, for example, runs at 7200 blocks per day with a 30 bps
fee).
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any

from .agents import OrderSide
from .errors import ConfigError
from .stochastic import GbmParams


class Mode(enum.Enum):
    CONVERSION_AT_POOL_PRICE = "ConversionAtPoolPrice"
    PER_BLOCK_RE_ADD = "PerBlockReAdd"


@dataclass(frozen=True)
class ExperimentConfig:
    gbm: GbmParams = field(default_factory=GbmParams)
    initial_price: float = 1.0
    initial_reserve_a: float = 100.0
    initial_reserve_b: float = 100.0
    fee: float = 0.0
    days: int = 180
    n_paths: int = 1000
    seed: int = 0
    rebate_beta1: float = 1.0
    rebate_z: int = 10
    readd_pct: float = 0.01
    readd_min_a: float = 0.0
    readd_min_b: float = 0.0
    mode: Mode = Mode.CONVERSION_AT_POOL_PRICE
    discount: str = "proportional"
    readd_style: str = "raw"
    # Canonical pending order for the delay sweep.
    order_side: OrderSide = OrderSide.SELL_B
    order_amount_in: float = 10.0
    order_min_out_frac: float = 0.99

    def __post_init__(self):
        validate(self)

    @property
    def n_blocks(self) -> int:
        return self.days * self.gbm.blocks_per_day

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "sigma_daily": self.gbm.sigma_daily,
            "mu_daily": self.gbm.mu_daily,
            "blocks_per_day": self.gbm.blocks_per_day,
        }
        for f in fields(self):
            if f.name == "gbm":
                continue
            value = getattr(self, f.name)
            out[f.name] = value.value if isinstance(value, enum.Enum) else value
        return out


GBM_KEYS = ("sigma_daily", "mu_daily", "blocks_per_day")
INT_KEYS = {"blocks_per_day", "days", "n_paths", "seed", "rebate_z"}
ENUM_KEYS = {"mode": Mode, "order_side": OrderSide}
CHOICE_KEYS = {"discount": ("proportional", "input"), "readd_style": ("raw", "pool_price")}

EXPERIMENT_DEFAULTS: dict[str, dict[str, Any]] = {
    "retention": {},
    "readd-sweep": {"mode": "PerBlockReAdd", "rebate_beta1": 0.75},
    "blocktime-sweep": {"blocks_per_day": 7200, "fee": 0.003, "days": 5, "n_paths": 200},
    "delay-sweep": {"n_paths": 20000},
}


def known_keys() -> set[str]:
    return set(GBM_KEYS) | {f.name for f in fields(ExperimentConfig) if f.name != "gbm"}


def _range(name: str, ok: bool, expect: str, value: Any):
    if not ok:
        raise ConfigError(name, f"must be {expect}, got {value!r}")


def validate(c: ExperimentConfig) -> None:
    _range("initial_price", c.initial_price > 0 and math.isfinite(c.initial_price), "positive", c.initial_price)
    _range("initial_reserve_a", c.initial_reserve_a > 0 and math.isfinite(c.initial_reserve_a), "positive", c.initial_reserve_a)
    _range("initial_reserve_b", c.initial_reserve_b > 0 and math.isfinite(c.initial_reserve_b), "positive", c.initial_reserve_b)
    _range("fee", 0.0 <= c.fee < 1.0, "in [0, 1)", c.fee)
    _range("days", c.days >= 1, ">= 1", c.days)
    _range("n_paths", c.n_paths >= 2, ">= 2", c.n_paths)
    _range("seed", c.seed >= 0, ">= 0", c.seed)
    _range("rebate_beta1", 0.0 <= c.rebate_beta1 <= 1.0, "in [0, 1]", c.rebate_beta1)
    _range("rebate_z", c.rebate_z >= (2 if c.rebate_beta1 > 0 else 1), ">= 2 when rebate_beta1 > 0", c.rebate_z)
    _range("readd_pct", 0.0 <= c.readd_pct <= 1.0, "in [0, 1]", c.readd_pct)
    _range("readd_min_a", c.readd_min_a >= 0, ">= 0", c.readd_min_a)
    _range("readd_min_b", c.readd_min_b >= 0, ">= 0", c.readd_min_b)
    _range("order_amount_in", c.order_amount_in > 0, "positive", c.order_amount_in)
    _range("order_min_out_frac", 0.0 <= c.order_min_out_frac <= 1.0, "in [0, 1]", c.order_min_out_frac)
    for key, choices in CHOICE_KEYS.items():
        _range(key, getattr(c, key) in choices, f"one of {choices}", getattr(c, key))


def _coerce(key: str, value: Any) -> Any:
    if key in ENUM_KEYS:
        try:
            return ENUM_KEYS[key](value)
        except ValueError:
            allowed = [m.value for m in ENUM_KEYS[key]]
            raise ConfigError(key, f"must be one of {allowed}, got {value!r}") from None
    if key in CHOICE_KEYS:
        if not isinstance(value, str):
            raise ConfigError(key, f"must be a string, got {value!r}")
        return value
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(key, f"must be a number, got {value!r}")
    if key in INT_KEYS:
        if isinstance(value, float) and not value.is_integer():
            raise ConfigError(key, f"must be an integer, got {value!r}")
        return int(value)
    if not math.isfinite(value):
        raise ConfigError(key, f"must be finite, got {value!r}")
    return float(value)


def config_from_dict(data: dict[str, Any], experiment: str = "retention") -> ExperimentConfig:
    if not isinstance(data, dict):
        raise ConfigError("<root>", "config must be a JSON object")
    unknown = sorted(set(data) - known_keys())
    if unknown:
        raise ConfigError(unknown[0], "unknown configuration key")
    merged = {**EXPERIMENT_DEFAULTS.get(experiment, {}), **data}
    values = {key: _coerce(key, value) for key, value in merged.items()}
    gbm = GbmParams(**{k: values.pop(k) for k in GBM_KEYS if k in values})
    return ExperimentConfig(gbm=gbm, **values)


def parse_config(path: str | Path, experiment: str = "retention") -> ExperimentConfig:
    """Load and validate a JSON config file.

    Raises FileNotFoundError for a missing file and ConfigError for anything
    malformed; the CLI maps both to exit code 1.
    """
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("<root>", f"invalid JSON: {exc}") from None
    return config_from_dict(data, experiment)


def with_overrides(config: ExperimentConfig, **changes: Any) -> ExperimentConfig:
    gbm_changes = {k: changes.pop(k) for k in GBM_KEYS if k in changes}
    if gbm_changes:
        changes["gbm"] = replace(config.gbm, **gbm_changes)
    return replace(config, **changes)
