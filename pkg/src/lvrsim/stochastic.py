"""
Geometric Brownian reference price with per-path random streams.

Every path draws from its own generator keyed by ``(seed, path_index)``, so a
path's numbers never depend on which other paths were simulated or in what
order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError


@dataclass(frozen=True)
class GbmParams:
    mu_daily: float = 0.0
    sigma_daily: float = 0.05
    blocks_per_day: int = 100

    def __post_init__(self):
        if not (self.sigma_daily >= 0 and math.isfinite(self.sigma_daily)):
            raise ConfigError("sigma_daily", f"must be a non-negative finite number, got {self.sigma_daily!r}")
        if not math.isfinite(self.mu_daily):
            raise ConfigError("mu_daily", f"must be finite, got {self.mu_daily!r}")
        if isinstance(self.blocks_per_day, bool) or int(self.blocks_per_day) != self.blocks_per_day or self.blocks_per_day < 1:
            raise ConfigError("blocks_per_day", f"must be a positive integer, got {self.blocks_per_day!r}")

    @property
    def dt(self) -> float:
        """Block length in days."""
        return 1.0 / self.blocks_per_day

    def log_increment(self, steps: float = 1.0) -> tuple[float, float]:
        """(drift, volatility) of the log-price over ``steps`` blocks."""
        tau = steps * self.dt
        return (self.mu_daily - 0.5 * self.sigma_daily**2) * tau, self.sigma_daily * math.sqrt(tau)


@dataclass(frozen=True)
class PricePath:
    initial_price: float
    prices: np.ndarray  # price at the end of each block

    @property
    def terminal(self) -> float:
        return float(self.prices[-1]) if len(self.prices) else self.initial_price


def gbm_step(price: float, params: GbmParams, normal_draw: float) -> float:
    drift, vol = params.log_increment()
    return price * math.exp(drift + vol * normal_draw)


def normal_stream(seed: int, path_index: int) -> np.random.Generator:
    """Generator of standard normals unique to ``(seed, path_index)``.

    Philox is counter-based; the SeedSequence spawn key gives each path index
    its own key, so streams never overlap.
    """
    seq = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(path_index),))
    return np.random.Generator(np.random.Philox(seq))


def price_sequence(initial_price: float, params: GbmParams, draws: np.ndarray) -> np.ndarray:
    """Per-block prices from standard-normal draws (sequential product, so
    the result is independent of how the draws were chunked)."""
    drift, vol = params.log_increment()
    factors = np.exp(drift + vol * np.asarray(draws, dtype=float))
    out = np.empty(len(factors) + 1)
    out[0] = initial_price
    out[1:] = factors
    return np.multiply.accumulate(out)[1:]


def make_path(params: GbmParams, days: int, initial_price: float, seed: int, path_index: int) -> PricePath:
    if days < 1:
        raise ConfigError("days", f"must be at least 1, got {days!r}")
    if not initial_price > 0:
        raise ConfigError("initial_price", f"must be positive, got {initial_price!r}")
    draws = normal_stream(seed, path_index).standard_normal(days * params.blocks_per_day)
    return PricePath(float(initial_price), price_sequence(initial_price, params, draws))
