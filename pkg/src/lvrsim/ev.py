"""
Extractable value priced as an option.

Intrinsic value is what a builder can take if it must act now. Total value is
the expected profit when it may wait until expiry and then act optimally
(including not acting); the difference is the time value.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from . import agents, amm, kernels
from .agents import UserOrder
from .amm import PoolState
from .errors import ConfigError
from .stochastic import GbmParams, normal_stream

PROB_TOL = 1e-12


@dataclass(frozen=True)
class DiscreteOutcome:
    probability: float
    value: float


def discrete_option_value(outcomes: list[DiscreteOutcome], strike: float) -> float:
    total = math.fsum(o.probability for o in outcomes)
    if abs(total - 1.0) > PROB_TOL or any(not 0.0 <= o.probability <= 1.0 for o in outcomes):
        raise ValueError(f"outcome probabilities must lie in [0, 1] and sum to 1, got sum {total!r}")
    return math.fsum(o.probability * max(o.value - strike, 0.0) for o in outcomes)


@dataclass(frozen=True)
class EvDecomposition:
    intrinsic: float
    time_value: float
    total: float
    horizon: int
    n_samples: int
    std_error: float


class Pricing(enum.Enum):
    WELL_PRICED = "WellPriced"
    MIS_PRICED = "MisPriced"


@dataclass(frozen=True)
class StateClass:
    classification: Pricing
    instant_profit: float
    staleness_blocks: int = 0


@dataclass(frozen=True)
class DomainSpec:
    """A domain as (minimum time between transitions, inclusion delay)."""

    min_transition_time_t: float
    inclusion_delay_delta: float = 0.0

    def __post_init__(self):
        if self.min_transition_time_t < 0:
            raise ConfigError("min_transition_time_t", "must be non-negative")
        if self.inclusion_delay_delta < 0:
            raise ConfigError("inclusion_delay_delta", "must be non-negative")

    def delay_blocks(self, block_time: float) -> int:
        """Inclusion delay rounded up to whole blocks of length ``block_time``."""
        return math.ceil(self.inclusion_delay_delta / block_time - 1e-12)


def staleness(last_acted_block: int, current_block: int) -> int:
    if current_block < last_acted_block:
        raise ValueError(f"current block {current_block} precedes last action at {last_acted_block}")
    return current_block - last_acted_block


def classify_state(pool: PoolState, external_price: float, last_acted_block: int = 0, current_block: int = 0) -> StateClass:
    profit = amm.arbitrage_profit(pool, external_price)
    kind = Pricing.MIS_PRICED if profit > 0 else Pricing.WELL_PRICED
    return StateClass(kind, profit, staleness(last_acted_block, current_block))


def terminal_prices(params: GbmParams, initial_price: float, horizon_blocks: int, n_samples: int, seed: int) -> np.ndarray:
    """Exact GBM draws of the price ``horizon_blocks`` ahead."""
    drift, vol = params.log_increment(horizon_blocks)
    z = normal_stream(seed, 0).standard_normal(n_samples)
    return initial_price * np.exp(drift + vol * z)


def _decompose(intrinsic: float, samples: np.ndarray, horizon: int) -> EvDecomposition:
    n = len(samples)
    total = math.fsum(samples) / n
    se = float(np.std(samples, ddof=1)) / math.sqrt(n)
    return EvDecomposition(intrinsic, total - intrinsic, total, horizon, n, se)


def _check(horizon: int, n_samples: int):
    if horizon < 0:
        raise ValueError(f"horizon must be non-negative, got {horizon!r}")
    if n_samples < 2:
        raise ValueError(f"need at least 2 samples, got {n_samples!r}")


def pool_time_ev(
    pool: PoolState,
    params: GbmParams,
    horizon_blocks: int,
    n_samples: int,
    seed: int,
    external_price: float | None = None,
) -> EvDecomposition:
    """Value of the option to arbitrage ``pool`` at expiry rather than now.

    ``external_price`` defaults to the pool's own spot price.
    """
    _check(horizon_blocks, n_samples)
    p0 = amm.spot_price(pool) if external_price is None else external_price
    intrinsic = amm.arbitrage_profit(pool, p0)
    if horizon_blocks == 0:
        return EvDecomposition(intrinsic, 0.0, intrinsic, 0, n_samples, 0.0)
    prices = terminal_prices(params, p0, horizon_blocks, n_samples, seed)
    samples = kernels.arbitrage_profit(pool.reserve_a, pool.reserve_b, pool.fee, prices)
    return _decompose(intrinsic, samples, horizon_blocks)


def order_time_ev(
    pool: PoolState,
    order: UserOrder,
    params: GbmParams,
    delta_blocks: int,
    n_samples: int,
    seed: int,
    external_price: float | None = None,
) -> EvDecomposition:
    """Value of deciding on a pending order after ``delta_blocks`` instead of now."""
    _check(delta_blocks, n_samples)
    p0 = amm.spot_price(pool) if external_price is None else external_price
    intrinsic = agents.order_marginal_value(pool, order, p0)
    if delta_blocks == 0:
        return EvDecomposition(intrinsic, 0.0, intrinsic, 0, n_samples, 0.0)
    prices = terminal_prices(params, p0, delta_blocks, n_samples, seed)
    samples = agents.order_marginal_values(pool, order, prices)
    return _decompose(intrinsic, samples, delta_blocks)


def atm_option_benchmark(spot: float, sigma: float, horizon: float) -> float:
    """E[(S_T - S_0)^+] for driftless GBM; Black-Scholes at the money, zero rate."""
    if horizon <= 0 or sigma <= 0:
        return 0.0
    half_width = 0.5 * sigma * math.sqrt(horizon)
    return spot * math.erf(half_width / math.sqrt(2.0))
