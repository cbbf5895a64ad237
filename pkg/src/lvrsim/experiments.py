"""
Simulation campaigns: retention, re-add sweep, block-time sweep and
inclusion-delay sweep.

Retention runs use the vectorised engine in ``batch``. ``run_block`` and
``simulate_path_scalar`` step the hook state machine one block at a time and
serve as the reference implementation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Any

import numpy as np
from scipy import stats

from . import agents, amm, batch, ev, hooks
from .agents import UserOrder
from .amm import PoolState, Side, Trade
from .config import ExperimentConfig, Mode
from .errors import ConfigError, NumericalError
from .hooks import ProtectedPool, RebateSchedule, VaultState
from .stochastic import make_path

SECONDS_PER_DAY = 86_400.0


# --------------------------------------------------------------------------
# scalar reference


@dataclass(frozen=True)
class PairState:
    """A protected and an unprotected pool fed the same prices, plus the
    builder's running token positions against each."""

    protected: ProtectedPool
    unprotected: PoolState
    converting: bool
    builder_protected: tuple[float, float] = (0.0, 0.0)
    builder_unprotected: tuple[float, float] = (0.0, 0.0)
    initial: tuple[float, float] = (0.0, 0.0)


@dataclass(frozen=True)
class BlockLedger:
    block: int
    profit_protected: float
    profit_unprotected: float
    audit_error: float


def initial_pair(config: ExperimentConfig) -> PairState:
    pool = amm.new_pool(config.initial_reserve_a, config.initial_reserve_b, config.fee)
    schedule = RebateSchedule.linear(config.rebate_beta1, config.rebate_z)
    if config.mode is Mode.CONVERSION_AT_POOL_PRICE:
        vault = VaultState()
    else:
        vault = VaultState(
            pct_to_re_add=config.readd_pct,
            min_re_add_a=config.readd_min_a,
            min_re_add_b=config.readd_min_b,
            style=config.readd_style,
        )
    protected = hooks.protect(pool, schedule, vault, discount=config.discount)
    converting = config.mode is Mode.CONVERSION_AT_POOL_PRICE
    return PairState(protected, pool, converting, initial=(pool.reserve_a, pool.reserve_b))


def _flows(trade: Trade | None) -> tuple[float, float]:
    """Builder's (A, B) change from one trade."""
    if trade is None:
        return 0.0, 0.0
    if trade.side is Side.BUY_A:
        return trade.amount_out, -trade.amount_in
    return -trade.amount_in, trade.amount_out


def audit_error(state: PairState) -> float:
    """Largest token imbalance across both pools and their builder positions.

    Tokens supplied by the outside converter during pool-price re-adds are
    the only legitimate external source on the protected side.
    """
    a0, b0 = state.initial
    pa, pb = hooks.token_totals(state.protected)
    ba, bb = state.builder_protected
    ua, ub = state.builder_unprotected
    return max(
        abs(pa + ba - state.protected.converted_a - a0),
        abs(pb + bb - state.protected.converted_b - b0),
        abs(state.unprotected.reserve_a + ua - a0),
        abs(state.unprotected.reserve_b + ub - b0),
    )


def run_block(state: PairState, external_price: float, block: int) -> tuple[PairState, BlockLedger]:
    """One builder arbitrage on each pool at ``external_price``."""
    protected, trade_p = agents.arbitrage_fill(state.protected, external_price, block)
    if state.converting:
        protected = hooks.convert_vault(protected)
    unprotected, trade_u = agents.arbitrage_fill(state.unprotected, external_price, block)

    dpa, dpb = _flows(trade_p)
    dua, dub = _flows(trade_u)
    new = replace(
        state,
        protected=protected,
        unprotected=unprotected,
        builder_protected=(state.builder_protected[0] + dpa, state.builder_protected[1] + dpb),
        builder_unprotected=(state.builder_unprotected[0] + dua, state.builder_unprotected[1] + dub),
    )
    ledger = BlockLedger(
        block,
        0.0 if trade_p is None else trade_p.profit_at(external_price),
        0.0 if trade_u is None else trade_u.profit_at(external_price),
        audit_error(new),
    )
    return new, ledger


@dataclass(frozen=True)
class PathResult:
    value_protected: float
    value_unprotected: float
    value_hodl: float
    profit_protected: float
    profit_unprotected: float
    audit_error: float


def simulate_path_scalar(config: ExperimentConfig, path_index: int) -> PathResult:
    path = make_path(config.gbm, config.days, config.initial_price, config.seed, path_index)
    state = initial_pair(config)
    prof_p = prof_u = worst = 0.0
    for t, p in enumerate(path.prices.tolist()):
        state, ledger = run_block(state, p, t + 1)
        prof_p += ledger.profit_protected
        prof_u += ledger.profit_unprotected
        worst = max(worst, ledger.audit_error)
    p = path.terminal
    a0, b0 = state.initial
    return PathResult(
        hooks.protected_value(state.protected, p),
        amm.pool_value(state.unprotected, p),
        a0 * p + b0,
        prof_p,
        prof_u,
        worst,
    )


# --------------------------------------------------------------------------
# retention


@dataclass
class ExperimentReport:
    path_id: np.ndarray
    value_protected: np.ndarray
    value_unprotected: np.ndarray
    value_hodl: np.ndarray
    mean_ratio: float
    std_error: float
    config_echo: dict[str, Any]
    max_audit_error: float = 0.0
    calibration: dict[str, Any] = field(default_factory=dict)

    @property
    def ratio_protected_unprotected(self) -> np.ndarray:
        return self.value_protected / self.value_unprotected

    @property
    def ratio_hodl_unprotected(self) -> np.ndarray:
        return self.value_hodl / self.value_unprotected

    @property
    def n_paths(self) -> int:
        return len(self.path_id)

    def per_path(self) -> list[tuple[int, float, float, float, float, float]]:
        return list(zip(
            self.path_id.tolist(),
            self.value_protected.tolist(),
            self.value_unprotected.tolist(),
            self.value_hodl.tolist(),
            self.ratio_protected_unprotected.tolist(),
            self.ratio_hodl_unprotected.tolist(),
        ))


def mean_and_error(samples: np.ndarray) -> tuple[float, float]:
    n = len(samples)
    mean = math.fsum(samples.tolist()) / n
    return mean, float(np.std(samples, ddof=1)) / math.sqrt(n)


def calibration(config: ExperimentConfig) -> dict[str, Any]:
    """Settings that the retention figures are sensitive to."""
    return {
        "blocks_per_day": config.gbm.blocks_per_day,
        "discount": config.discount,
        "readd_style": config.readd_style,
        "rebate_z": config.rebate_z,
    }


def run_retention_experiment(config: ExperimentConfig, workers: int = 1) -> ExperimentReport:
    arrays = batch.simulate_retention(config, workers)
    ratio = arrays.value_protected / arrays.value_unprotected
    if not np.isfinite(ratio).all():
        raise NumericalError("non-finite protected/unprotected ratio")
    mean, se = mean_and_error(ratio)
    return ExperimentReport(
        arrays.path_id,
        arrays.value_protected,
        arrays.value_unprotected,
        arrays.value_hodl,
        mean,
        se,
        config.to_dict(),
        float(arrays.audit_error.max()),
        calibration(config),
    )


@dataclass
class ReaddSweep:
    pcts: list[float]
    reports: list[ExperimentReport]

    def rows(self) -> list[tuple[float, float, float]]:
        return [(p, r.mean_ratio, r.std_error) for p, r in zip(self.pcts, self.reports)]


def run_readd_sweep(config: ExperimentConfig, pcts: list[float], workers: int = 1) -> ReaddSweep:
    """One PerBlockReAdd retention run per re-add fraction, all on the same
    price paths."""
    if not pcts:
        raise ConfigError("pcts", "need at least one re-add fraction")
    for pct in pcts:
        if not 0.0 < pct <= 1.0:
            raise ConfigError("pcts", f"each fraction must lie in (0, 1], got {pct!r}")
    reports = [
        run_retention_experiment(replace(config, mode=Mode.PER_BLOCK_RE_ADD, readd_pct=float(p)), workers)
        for p in pcts
    ]
    return ReaddSweep(list(pcts), reports)


# --------------------------------------------------------------------------
# block time


@dataclass
class BlocktimeSweep:
    gaps: list[int]
    block_time_s: np.ndarray
    profit_per_day: np.ndarray
    std_error: np.ndarray
    slope: float
    slope_std_error: float
    config_echo: dict[str, Any]

    def rows(self) -> list[tuple[int, float, float, float]]:
        return list(zip(self.gaps, self.block_time_s.tolist(), self.profit_per_day.tolist(), self.std_error.tolist()))


def run_blocktime_sweep(config: ExperimentConfig, gaps: list[int], workers: int = 1) -> BlocktimeSweep:
    """Arbitrage profit per day when the pool can only be touched every
    ``gap``-th block, and its log-log slope against block time."""
    if config.fee <= 0:
        raise ConfigError("fee", "block-time sweep needs a positive fee")
    if len(gaps) < 2 or any(g < 1 for g in gaps):
        raise ConfigError("gaps", "need at least two positive block gaps")
    if max(gaps) < 10 * min(gaps):
        raise ConfigError("gaps", "block gaps must span at least one decade")
    profits = batch.arbitrage_profit_by_gap(config, gaps, workers) / config.days
    mean = np.array([mean_and_error(profits[:, j])[0] for j in range(len(gaps))])
    se = np.array([mean_and_error(profits[:, j])[1] for j in range(len(gaps))])
    if not (mean > 0).all():
        raise NumericalError("profit per day must be positive to fit a log-log slope")
    block_time = np.asarray(gaps, dtype=float) * SECONDS_PER_DAY / config.gbm.blocks_per_day
    fit = stats.linregress(np.log(block_time), np.log(mean))
    return BlocktimeSweep(list(gaps), block_time, mean, se, float(fit.slope), float(fit.stderr), config.to_dict())


# --------------------------------------------------------------------------
# inclusion delay


def canonical_order(config: ExperimentConfig) -> tuple[PoolState, UserOrder]:
    pool = amm.new_pool(config.initial_reserve_a, config.initial_reserve_b, config.fee)
    order = UserOrder.with_slippage(pool, config.order_side, config.order_amount_in, config.order_min_out_frac)
    return pool, order


@dataclass
class DelaySweep:
    deltas: list[int]
    estimates: list[ev.EvDecomposition]
    config_echo: dict[str, Any]

    def rows(self) -> list[tuple[int, float, float, float, float]]:
        return [(d, e.time_value, e.std_error, e.intrinsic, e.total) for d, e in zip(self.deltas, self.estimates)]


def run_delay_sweep(config: ExperimentConfig, deltas: list[int], order: UserOrder | None = None) -> DelaySweep:
    """Time value of a pending order against inclusion delay, with every delay
    sharing the seed. ``config.n_paths`` is the sample count."""
    if 0 not in deltas:
        raise ConfigError("deltas", "delay grid must include 0")
    if any(d < 0 for d in deltas):
        raise ConfigError("deltas", "delays must be non-negative")
    pool, default_order = canonical_order(config)
    order = order or default_order
    estimates = [
        ev.order_time_ev(pool, order, config.gbm, int(d), config.n_paths, config.seed, config.initial_price)
        for d in deltas
    ]
    return DelaySweep([int(d) for d in deltas], estimates, config.to_dict())


# --------------------------------------------------------------------------
# analytics


def theoretical_relative_return(daily_cost: float, days: int) -> float:
    """Growth of a position that avoids a constant daily loss, relative to one that pays it."""
    if not 0.0 <= daily_cost < 1.0:
        raise ValueError(f"daily_cost must lie in [0, 1), got {daily_cost!r}")
    return 1.0 / (1.0 - daily_cost) ** days


def combined_error(se_i: float, se_j: float) -> float:
    return math.hypot(se_i, se_j)


def nondecreasing_within(values, errors, k: float = 3.0) -> bool:
    """No later point falls below an earlier one by more than ``k`` combined errors."""
    n = len(values)
    return all(
        values[j] - values[i] >= -k * combined_error(errors[i], errors[j])
        for i in range(n) for j in range(i + 1, n)
    )


def strictly_decreasing_beyond(values, errors, k: float = 3.0) -> bool:
    """Each point exceeds the next by more than ``k`` combined errors."""
    return all(
        values[i] - values[i + 1] > k * combined_error(errors[i], errors[i + 1])
        for i in range(len(values) - 1)
    )


__all__ = [
    "BlockLedger",
    "BlocktimeSweep",
    "DelaySweep",
    "ExperimentReport",
    "PairState",
    "PathResult",
    "ReaddSweep",
    "audit_error",
    "canonical_order",
    "initial_pair",
    "nondecreasing_within",
    "run_block",
    "run_blocktime_sweep",
    "run_delay_sweep",
    "run_readd_sweep",
    "run_retention_experiment",
    "simulate_path_scalar",
    "strictly_decreasing_beyond",
    "theoretical_relative_return",
]
