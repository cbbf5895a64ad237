"""
Vectorised retention and block-time engines.

Paths are simulated side by side as numpy arrays; every operation is
elementwise over the path axis, so a path's numbers do not depend on which
other paths share its batch. The scalar state machine in ``hooks`` and
``experiments.run_block`` is the reference these engines are tested against.

The hedger is not modelled here: retention runs carry arbitrage flow only, so
no same-block swap ever deposits into it.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import kernels
from .config import ExperimentConfig, Mode
from .errors import NumericalError
from .hooks import DUST, RebateSchedule
from .stochastic import make_path

BATCH_SIZE = 1024


@dataclass
class RetentionArrays:
    path_id: np.ndarray
    value_protected: np.ndarray
    value_unprotected: np.ndarray
    value_hodl: np.ndarray
    profit_protected: np.ndarray
    profit_unprotected: np.ndarray
    audit_error: np.ndarray

    @classmethod
    def concat(cls, parts: list[RetentionArrays]) -> RetentionArrays:
        return cls(*(np.concatenate([getattr(p, f) for p in parts]) for f in cls.__dataclass_fields__))


def price_matrix(config: ExperimentConfig, path_ids: np.ndarray) -> np.ndarray:
    """Rows are the per-block price paths of ``path_ids``."""
    return np.stack(
        [make_path(config.gbm, config.days, config.initial_price, config.seed, int(i)).prices for i in path_ids]
    )


def rebate_table(schedule: RebateSchedule) -> np.ndarray:
    """beta(g) at index g - 1 for g in 1..Z; gaps beyond Z clip to the final zero."""
    return np.asarray(schedule.betas, dtype=float)


def _retention_batch(config: ExperimentConfig, path_ids: np.ndarray) -> RetentionArrays:
    prices = price_matrix(config, path_ids)
    n = len(path_ids)
    fee = config.fee
    a0, b0 = config.initial_reserve_a, config.initial_reserve_b
    schedule = RebateSchedule.linear(config.rebate_beta1, config.rebate_z)
    betas = rebate_table(schedule)
    z = schedule.horizon_z
    converting = config.mode is Mode.CONVERSION_AT_POOL_PRICE
    pct = 0.0 if converting else config.readd_pct
    min_a, min_b = (0.0, 0.0) if converting else (config.readd_min_a, config.readd_min_b)
    raw = config.readd_style == "raw"
    proportional = config.discount == "proportional"

    xu, yu = np.full(n, a0), np.full(n, b0)
    x, y = np.full(n, a0), np.full(n, b0)
    va, vb = np.zeros(n), np.zeros(n)
    conv_a, conv_b = np.zeros(n), np.zeros(n)  # supplied by the outside converter
    bld_a, bld_b = np.zeros(n), np.zeros(n)  # builder's flows against the protected pool
    bld_ua, bld_ub = np.zeros(n), np.zeros(n)
    prof_p, prof_u = np.zeros(n), np.zeros(n)
    b_prev = np.zeros(n, dtype=np.int64)

    for t in range(prices.shape[1]):
        block = t + 1
        p = prices[:, t]

        pay_b, out_a, pay_a, out_b, profit = kernels.arbitrage(xu, yu, fee, p)
        xu, yu = kernels.apply_arbitrage(xu, yu, fee, pay_b, pay_a)
        bld_ua += out_a - pay_a
        bld_ub += out_b - pay_b
        prof_u += profit

        # Pool as the first swap of the block will find it: one vault tranche re-added.
        ta = np.minimum(va, np.maximum(pct * va, min_a))
        tb = np.minimum(vb, np.maximum(pct * vb, min_b))
        ta = np.where(va - ta <= DUST * np.maximum(va, min_a), va, ta)
        tb = np.where(vb - tb <= DUST * np.maximum(vb, min_b), vb, tb)
        if raw:
            xq, yq = x + ta, y + tb
        else:
            scale = 1.0 + (ta * (y / x) + tb) / (2.0 * y)
            xq, yq = x * scale, y * scale
        pay_b, out_a, pay_a, out_b, profit = kernels.arbitrage(xq, yq, fee, p)
        swap = profit > 0
        if not raw:
            conv_a += np.where(swap, xq - x - ta, 0.0)
            conv_b += np.where(swap, yq - y - tb, 0.0)
        va, vb = np.where(swap, va - ta, va), np.where(swap, vb - tb, vb)
        x, y = np.where(swap, xq, x), np.where(swap, yq, y)

        # Price the undiscounted swap would leave behind.
        xt, yt = kernels.apply_arbitrage(x, y, fee, pay_b, pay_a)
        true_price = yt / xt
        keep = 1.0 - betas[np.minimum(block - b_prev, z) - 1]
        if proportional:
            ex_pay_b, ex_out_a = keep * pay_b, keep * out_a
            ex_pay_a, ex_out_b = keep * pay_a, keep * out_b
            xe, ye = x - ex_out_a + ex_pay_a, y + ex_pay_b - ex_out_b
            xe, ye = np.where(keep == 1.0, xt, xe), np.where(keep == 1.0, yt, ye)
        else:
            ex_pay_b, ex_pay_a = keep * pay_b, keep * pay_a
            ex_out_a = np.where(ex_pay_b > 0, kernels.swap_out(y, x, ex_pay_b, fee), 0.0)
            ex_out_b = np.where(ex_pay_a > 0, kernels.swap_out(x, y, ex_pay_a, fee), 0.0)
            xe, ye = kernels.apply_arbitrage(x, y, fee, ex_pay_b, ex_pay_a)
        bld_a += ex_out_a - ex_pay_a
        bld_b += ex_out_b - ex_pay_b
        prof_p += ex_out_a * p - ex_pay_b + ex_out_b - ex_pay_a * p

        spot = ye / xe
        qa = np.where(swap & (spot < true_price), xe - ye / true_price, 0.0)
        qb = np.where(swap & (spot > true_price), ye - xe * true_price, 0.0)
        x, y = xe - qa, ye - qb
        va, vb = va + qa, vb + qb
        b_prev = np.where(swap, block, b_prev)

        if converting:
            scale = 1.0 + (va * (y / x) + vb) / (2.0 * y)
            conv_a += x * scale - x - va
            conv_b += y * scale - y - vb
            x, y = x * scale, y * scale
            va, vb = np.zeros(n), np.zeros(n)

    p = prices[:, -1]
    value_p = (x + va) * p + (y + vb)
    value_u = xu * p + yu
    audit = np.maximum.reduce([
        np.abs(x + va + bld_a - conv_a - a0),
        np.abs(y + vb + bld_b - conv_b - b0),
        np.abs(xu + bld_ua - a0),
        np.abs(yu + bld_ub - b0),
    ])
    out = RetentionArrays(
        np.asarray(path_ids, dtype=np.int64), value_p, value_u, a0 * p + b0, prof_p, prof_u, audit
    )
    if not all(np.isfinite(getattr(out, f)).all() for f in ("value_protected", "value_unprotected", "audit_error")):
        raise NumericalError("non-finite value in retention simulation")
    return out


def _retention_chunk(args) -> RetentionArrays:
    config, path_ids = args
    parts = [_retention_batch(config, path_ids[i:i + BATCH_SIZE]) for i in range(0, len(path_ids), BATCH_SIZE)]
    return RetentionArrays.concat(parts)


def _split(path_ids: np.ndarray, workers: int) -> list[np.ndarray]:
    return [chunk for chunk in np.array_split(path_ids, max(1, workers)) if len(chunk)]


def simulate_retention(config: ExperimentConfig, workers: int = 1) -> RetentionArrays:
    """All paths of a retention run, in ascending path order."""
    path_ids = np.arange(config.n_paths, dtype=np.int64)
    chunks = _split(path_ids, workers)
    if workers <= 1 or len(chunks) == 1:
        return RetentionArrays.concat([_retention_chunk((config, c)) for c in chunks])
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return RetentionArrays.concat(list(pool.map(_retention_chunk, [(config, c) for c in chunks])))


def _arbitrage_profit_chunk(args) -> np.ndarray:
    config, path_ids, gaps = args
    out = np.empty((len(path_ids), len(gaps)))
    for start in range(0, len(path_ids), BATCH_SIZE):
        ids = path_ids[start:start + BATCH_SIZE]
        prices = price_matrix(config, ids)
        for j, gap in enumerate(gaps):
            x = np.full(len(ids), config.initial_reserve_a)
            y = np.full(len(ids), config.initial_reserve_b)
            total = np.zeros(len(ids))
            for t in range(gap - 1, prices.shape[1], gap):
                pay_b, _, pay_a, _, profit = kernels.arbitrage(x, y, config.fee, prices[:, t])
                x, y = kernels.apply_arbitrage(x, y, config.fee, pay_b, pay_a)
                total += profit
            out[start:start + len(ids), j] = total
    if not np.isfinite(out).all():
        raise NumericalError("non-finite arbitrage profit")
    return out


def arbitrage_profit_by_gap(config: ExperimentConfig, gaps: list[int], workers: int = 1) -> np.ndarray:
    """Total arbitrage profit per path (rows) when the unprotected pool can only
    be arbitraged every ``gap``-th block (columns)."""
    path_ids = np.arange(config.n_paths, dtype=np.int64)
    chunks = _split(path_ids, workers)
    jobs = [(config, c, list(gaps)) for c in chunks]
    if workers <= 1 or len(chunks) == 1:
        return np.concatenate([_arbitrage_profit_chunk(j) for j in jobs])
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return np.concatenate(list(pool.map(_arbitrage_profit_chunk, jobs)))
