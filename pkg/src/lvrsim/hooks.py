"""
LVR-retaining swap hooks: a protected pool, its hedger and its vault.

The first swap touching the pool in a block is the arbitrage swap. It is
executed at a discount of ``beta(gap)`` and the pool is then pushed to the
price the full swap would have produced, with the removed tokens going to the
vault. Later swaps in the same block only execute when the hedger's budgets
attest them.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Literal

from . import amm
from .amm import PoolState, Side
from .errors import ConfigError, ProtocolError, SwapRejected, WithdrawalBlocked

Discount = Literal["proportional", "input"]
ReAddStyle = Literal["raw", "pool_price"]


@dataclass(frozen=True)
class RebateSchedule:
    horizon_z: int
    betas: tuple[float, ...]  # betas[g - 1] = beta(g) for g in 1..Z

    def __post_init__(self):
        if self.horizon_z < 1 or len(self.betas) != self.horizon_z:
            raise ConfigError("rebate_z", "schedule needs exactly Z entries for gaps 1..Z")
        if any(not 0.0 <= b <= 1.0 for b in self.betas):
            raise ConfigError("rebate_beta1", "rebate fractions must lie in [0, 1]")
        if self.betas[-1] != 0.0:
            raise ConfigError("rebate_beta1", "beta(Z) must be 0")
        if any(b1 <= b2 for b1, b2 in zip(self.betas, self.betas[1:])):
            raise ConfigError("rebate_beta1", "beta must be strictly decreasing")

    @classmethod
    def linear(cls, beta1: float, horizon_z: int) -> RebateSchedule:
        """beta(1) = beta1, falling linearly to beta(Z) = 0.

        A zero rebate collapses to the one-point schedule Z = 1.
        """
        if not 0.0 <= beta1 <= 1.0:
            raise ConfigError("rebate_beta1", f"must lie in [0, 1], got {beta1!r}")
        if beta1 == 0.0:
            return cls(1, (0.0,))
        if horizon_z < 2:
            raise ConfigError("rebate_z", "a positive beta(1) needs Z >= 2")
        betas = tuple(beta1 * (horizon_z - g) / (horizon_z - 1) for g in range(1, horizon_z + 1))
        return cls(horizon_z, betas)


def rebate(schedule: RebateSchedule, gap: int) -> float:
    if gap <= 0:
        raise ValueError(f"block gap must be positive, got {gap!r}")
    if gap >= schedule.horizon_z:
        return 0.0
    return schedule.betas[gap - 1]


@dataclass(frozen=True)
class HedgerState:
    balance_a: float = 0.0
    balance_b: float = 0.0
    hedge_available_a: float = 0.0
    hedge_available_b: float = 0.0
    owner: str | None = None


def hedger_deposit(h: HedgerState, amount_a: float, amount_b: float, depositor: str) -> HedgerState:
    if amount_a < 0 or amount_b < 0:
        raise ValueError("deposit amounts must be non-negative")
    return HedgerState(
        h.balance_a + amount_a,
        h.balance_b + amount_b,
        h.hedge_available_a + amount_a,
        h.hedge_available_b + amount_b,
        depositor,
    )


def hedger_withdraw(h: HedgerState, amount_a: float, amount_b: float) -> HedgerState:
    if amount_a < 0 or amount_b < 0:
        raise ValueError("withdrawal amounts must be non-negative")
    if h.hedge_available_a < amount_a or h.hedge_available_b < amount_b:
        raise WithdrawalBlocked(
            f"budget ({h.hedge_available_a}, {h.hedge_available_b}) does not cover ({amount_a}, {amount_b})"
        )
    if h.balance_a < amount_a or h.balance_b < amount_b:
        raise WithdrawalBlocked("hedger does not hold the tokens requested")
    return replace(
        h,
        balance_a=h.balance_a - amount_a,
        balance_b=h.balance_b - amount_b,
        hedge_available_a=h.hedge_available_a - amount_a,
        hedge_available_b=h.hedge_available_b - amount_b,
    )


def hedger_drain(h: HedgerState) -> tuple[HedgerState, tuple[float, float]]:
    """Empty the hedger; returns the zeroed state and the tokens sent to the pool."""
    return HedgerState(owner=h.owner), (h.balance_a, h.balance_b)


@dataclass(frozen=True)
class VaultState:
    balance_a: float = 0.0
    balance_b: float = 0.0
    pct_to_re_add: float = 0.0
    min_re_add_a: float = 0.0
    min_re_add_b: float = 0.0
    style: ReAddStyle = "pool_price"

    def __post_init__(self):
        if not 0.0 <= self.pct_to_re_add <= 1.0:
            raise ConfigError("readd_pct", f"must lie in [0, 1], got {self.pct_to_re_add!r}")
        if self.min_re_add_a < 0:
            raise ConfigError("readd_min_a", "must be non-negative")
        if self.min_re_add_b < 0:
            raise ConfigError("readd_min_b", "must be non-negative")
        if self.style not in ("raw", "pool_price"):
            raise ConfigError("readd_style", f"unknown re-add style {self.style!r}")


DUST = 1e-12


def _tranche(balance: float, pct: float, minimum: float) -> float:
    t = min(balance, max(pct * balance, minimum))
    # Sweep rounding dust so a vault with a minimum empties in whole steps.
    if balance - t <= DUST * max(balance, minimum):
        return balance
    return t


def _re_add(v: VaultState, pool: PoolState) -> tuple[VaultState, PoolState, tuple[float, float]]:
    """Shared re-add step. The third element is what an outside converter
    supplied to the pool (negative: what it took), per token."""
    ta = _tranche(v.balance_a, v.pct_to_re_add, v.min_re_add_a)
    tb = _tranche(v.balance_b, v.pct_to_re_add, v.min_re_add_b)
    if ta == 0.0 and tb == 0.0:
        return v, pool, (0.0, 0.0)
    vault = replace(v, balance_a=v.balance_a - ta, balance_b=v.balance_b - tb)
    if v.style == "raw":
        return vault, replace(pool, reserve_a=pool.reserve_a + ta, reserve_b=pool.reserve_b + tb), (0.0, 0.0)
    x, y = pool.reserve_a, pool.reserve_b
    scale = 1.0 + (ta * (y / x) + tb) / (2.0 * y)
    new = replace(pool, reserve_a=x * scale, reserve_b=y * scale)
    return vault, new, (new.reserve_a - x - ta, new.reserve_b - y - tb)


def vault_re_add(v: VaultState, pool: PoolState) -> tuple[VaultState, PoolState]:
    """Move one tranche of the vault into the pool.

    ``pool_price`` style injects the tranche's value at the pool's spot price
    as balanced liquidity (price unchanged); ``raw`` transfers the tokens as
    they are.
    """
    vault, new_pool, _ = _re_add(v, pool)
    return vault, new_pool


def convert_vault(pp: ProtectedPool) -> ProtectedPool:
    """Put the whole vault back into the pool as balanced liquidity at the pool price."""
    full = replace(pp.vault, pct_to_re_add=1.0, style="pool_price")
    vault, pool, (ca, cb) = _re_add(full, pp.pool)
    vault = replace(vault, pct_to_re_add=pp.vault.pct_to_re_add, style=pp.vault.style)
    return replace(pp, pool=pool, vault=vault, converted_a=pp.converted_a + ca, converted_b=pp.converted_b + cb)


def vault_rebalance(v: VaultState, pool: PoolState, true_price: float) -> tuple[VaultState, PoolState]:
    """Remove the token being bought until the pool quotes ``true_price``."""
    if not true_price > 0:
        raise ValueError(f"true_price must be positive, got {true_price!r}")
    x, y = pool.reserve_a, pool.reserve_b
    if y / x < true_price:
        q = x - y / true_price
        return replace(v, balance_a=v.balance_a + q), replace(pool, reserve_a=x - q)
    if y / x > true_price:
        q = y - x * true_price
        return replace(v, balance_b=v.balance_b + q), replace(pool, reserve_b=y - q)
    return v, pool


@dataclass(frozen=True)
class SwapFill:
    """What a hook actually executed against the pool."""

    side: Side
    amount_in: float  # executed input
    amount_out: float  # executed output
    requested_in: float
    first_swap: bool
    true_price: float | None = None


@dataclass(frozen=True)
class ProtectedPool:
    pool: PoolState
    hedger: HedgerState
    vault: VaultState
    schedule: RebateSchedule
    b_previous: int = 0
    pending_true_price: float | None = None
    pending_fill: SwapFill | None = None
    discount: Discount = "proportional"
    # Net tokens supplied by the outside converter during pool-price re-adds.
    converted_a: float = 0.0
    converted_b: float = 0.0

    def __post_init__(self):
        if self.discount not in ("proportional", "input"):
            raise ConfigError("discount", f"unknown discount style {self.discount!r}")


def protect(
    pool: PoolState,
    schedule: RebateSchedule,
    vault: VaultState | None = None,
    *,
    start_block: int = 0,
    discount: Discount = "proportional",
) -> ProtectedPool:
    return ProtectedPool(pool, HedgerState(), vault or VaultState(), schedule, start_block, discount=discount)


def first_swap_preamble(pp: ProtectedPool) -> ProtectedPool:
    """Drain the hedger into the pool and re-add one vault tranche."""
    hedger, (da, db) = hedger_drain(pp.hedger)
    pool = replace(pp.pool, reserve_a=pp.pool.reserve_a + da, reserve_b=pp.pool.reserve_b + db)
    vault, pool, (ca, cb) = _re_add(pp.vault, pool)
    return replace(
        pp, pool=pool, hedger=hedger, vault=vault, converted_a=pp.converted_a + ca, converted_b=pp.converted_b + cb
    )


def _attested(h: HedgerState, side: Side, bought: float) -> bool:
    # Branches of the same-block rule: the budget of the token leaving the pool
    # must cover it. A zero-output swap is never attested.
    if side is Side.BUY_A:
        return h.hedge_available_a >= bought and bought > 0
    return h.hedge_available_b >= bought and bought > 0


def before_swap(pp: ProtectedPool, side: Side, amount_in: float, current_block: int) -> tuple[ProtectedPool, SwapFill]:
    if amount_in < 0:
        raise ValueError(f"amount_in must be non-negative, got {amount_in!r}")
    if pp.pending_fill is not None:
        raise ProtocolError("before_swap called while another swap is mid-flight")
    gap = current_block - pp.b_previous
    if gap < 0:
        raise ProtocolError(f"block {current_block} precedes last swap block {pp.b_previous}")

    if gap > 0:
        pp = first_swap_preamble(pp)
        keep = 1.0 - rebate(pp.schedule, gap)
        true_price, full_out = amm.simulate_swap(pp.pool, side, amount_in)
        if keep == 1.0:
            exec_in = amount_in
            pool, exec_out = amm.swap_exact_in(pp.pool, side, amount_in)
        elif pp.discount == "proportional":
            exec_in, exec_out = keep * amount_in, keep * full_out
            r_in, r_out = pp.pool.reserves_for(side)
            pool = pp.pool.with_reserves_for(side, r_in + exec_in, r_out - exec_out)
        else:
            exec_in = keep * amount_in
            pool, exec_out = amm.swap_exact_in(pp.pool, side, exec_in)
        fill = SwapFill(side, exec_in, exec_out, amount_in, True, true_price)
        return replace(pp, pool=pool, pending_true_price=true_price, pending_fill=fill), fill

    bought = amm.quote_out(pp.pool, side, amount_in)
    if not _attested(pp.hedger, side, bought):
        raise SwapRejected("price is not attested: hedge budget does not cover the swap")
    pool, out = amm.swap_exact_in(pp.pool, side, amount_in)
    fill = SwapFill(side, amount_in, out, amount_in, False)
    return replace(pp, pool=pool, pending_fill=fill), fill


def after_swap(pp: ProtectedPool, side: Side, amount_in: float, current_block: int) -> ProtectedPool:
    fill = pp.pending_fill
    if fill is None:
        raise ProtocolError("after_swap called without a matching before_swap")
    if fill.side is not side or fill.requested_in != amount_in:
        raise ProtocolError("after_swap arguments do not match the pending swap")

    if fill.first_swap:
        vault, pool = vault_rebalance(pp.vault, pp.pool, fill.true_price)
        return replace(
            pp, pool=pool, vault=vault, b_previous=current_block, pending_true_price=None, pending_fill=None
        )

    h = pp.hedger
    if side is Side.BUY_A:
        h = replace(h, hedge_available_a=h.hedge_available_a - fill.amount_out,
                    hedge_available_b=h.hedge_available_b + fill.amount_in)
    else:
        h = replace(h, hedge_available_b=h.hedge_available_b - fill.amount_out,
                    hedge_available_a=h.hedge_available_a + fill.amount_in)
    return replace(pp, hedger=h, pending_fill=None)


def token_totals(pp: ProtectedPool) -> tuple[float, float]:
    """Tokens held by pool, vault and hedger together."""
    return (
        pp.pool.reserve_a + pp.vault.balance_a + pp.hedger.balance_a,
        pp.pool.reserve_b + pp.vault.balance_b + pp.hedger.balance_b,
    )


def protected_value(pp: ProtectedPool, external_price: float) -> float:
    a, b = token_totals(pp)
    return a * external_price + b
