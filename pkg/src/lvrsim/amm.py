"""
Constant-product market maker.

Reserves are real-valued. Token B is the numeraire, so the spot price of the
pool is ``reserve_b / reserve_a`` (B per A). The fee is charged on the input
side and stays in the pool, Uniswap-V2 style.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

from .errors import ConfigError


class Side(enum.Enum):
    """Direction of a trade against the pool, from the trader's view."""

    BUY_A = "BuyA"  # pay B, receive A
    BUY_B = "BuyB"  # pay A, receive B

    @property
    def opposite(self) -> Side:
        return Side.BUY_B if self is Side.BUY_A else Side.BUY_A


@dataclass(frozen=True)
class PoolState:
    reserve_a: float
    reserve_b: float
    fee: float = 0.0

    @property
    def k(self) -> float:
        return self.reserve_a * self.reserve_b

    def reserves_for(self, side: Side) -> tuple[float, float]:
        """(reserve_in, reserve_out) for a trade on ``side``."""
        if side is Side.BUY_A:
            return self.reserve_b, self.reserve_a
        return self.reserve_a, self.reserve_b

    def with_reserves_for(self, side: Side, reserve_in: float, reserve_out: float) -> PoolState:
        if side is Side.BUY_A:
            return replace(self, reserve_a=reserve_out, reserve_b=reserve_in)
        return replace(self, reserve_a=reserve_in, reserve_b=reserve_out)


@dataclass(frozen=True)
class Trade:
    side: Side
    amount_in: float
    amount_out: float

    def profit_at(self, price: float) -> float:
        """Trader's profit with both legs marked at ``price`` (B numeraire)."""
        if self.side is Side.BUY_A:
            return self.amount_out * price - self.amount_in
        return self.amount_out - self.amount_in * price


def new_pool(reserve_a: float, reserve_b: float, fee: float = 0.0) -> PoolState:
    if not (reserve_a > 0 and math.isfinite(reserve_a)):
        raise ConfigError("reserve_a", f"must be a positive finite number, got {reserve_a!r}")
    if not (reserve_b > 0 and math.isfinite(reserve_b)):
        raise ConfigError("reserve_b", f"must be a positive finite number, got {reserve_b!r}")
    if not 0.0 <= fee < 1.0:
        raise ConfigError("fee", f"must lie in [0, 1), got {fee!r}")
    return PoolState(float(reserve_a), float(reserve_b), float(fee))


def spot_price(pool: PoolState) -> float:
    return pool.reserve_b / pool.reserve_a


def quote_out(pool: PoolState, side: Side, amount_in: float) -> float:
    """Output of an exact-input swap, without touching the pool."""
    if amount_in < 0:
        raise ValueError(f"amount_in must be non-negative, got {amount_in!r}")
    if amount_in == 0:
        return 0.0
    r_in, r_out = pool.reserves_for(side)
    effective = amount_in * (1.0 - pool.fee)
    return r_out * effective / (r_in + effective)


def swap_exact_in(pool: PoolState, side: Side, amount_in: float) -> tuple[PoolState, float]:
    """Execute an exact-input swap. Returns the new pool and the amount out."""
    out = quote_out(pool, side, amount_in)
    if amount_in == 0:
        return pool, 0.0
    r_in, r_out = pool.reserves_for(side)
    # New output reserve from the invariant directly; r_out - out cancels badly
    # when a trade nearly drains the pool.
    effective = amount_in * (1.0 - pool.fee)
    return pool.with_reserves_for(side, r_in + amount_in, r_out * r_in / (r_in + effective)), out


def simulate_swap(pool: PoolState, side: Side, amount_in: float) -> tuple[float, float]:
    """Spot price and output the pool would have after the full swap."""
    after, out = swap_exact_in(pool, side, amount_in)
    return spot_price(after), out


def arbitrage_trade(pool: PoolState, external_price: float) -> Trade | None:
    """Profit-maximising trade against ``external_price``, or None inside the fee band.

    The optimum sets the marginal execution price equal to the external price;
    with fee 0 the post-trade reserves are (sqrt(k/p), sqrt(k*p)).
    """
    if not external_price > 0:
        raise ValueError(f"external_price must be positive, got {external_price!r}")
    gamma = 1.0 - pool.fee
    x, y = pool.reserve_a, pool.reserve_b
    k = x * y
    # Buying A pays off when the pool undervalues A.
    pay_b = (math.sqrt(k * gamma * external_price) - y) / gamma
    if pay_b > 0:
        trade = Trade(Side.BUY_A, pay_b, quote_out(pool, Side.BUY_A, pay_b))
    else:
        pay_a = (math.sqrt(k * gamma / external_price) - x) / gamma
        if not pay_a > 0:
            return None
        trade = Trade(Side.BUY_B, pay_a, quote_out(pool, Side.BUY_B, pay_a))
    if trade.profit_at(external_price) <= 0:
        return None
    return trade


def arbitrage_profit(pool: PoolState, external_price: float) -> float:
    trade = arbitrage_trade(pool, external_price)
    return 0.0 if trade is None else trade.profit_at(external_price)


def pool_value(pool: PoolState, external_price: float) -> float:
    return pool.reserve_a * external_price + pool.reserve_b


def hodl_value(initial_a: float, initial_b: float, external_price: float) -> float:
    return initial_a * external_price + initial_b
