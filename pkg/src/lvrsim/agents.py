"""
Block-builder behaviour: per-block arbitrage and the choice between
sandwiching, back-running or ignoring a pending user order.

Builder inventory is marked to the external price at the end of the block.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import amm, hooks, kernels
from .amm import PoolState, Side, Trade
from .hooks import ProtectedPool

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0
GRID_POINTS = 33
SIZE_TOL = 1e-9


class OrderSide(enum.Enum):
    SELL_A = "SellA"
    SELL_B = "SellB"

    @property
    def trade_side(self) -> Side:
        return Side.BUY_B if self is OrderSide.SELL_A else Side.BUY_A


@dataclass(frozen=True)
class UserOrder:
    side: OrderSide
    amount_in: float
    min_out: float
    submit_block: int = 0

    def __post_init__(self):
        if not self.amount_in > 0:
            raise ValueError(f"order amount_in must be positive, got {self.amount_in!r}")
        if self.min_out < 0:
            raise ValueError(f"order min_out must be non-negative, got {self.min_out!r}")

    @classmethod
    def with_slippage(cls, pool: PoolState, side: OrderSide, amount_in: float, fraction: float, submit_block: int = 0):
        """Order whose limit is ``fraction`` of the current quote."""
        quote = amm.quote_out(pool, side.trade_side, amount_in)
        return cls(side, amount_in, fraction * quote, submit_block)


class Action(enum.IntEnum):
    # Ordered by interference; ties go to the smaller value.
    EXCLUDE = 0
    BACKRUN_ONLY = 1
    SANDWICH = 2


@dataclass(frozen=True)
class BuilderDecision:
    action: Action
    front_run_size: float
    profit: float


def arbitrage_fill(state: PoolState | ProtectedPool, external_price: float, current_block: int):
    """Arbitrage one pool to ``external_price``.

    Returns (new state, executed trade or None). On a protected pool the
    builder sizes the trade against the pool as it will look after the
    first-swap preamble, then goes through the hooks; the trade returned is
    what the hooks actually executed.
    """
    if not external_price > 0:
        raise ValueError(f"external_price must be positive, got {external_price!r}")
    if isinstance(state, PoolState):
        trade = amm.arbitrage_trade(state, external_price)
        if trade is None:
            return state, None
        pool, _ = amm.swap_exact_in(state, trade.side, trade.amount_in)
        return pool, trade

    target = state.pool
    if current_block > state.b_previous:
        target = hooks.first_swap_preamble(state).pool
    trade = amm.arbitrage_trade(target, external_price)
    if trade is None:
        return state, None
    state, fill = hooks.before_swap(state, trade.side, trade.amount_in, current_block)
    state = hooks.after_swap(state, trade.side, trade.amount_in, current_block)
    return state, Trade(fill.side, fill.amount_in, fill.amount_out)


def builder_arbitrage(state: PoolState | ProtectedPool, external_price: float, current_block: int):
    """Like ``arbitrage_fill`` but returns (new state, builder profit)."""
    state, trade = arbitrage_fill(state, external_price, current_block)
    return state, 0.0 if trade is None else trade.profit_at(external_price)


def golden_section_max(f: Callable[[float], float], lo: float, hi: float, tol: float = SIZE_TOL):
    """Maximise a unimodal ``f`` on [lo, hi]. Returns (argmax, max)."""
    c = hi - INV_PHI * (hi - lo)
    d = lo + INV_PHI * (hi - lo)
    fc, fd = f(c), f(d)
    while hi - lo > tol:
        if fc >= fd:
            hi, d, fd = d, c, fc
            c = hi - INV_PHI * (hi - lo)
            fc = f(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + INV_PHI * (hi - lo)
            fd = f(d)
    return (c, fc) if fc >= fd else (d, fd)


def max_front_run(pool: PoolState, order: UserOrder) -> float:
    """Largest same-direction front-run that still lets the order clear min_out."""
    side = order.side.trade_side

    def user_out(front: float) -> float:
        after, _ = amm.swap_exact_in(pool, side, front)
        return amm.quote_out(after, side, order.amount_in)

    if user_out(0.0) <= order.min_out:
        return 0.0
    lo, hi = 0.0, pool.reserves_for(side)[0]
    while user_out(hi) >= order.min_out:
        lo, hi = hi, 2.0 * hi
    # Bisection keeps ``lo`` feasible.
    while hi - lo > SIZE_TOL * max(1.0, hi) * 1e-3:
        mid = 0.5 * (lo + hi)
        if user_out(mid) >= order.min_out:
            lo = mid
        else:
            hi = mid
    return lo


def sandwich_profit(pool: PoolState, order: UserOrder, front: float, external_price: float) -> float:
    side = order.side.trade_side
    pool, front_out = amm.swap_exact_in(pool, side, front)
    pool, _ = amm.swap_exact_in(pool, side, order.amount_in)
    return Trade(side, front, front_out).profit_at(external_price) + amm.arbitrage_profit(pool, external_price)


def _best_front_run(profit: Callable[[float], float], f_max: float) -> tuple[float, float]:
    # Coarse grid first so a non-concave profit cannot trap the golden search.
    grid = [f_max * i / (GRID_POINTS - 1) for i in range(GRID_POINTS)]
    values = [profit(f) for f in grid]
    i = max(range(GRID_POINTS), key=values.__getitem__)
    best = (grid[i], values[i])
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, GRID_POINTS - 1)]
    refined = golden_section_max(profit, lo, hi)
    return refined if refined[1] > best[1] else best


def sandwich_decision(pool: PoolState, order: UserOrder, external_price: float) -> BuilderDecision:
    side = order.side.trade_side
    exclude = amm.arbitrage_profit(pool, external_price)
    if order.min_out > amm.quote_out(pool, side, order.amount_in):
        return BuilderDecision(Action.EXCLUDE, 0.0, exclude)

    after_user, _ = amm.swap_exact_in(pool, side, order.amount_in)
    backrun = amm.arbitrage_profit(after_user, external_price)

    f_max = max_front_run(pool, order)
    front, sandwich = 0.0, backrun
    if f_max > 0:
        front, sandwich = _best_front_run(lambda f: sandwich_profit(pool, order, f, external_price), f_max)

    if sandwich > backrun and sandwich > exclude:
        return BuilderDecision(Action.SANDWICH, front, sandwich)
    if backrun > exclude:
        return BuilderDecision(Action.BACKRUN_ONLY, 0.0, backrun)
    return BuilderDecision(Action.EXCLUDE, 0.0, exclude)


def order_marginal_value(pool: PoolState, order: UserOrder, external_price: float) -> float:
    """Best builder profit with the order minus the pure-arbitrage profit."""
    decision = sandwich_decision(pool, order, external_price)
    return decision.profit - amm.arbitrage_profit(pool, external_price)


def order_marginal_values(pool: PoolState, order: UserOrder, prices: np.ndarray) -> np.ndarray:
    """``order_marginal_value`` for many external prices at once.

    The feasible front-run interval does not depend on the price, so one grid
    of post-order pool states serves every sample; each sample then gets its
    own golden-section refinement, run in lock step.
    """
    p = np.atleast_1d(np.asarray(prices, dtype=float))
    side = order.side.trade_side
    fee = pool.fee
    x, y = pool.reserve_a, pool.reserve_b
    exclude = kernels.arbitrage_profit(x, y, fee, p)
    if order.min_out > amm.quote_out(pool, side, order.amount_in):
        return np.zeros_like(p)

    def profit(front):
        # front: scalar or array broadcasting against p
        r_in, r_out = pool.reserves_for(side)
        front_out = kernels.swap_out(r_in, r_out, front, fee)
        r_in, r_out = r_in + front, r_out - front_out
        user_out = kernels.swap_out(r_in, r_out, order.amount_in, fee)
        r_in, r_out = r_in + order.amount_in, r_out - user_out
        if side is Side.BUY_A:
            front_value = front_out * p - front
            xa, yb = r_out, r_in
        else:
            front_value = front_out - front * p
            xa, yb = r_in, r_out
        return front_value + kernels.arbitrage_profit(xa, yb, fee, p)

    backrun = profit(0.0)
    sandwich = backrun
    f_max = max_front_run(pool, order)
    if f_max > 0:
        grid = np.linspace(0.0, f_max, GRID_POINTS)
        values = np.stack([profit(f) for f in grid])
        idx = values.argmax(axis=0)
        lo = grid[np.maximum(idx - 1, 0)]
        hi = grid[np.minimum(idx + 1, GRID_POINTS - 1)]
        c = hi - INV_PHI * (hi - lo)
        d = lo + INV_PHI * (hi - lo)
        fc, fd = profit(c), profit(d)
        steps = math.ceil(math.log(SIZE_TOL / (2.0 * f_max / (GRID_POINTS - 1))) / math.log(INV_PHI))
        for _ in range(max(steps, 0)):
            left = fc >= fd
            lo, hi = np.where(left, lo, c), np.where(left, d, hi)
            c, d = np.where(left, hi - INV_PHI * (hi - lo), d), np.where(left, c, lo + INV_PHI * (hi - lo))
            fresh = profit(np.where(left, c, d))
            fc, fd = np.where(left, fresh, fd), np.where(left, fc, fresh)
        sandwich = np.maximum(values.max(axis=0), np.maximum(fc, fd))

    best = np.maximum(np.maximum(exclude, backrun), sandwich)
    return best - exclude
