"""Array versions of the pool primitives, elementwise over paths or samples.

Expressions mirror the scalar code in ``amm`` operation for operation, so the
two agree bit for bit.
"""

from __future__ import annotations

import numpy as np


def swap_out(r_in, r_out, amount_in, fee):
    eff = amount_in * (1.0 - fee)
    return r_out * eff / (r_in + eff)


def swap_reserves(r_in, r_out, amount_in, fee):
    """(new r_in, new r_out) after an exact-input swap."""
    eff = amount_in * (1.0 - fee)
    return r_in + amount_in, r_out * r_in / (r_in + eff)


def arbitrage(x, y, fee, p):
    """Optimal arbitrage legs against price ``p``.

    Returns ``(pay_b, out_a, pay_a, out_b, profit)``; at most one direction is
    non-zero per element, and all legs are zero where the best profit is not
    positive.
    """
    gamma = 1.0 - fee
    k = x * y
    pay_b = (np.sqrt(k * gamma * p) - y) / gamma
    pay_a = (np.sqrt(k * gamma / p) - x) / gamma
    pay_b = np.where(pay_b > 0, pay_b, 0.0)
    pay_a = np.where(pay_b > 0, 0.0, np.where(pay_a > 0, pay_a, 0.0))
    out_a = swap_out(y, x, pay_b, fee)
    out_b = swap_out(x, y, pay_a, fee)
    profit = np.where(pay_b > 0, out_a * p - pay_b, out_b - pay_a * p)
    trade = profit > 0
    return (
        np.where(trade, pay_b, 0.0),
        np.where(trade, out_a, 0.0),
        np.where(trade, pay_a, 0.0),
        np.where(trade, out_b, 0.0),
        np.where(trade, profit, 0.0),
    )


def apply_arbitrage(x, y, fee, pay_b, pay_a):
    """Reserves after executing the legs returned by ``arbitrage``."""
    yb, xb = swap_reserves(y, x, pay_b, fee)
    xa, ya = swap_reserves(x, y, pay_a, fee)
    x_new = np.where(pay_b > 0, xb, np.where(pay_a > 0, xa, x))
    y_new = np.where(pay_b > 0, yb, np.where(pay_a > 0, ya, y))
    return x_new, y_new


def arbitrage_profit(x, y, fee, p):
    return arbitrage(x, y, fee, p)[4]
