import math
from dataclasses import replace

import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from lvrsim import amm, hooks
from lvrsim.amm import Side
from lvrsim.errors import ConfigError, ProtocolError, SwapRejected, WithdrawalBlocked
from lvrsim.hooks import HedgerState, RebateSchedule, VaultState


def full(beta1=1.0, z=10, **kw):
    return hooks.protect(amm.new_pool(100, 100), RebateSchedule.linear(beta1, z), **kw)


def cycle(pp, side, amount, block):
    pp, fill = hooks.before_swap(pp, side, amount, block)
    return hooks.after_swap(pp, side, amount, block), fill


class TestRebateSchedule:
    def test_gap_at_horizon_is_zero(self):
        s = RebateSchedule.linear(0.75, 10)
        assert hooks.rebate(s, 10) == 0.0
        assert hooks.rebate(s, 15) == 0.0

    def test_first_gap(self):
        assert hooks.rebate(RebateSchedule.linear(0.75, 10), 1) == 0.75

    def test_nonpositive_gap_rejected(self):
        with pytest.raises(ValueError):
            hooks.rebate(RebateSchedule.linear(0.75, 10), 0)

    def test_zero_rebate_collapses(self):
        s = RebateSchedule.linear(0.0, 10)
        assert s.horizon_z == 1 and hooks.rebate(s, 1) == 0.0

    @pytest.mark.parametrize("betas", [(0.5, 0.5, 0.0), (0.5, 0.2, 0.1), (1.2, 0.0), (0.5,)])
    def test_invalid_schedules(self, betas):
        with pytest.raises(ConfigError):
            RebateSchedule(len(betas), betas)

    @given(st.floats(1e-6, 1.0), st.integers(2, 500))
    def test_strictly_decreasing_to_zero(self, beta1, z):
        s = RebateSchedule.linear(beta1, z)
        values = [hooks.rebate(s, g) for g in range(1, z + 1)]
        assert values[-1] == 0.0
        assert all(a > b for a, b in zip(values, values[1:]))


class TestHedger:
    def test_deposit(self):
        h = hooks.hedger_deposit(HedgerState(), 10, 0, "alice")
        assert (h.hedge_available_a, h.hedge_available_b) == (10, 0)
        assert h.owner == "alice"

    def test_zero_deposit_only_sets_owner(self):
        h = HedgerState(1, 2, 3, 4, "bob")
        assert hooks.hedger_deposit(h, 0, 0, "carol") == replace(h, owner="carol")

    def test_deposits_add(self):
        a = hooks.hedger_deposit(hooks.hedger_deposit(HedgerState(), 1, 2, "x"), 3, 4, "x")
        b = hooks.hedger_deposit(HedgerState(), 4, 6, "x")
        assert a == b

    def test_withdraw_everything(self):
        h = HedgerState(10, 6, 10, 6)
        h = hooks.hedger_withdraw(h, 10, 6)
        assert (h.hedge_available_a, h.hedge_available_b) == (0, 0)

    def test_withdraw_beyond_budget(self):
        with pytest.raises(WithdrawalBlocked):
            hooks.hedger_withdraw(HedgerState(10, 6, 10, 6), 11, 0)

    def test_withdraw_nothing(self):
        h = HedgerState(10, 6, 10, 6)
        assert hooks.hedger_withdraw(h, 0, 0) == h

    def test_drain(self):
        h, (a, b) = hooks.hedger_drain(HedgerState(3, 4, 9, 9, "o"))
        assert (a, b) == (3, 4)
        assert h == HedgerState(owner="o")

    def test_drain_empty(self):
        assert hooks.hedger_drain(HedgerState()) == (HedgerState(), (0.0, 0.0))

    def test_drain_feeds_pool(self):
        pp = full()
        pp = replace(pp, hedger=HedgerState(3, 4))
        assert hooks.first_swap_preamble(pp).pool == amm.PoolState(103, 104)


class TestVault:
    def test_empty_vault_identity(self):
        v, pool = VaultState(pct_to_re_add=0.5), amm.new_pool(3, 7)
        assert hooks.vault_re_add(v, pool) == (v, pool)

    def test_zero_pct_identity(self):
        v, pool = VaultState(10, 10), amm.new_pool(3, 7)
        assert hooks.vault_re_add(v, pool) == (v, pool)

    def test_full_re_add_at_pool_price(self):
        v = VaultState(75, 0, pct_to_re_add=1.0)
        v, pool = hooks.vault_re_add(v, amm.new_pool(25, 100))
        assert (pool.reserve_a, pool.reserve_b) == pytest.approx((62.5, 250), rel=1e-15)
        assert amm.spot_price(pool) == pytest.approx(4.0, rel=1e-15)
        assert (v.balance_a, v.balance_b) == (0, 0)

    def test_raw_re_add(self):
        v = VaultState(75, 0, pct_to_re_add=1.0, style="raw")
        v, pool = hooks.vault_re_add(v, amm.new_pool(25, 100))
        assert pool == amm.PoolState(100, 100) and v.balance_a == 0

    def test_tranche_never_exceeds_balance(self):
        v = VaultState(1.0, 0.5, pct_to_re_add=0.01, min_re_add_a=5.0, min_re_add_b=0.1, style="raw")
        v, pool = hooks.vault_re_add(v, amm.new_pool(10, 10))
        assert v.balance_a == 0.0 and v.balance_b == pytest.approx(0.4)
        assert pool.reserve_a == 11.0

    @pytest.mark.parametrize("pool,price,vault,after", [
        ((100, 100), 4.0, (75, 0), (25, 100)),
        ((25, 100), 4.0, (0, 0), (25, 100)),
        ((100, 100), 0.25, (0, 75), (100, 25)),
    ])
    def test_rebalance(self, pool, price, vault, after):
        v, p = hooks.vault_rebalance(VaultState(), amm.PoolState(*pool), price)
        assert (v.balance_a, v.balance_b) == pytest.approx(vault, rel=1e-12, abs=1e-12)
        assert (p.reserve_a, p.reserve_b) == pytest.approx(after, rel=1e-12)

    @given(st.floats(0.1, 1e3), st.floats(0.1, 1e3), st.floats(1e-2, 10.0), st.floats(1e-2, 10.0),
           st.floats(0.0, 0.5), st.sampled_from(["raw", "pool_price"]))
    def test_finite_drainage(self, bal_a, bal_b, min_a, min_b, pct, style):
        v = VaultState(bal_a, bal_b, pct, min_a, min_b, style)
        pool = amm.new_pool(100, 100)
        bound = max(math.ceil(bal_a / min_a), math.ceil(bal_b / min_b))
        calls = 0
        while v.balance_a > 0 or v.balance_b > 0:
            v, pool = hooks.vault_re_add(v, pool)
            calls += 1
            assert calls <= bound
            assert v.balance_a >= 0 and v.balance_b >= 0

    def test_invalid_vault(self):
        with pytest.raises(ConfigError):
            VaultState(pct_to_re_add=1.5)


class TestFirstSwap:
    def test_full_rebate_executes_nothing(self):
        pp = full(1.0)
        pp, fill = hooks.before_swap(pp, Side.BUY_A, 100.0, 1)
        assert fill.true_price == pytest.approx(4.0, rel=1e-15)
        assert (fill.amount_in, fill.amount_out) == (0.0, 0.0)
        assert pp.pool == amm.PoolState(100, 100)
        assert pp.pending_true_price == fill.true_price

    def test_full_rebate_cycle(self):
        pp, _ = cycle(full(1.0), Side.BUY_A, 100.0, 1)
        assert (pp.pool.reserve_a, pp.pool.reserve_b) == pytest.approx((25, 100), abs=1e-9)
        assert pp.vault.balance_a == pytest.approx(75, abs=1e-9)
        assert amm.spot_price(pp.pool) == pytest.approx(4.0, rel=1e-9)
        assert pp.pending_true_price is None and pp.b_previous == 1

    @pytest.mark.parametrize("discount", ["proportional", "input"])
    def test_zero_rebate_is_plain_swap(self, discount):
        pp, fill = cycle(full(0.0, discount=discount), Side.BUY_A, 100.0, 1)
        plain, out = amm.swap_exact_in(amm.new_pool(100, 100), Side.BUY_A, 100.0)
        assert pp.pool == plain and fill.amount_out == out
        assert pp.pool == amm.PoolState(50, 200)
        assert pp.vault.balance_a == 0 and pp.vault.balance_b == 0

    def test_partial_proportional(self):
        pp, fill = cycle(full(0.75), Side.BUY_A, 100.0, 1)
        assert (fill.amount_in, fill.amount_out) == pytest.approx((25, 12.5), rel=1e-15)
        # pool after execution (87.5, 125), pushed to price 4 by removing A
        assert (pp.pool.reserve_a, pp.pool.reserve_b) == pytest.approx((31.25, 125), rel=1e-12)
        assert pp.vault.balance_a == pytest.approx(56.25, rel=1e-12)

    def test_partial_input_scaled(self):
        pp, fill = cycle(full(0.75, discount="input"), Side.BUY_A, 100.0, 1)
        assert fill.amount_in == 25
        assert fill.amount_out == pytest.approx(100 - 10000 / 125, rel=1e-12)
        assert amm.spot_price(pp.pool) == pytest.approx(4.0, rel=1e-12)

    def test_gap_uses_schedule(self):
        pp, _ = cycle(full(0.75, z=4), Side.BUY_A, 10.0, 1)
        pp, fill = hooks.before_swap(pp, Side.BUY_B, 1.0, 3)  # gap 2: beta = 0.5 * 0.75
        assert fill.amount_in == pytest.approx(0.5, rel=1e-15)

    def test_after_without_before(self):
        with pytest.raises(ProtocolError):
            hooks.after_swap(full(), Side.BUY_A, 1.0, 1)

    def test_mismatched_after(self):
        pp, _ = hooks.before_swap(full(), Side.BUY_A, 1.0, 1)
        with pytest.raises(ProtocolError):
            hooks.after_swap(pp, Side.BUY_B, 1.0, 1)

    def test_before_twice(self):
        pp, _ = hooks.before_swap(full(), Side.BUY_A, 1.0, 1)
        with pytest.raises(ProtocolError):
            hooks.before_swap(pp, Side.BUY_A, 1.0, 1)

    def test_block_going_backwards(self):
        pp, _ = cycle(full(), Side.BUY_A, 1.0, 5)
        with pytest.raises(ProtocolError):
            hooks.before_swap(pp, Side.BUY_A, 1.0, 4)

    @settings(max_examples=200)
    @given(st.floats(1.0, 1e4), st.floats(1.0, 1e4), st.floats(0.01, 100.0), st.one_of(st.just(0.0), st.floats(1e-6, 1.0)),
           st.sampled_from(["proportional", "input"]))
    def test_price_equality_and_rebate_effectiveness(self, a, b, p, beta, discount):
        pool = amm.new_pool(a, b)
        trade = amm.arbitrage_trade(pool, p)
        assume(trade is not None)
        schedule = RebateSchedule.linear(beta, 10) if beta > 0 else RebateSchedule.linear(0.0, 1)
        pp = hooks.protect(pool, schedule, discount=discount)
        pp, fill = cycle(pp, trade.side, trade.amount_in, 1)
        assert amm.spot_price(pp.pool) == pytest.approx(fill.true_price, rel=1e-9)
        full_profit = trade.profit_at(p)
        got = amm.Trade(fill.side, fill.amount_in, fill.amount_out).profit_at(p)
        slack = 1e-9 * max(1.0, full_profit)
        assert (1 - beta) * full_profit - slack <= got <= full_profit + slack


class TestSameBlock:
    def primed(self, budget_a, budget_b=0.0):
        pp, _ = cycle(full(0.0), Side.BUY_A, 1e-9, 1)
        return replace(pp, hedger=HedgerState(budget_a, budget_b, budget_a, budget_b))

    def test_attested_swap_executes(self):
        pp = self.primed(10.0)
        pay = pp.pool.reserve_b * 5 / (pp.pool.reserve_a - 5)  # buys exactly 5 A
        pp, fill = cycle(pp, Side.BUY_A, pay, 1)
        assert fill.amount_out == pytest.approx(5.0, rel=1e-12)
        assert pp.hedger.hedge_available_a == pytest.approx(5.0, rel=1e-12)
        assert pp.hedger.hedge_available_b == pytest.approx(pay, rel=1e-15)

    def test_unattested_swap_rejected(self):
        pp = self.primed(3.0)
        pay = pp.pool.reserve_b * 5 / (pp.pool.reserve_a - 5)
        with pytest.raises(SwapRejected):
            hooks.before_swap(pp, Side.BUY_A, pay, 1)

    def test_zero_output_never_attested(self):
        with pytest.raises(SwapRejected):
            hooks.before_swap(self.primed(10.0), Side.BUY_A, 0.0, 1)

    def test_budget_ledger(self):
        pp = self.primed(10.0)
        pp = replace(pp, pending_fill=hooks.SwapFill(Side.BUY_A, 6.0, 5.0, 6.0, False))
        pp = hooks.after_swap(pp, Side.BUY_A, 6.0, 1)
        assert (pp.hedger.hedge_available_a, pp.hedger.hedge_available_b) == (5.0, 6.0)


swap_op = st.tuples(st.sampled_from(list(Side)), st.floats(1e-6, 50.0), st.integers(0, 2))


class TestSequences:
    @settings(max_examples=150)
    @given(st.lists(swap_op, min_size=1, max_size=25), st.one_of(st.just(0.0), st.floats(1e-6, 1.0)), st.floats(0.0, 20.0),
           st.floats(0.0, 20.0), st.sampled_from(["raw", "pool_price"]))
    def test_conservation_and_budget_safety(self, ops, beta, dep_a, dep_b, style):
        schedule = RebateSchedule.linear(beta, 5) if beta > 0 else RebateSchedule.linear(0.0, 1)
        vault = VaultState(pct_to_re_add=0.2, min_re_add_a=0.01, style=style)
        pp = hooks.protect(amm.new_pool(100, 100), schedule, vault)
        pp = replace(pp, hedger=hooks.hedger_deposit(pp.hedger, dep_a, dep_b, "hedger"))
        # external counterparties: traders and the hedger's depositor
        ext_a, ext_b = -dep_a, -dep_b
        block = 0
        for side, amount, advance in ops:
            block += advance
            try:
                pp, fill = hooks.before_swap(pp, side, amount, block)
            except SwapRejected:
                continue
            pp = hooks.after_swap(pp, side, amount, block)
            if side is Side.BUY_A:
                ext_a, ext_b = ext_a + fill.amount_out, ext_b - fill.amount_in
            else:
                ext_a, ext_b = ext_a - fill.amount_in, ext_b + fill.amount_out
            h = pp.hedger
            assert h.hedge_available_a >= 0 and h.hedge_available_b >= 0
        tot_a, tot_b = hooks.token_totals(pp)
        assert abs(tot_a + ext_a - pp.converted_a - 100) < 1e-9 * 100
        assert abs(tot_b + ext_b - pp.converted_b - 100) < 1e-9 * 100
