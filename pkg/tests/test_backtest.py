from __future__ import annotations

import math
import random

import pytest

import oracles
from helpers import make_series
from quantgym.backtest import (
    BacktestConfig,
    DegenerateSeries,
    LengthMismatch,
    MissingExecutionDay,
    NonPositivePrice,
    PortfolioState,
    arr,
    equity_curve_svg,
    mdd,
    run_backtest,
    sharpe,
    step_portfolio,
)
from quantgym.env import DecisionAction

CFG = BacktestConfig(fee_rate=0.001, capital_utilization=0.9, initial_cash=10_000.0)


def test_buy_hand_example():
    cfg = BacktestConfig(fee_rate=0.001, capital_utilization=0.9, initial_cash=1000.0)
    state = PortfolioState(shares=0, cash=1000.0)
    after = step_portfolio(state, DecisionAction.BUY, 10.0, cfg)
    assert after.shares == 90
    assert math.isclose(after.cash, 99.10, rel_tol=0, abs_tol=1e-9)


def test_sell_hand_example():
    cfg = BacktestConfig(fee_rate=0.001, capital_utilization=0.9, initial_cash=1000.0)
    state = PortfolioState(shares=90, cash=99.10)
    after = step_portfolio(state, DecisionAction.SELL, 10.0, cfg)
    assert after.shares == 0
    assert math.isclose(after.cash, 998.20, rel_tol=0, abs_tol=1e-9)


def test_hold_is_identity():
    state = PortfolioState(shares=7, cash=123.45)
    assert step_portfolio(state, DecisionAction.HOLD, 55.5, CFG) == state


def test_buy_with_zero_affordable_shares_is_noop():
    state = PortfolioState(shares=0, cash=5.0)
    assert step_portfolio(state, DecisionAction.BUY, 10.0, CFG) == state


def test_sell_with_no_position_is_noop():
    state = PortfolioState(shares=0, cash=100.0)
    assert step_portfolio(state, DecisionAction.SELL, 10.0, CFG) == state


def test_non_positive_price_rejected():
    state = PortfolioState(shares=0, cash=100.0)
    with pytest.raises(NonPositivePrice):
        step_portfolio(state, DecisionAction.BUY, 0.0, CFG)
    with pytest.raises(NonPositivePrice):
        step_portfolio(state, DecisionAction.SELL, -5.0, CFG)


def test_fee_conservation_randomized():
    rng = random.Random(53)
    for _ in range(2000):
        fee_rate = rng.uniform(0.0, 0.01)
        util = rng.uniform(0.1, 1.0 / (1.0 + fee_rate))
        cfg = BacktestConfig(fee_rate=fee_rate, capital_utilization=util,
                             initial_cash=1.0)
        state = PortfolioState(shares=rng.randrange(0, 500),
                               cash=rng.uniform(0.0, 50_000.0))
        price = rng.uniform(0.5, 900.0)
        action = rng.choice(list(DecisionAction))
        after = step_portfolio(state, action, price, cfg)
        notional = abs(after.shares - state.shares) * price
        change = after.value(price) - state.value(price)
        expected = -cfg.fee_rate * notional
        assert math.isclose(change, expected, rel_tol=1e-9, abs_tol=1e-9)
        assert after.cash >= 0.0
        assert after.shares >= 0


def test_long_only_random_action_sequences():
    rng = random.Random(59)
    cfg = CFG
    for _ in range(50):
        state = PortfolioState(shares=0, cash=cfg.initial_cash)
        for _ in range(40):
            price = rng.uniform(1.0, 300.0)
            state = step_portfolio(state, rng.choice(list(DecisionAction)), price, cfg)
            assert state.shares >= 0
            assert state.cash >= 0.0


def test_arr_examples():
    assert arr([100.0, 100.0]) == 0.0
    values = [100.0] * 126 + [110.0]
    assert len(values) - 1 == 126
    assert math.isclose(arr(values), 0.21, rel_tol=0, abs_tol=1e-12)
    values = [100.0] * 252 + [50.0]
    assert math.isclose(arr(values), -0.5, rel_tol=0, abs_tol=1e-12)
    with pytest.raises(DegenerateSeries):
        arr([100.0])


def test_sharpe_examples():
    assert sharpe([100.0, 100.0, 100.0]) == 0.0
    assert sharpe([100.0, 110.0, 99.0]) == 0.0  # returns +0.1 / -0.1, mean 0
    geometric = [100.0 * 2.0 ** i for i in range(10)]  # every return exactly 1.0
    assert sharpe(geometric) == 0.0  # zero variance branch
    with pytest.raises(DegenerateSeries):
        sharpe([100.0, 101.0])


def test_mdd_examples():
    assert mdd([100.0, 101.0, 101.0, 150.0]) == 0.0
    assert mdd([100.0, 120.0, 90.0, 130.0]) == 0.25
    assert mdd([100.0] * 10) == 0.0


def test_metric_oracles_randomized():
    rng = random.Random(61)
    for _ in range(100):
        values = [rng.uniform(50.0, 150.0) for _ in range(31)]
        assert math.isclose(arr(values), oracles.arr_ref(values),
                            rel_tol=1e-12, abs_tol=1e-12)
        assert math.isclose(sharpe(values), oracles.sharpe_ref(values),
                            rel_tol=1e-12, abs_tol=1e-12)
        assert math.isclose(mdd(values), oracles.mdd_ref(values),
                            rel_tol=1e-12, abs_tol=1e-12)


def test_metrics_scale_invariant_in_initial_value():
    rng = random.Random(67)
    values = [rng.uniform(50.0, 150.0) for _ in range(31)]
    for scale in (2.0, 0.5, 1024.0):
        scaled = [v * scale for v in values]
        assert arr(scaled) == arr(values)
        assert sharpe(scaled) == sharpe(values)
        assert mdd(scaled) == mdd(values)


def test_all_hold_fixed_point():
    prices = make_series([100.0, 102.0, 99.0, 104.0, 101.0, 103.0])
    report = run_backtest([DecisionAction.HOLD] * 6, prices, CFG)
    assert all(v == CFG.initial_cash for v in report.values)
    assert report.arr == 0.0
    assert report.sharpe == 0.0
    assert report.mdd == 0.0
    assert report.trades == ()
    assert report.unexecuted_final_decision is DecisionAction.HOLD


def test_buy_then_sell_flat_prices_loses_fees_only():
    cfg = BacktestConfig(fee_rate=0.001, capital_utilization=0.9, initial_cash=1000.0)
    prices = make_series([10.0, 10.0, 10.0])
    signals = [DecisionAction.BUY, DecisionAction.SELL]
    report = run_backtest(signals, prices, cfg)
    # composed hand arithmetic: buy 90 @ 10 (fee 0.9), sell 90 @ 10 (fee 0.9)
    assert math.isclose(report.values[-1], 998.20, rel_tol=0, abs_tol=1e-9)
    assert [t.action for t in report.trades] == [DecisionAction.BUY, DecisionAction.SELL]
    assert [t.shares for t in report.trades] == [90, 90]
    assert math.isclose(sum(t.fee for t in report.trades), 1.80, rel_tol=0, abs_tol=1e-9)


def test_signal_length_contract():
    prices = make_series([10.0, 10.0, 10.0, 10.0])
    with pytest.raises(MissingExecutionDay):
        run_backtest([DecisionAction.HOLD] * 5, prices, CFG)
    with pytest.raises(LengthMismatch):
        run_backtest([DecisionAction.HOLD] * 2, prices, CFG)
    # n - 1 signals: all execute
    report = run_backtest([DecisionAction.HOLD] * 3, prices, CFG)
    assert report.unexecuted_final_decision is None
    assert report.trading_days == 3
    assert len(report.values) == 4


def test_report_metrics_recomputable():
    rng = random.Random(71)
    closes = [100.0]
    for _ in range(30):
        closes.append(max(closes[-1] * (1 + rng.uniform(-0.05, 0.05)), 1.0))
    prices = make_series(closes)
    signals = [rng.choice(list(DecisionAction)) for _ in range(len(closes) - 1)]
    report = run_backtest(signals, prices, CFG)
    values = list(report.values)
    assert report.arr == arr(values)
    assert report.sharpe == sharpe(values)
    assert report.mdd == mdd(values)
    assert len(values) == report.trading_days + 1


def test_report_json_schema():
    prices = make_series([10.0, 11.0, 12.0, 11.5])
    report = run_backtest(
        [DecisionAction.BUY, DecisionAction.HOLD, DecisionAction.SELL], prices, CFG
    )
    payload = report.to_dict()
    assert set(payload) == {
        "symbol", "start", "end", "T", "values", "trades", "metrics",
        "unexecuted_final_decision",
    }
    assert set(payload["metrics"]) == {"arr", "sr", "mdd"}
    assert payload["T"] == 3
    for trade in payload["trades"]:
        assert set(trade) == {"date", "action", "shares", "price", "fee"}


def test_equity_curve_svg_deterministic():
    values = [100.0, 110.0, 105.0, 120.0]
    one = equity_curve_svg(values)
    two = equity_curve_svg(values)
    assert one == two
    assert one.startswith("<svg ")
    assert "polyline" in one


def test_config_validation():
    with pytest.raises(ValueError):
        BacktestConfig(fee_rate=1.0)
    with pytest.raises(ValueError):
        BacktestConfig(capital_utilization=0.0)
    with pytest.raises(ValueError):
        BacktestConfig(capital_utilization=1.0, fee_rate=0.001)  # util*(1+fee) > 1
    with pytest.raises(ValueError):
        BacktestConfig(initial_cash=0.0)
    with pytest.raises(ValueError):
        BacktestConfig(price_field="vwap")


def test_adj_close_price_field():
    from quantgym.marketdata import Bar, BarSeries
    from datetime import date as Date, timedelta

    bars = []
    day = Date(2025, 1, 6)
    closes = [10.0, 10.0, 10.0]
    adjusted = [9.0, 9.0, 9.0]
    for close, adj in zip(closes, adjusted):
        bars.append(Bar(date=day, open=close, high=close + 0.5, low=adj - 0.5,
                        close=close, adj_close=adj, volume=1000))
        day += timedelta(days=1)
    series = BarSeries(symbol="ADJ", bars=tuple(bars))
    signals = [DecisionAction.BUY, DecisionAction.SELL]
    cfg_adj = BacktestConfig(initial_cash=1000.0, price_field="adj_close")
    report = run_backtest(signals, series, cfg_adj)
    # trades execute at 9.0, not 10.0
    assert all(t.price == 9.0 for t in report.trades)
    assert report.trades[0].shares == 100  # floor(0.9 * 1000 / 9)
