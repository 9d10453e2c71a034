"""Long-only daily portfolio simulation and performance metrics.

Transition rules per action, executed at the NEXT trading day's close p:

    BUY:  dh = floor(util * cash / p); shares += dh; cash -= (1 + fee) * dh * p
    SELL: cash += (1 - fee) * shares * p; shares = 0
    HOLD: unchanged

``util`` (capital utilization) keeps a cash buffer on buys; with
util * (1 + fee) <= 1 cash can never go negative. Portfolio value is
marked at each day's close; day 0 is all cash. A decision on the final
day of the window has no execution day: it is recorded in the report as
``unexecuted_final_decision`` and otherwise ignored.

Metrics over the value series V0..VT (T = trading days simulated):

    ARR = (VT / V0) ** (252 / T) - 1
    SR  = mean(daily returns) / sample std (ddof=1); 0 when the std is 0
    MDD = max over t >= 1 of (max(V1..Vt) - Vt) / max(V1..Vt)

SR is deliberately not annualized.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from datetime import date as Date
from typing import Optional

from .env import DecisionAction
from .marketdata import BarSeries


class BacktestError(Exception):
    pass


class NonPositivePrice(BacktestError):
    pass


class LengthMismatch(BacktestError):
    pass


class MissingExecutionDay(BacktestError):
    pass


class DegenerateSeries(BacktestError):
    pass


TRADING_DAYS_PER_YEAR = 252


@dataclass(frozen=True)
class BacktestConfig:
    fee_rate: float = 0.001           # proportional transaction fee on buys and sells
    capital_utilization: float = 0.9  # fraction of cash deployed per BUY
    initial_cash: float = 10_000.0
    price_field: str = "close"        # or "adj_close"

    def __post_init__(self):
        if not 0.0 <= self.fee_rate < 1.0:
            raise ValueError("fee_rate must lie in [0, 1)")
        if not 0.0 < self.capital_utilization <= 1.0:
            raise ValueError("capital_utilization must lie in (0, 1]")
        if self.capital_utilization * (1.0 + self.fee_rate) > 1.0:
            raise ValueError("capital_utilization * (1 + fee_rate) must be <= 1")
        if self.initial_cash <= 0.0:
            raise ValueError("initial_cash must be positive")
        if self.price_field not in ("close", "adj_close"):
            raise ValueError("price_field must be 'close' or 'adj_close'")


@dataclass(frozen=True)
class PortfolioState:
    shares: int
    cash: float

    def __post_init__(self):
        if self.shares < 0:
            raise ValueError("shares must be non-negative (long-only)")
        if self.cash < 0.0:
            raise ValueError("cash must be non-negative")

    def value(self, price: float) -> float:
        return self.cash + self.shares * price


@dataclass(frozen=True)
class Trade:
    date: Date
    action: DecisionAction
    shares: int
    price: float
    fee: float


@dataclass(frozen=True)
class BacktestReport:
    symbol: str
    start: Date
    end: Date
    trading_days: int                      # T; len(values) == T + 1
    values: tuple[float, ...]
    trades: tuple[Trade, ...]
    arr: float
    sharpe: float
    mdd: float
    unexecuted_final_decision: Optional[DecisionAction] = None

    def to_dict(self) -> dict:
        return {
            "symbol": self.symbol,
            "start": self.start.isoformat(),
            "end": self.end.isoformat(),
            "T": self.trading_days,
            "values": list(self.values),
            "trades": [
                {
                    "date": t.date.isoformat(),
                    "action": t.action.value,
                    "shares": t.shares,
                    "price": t.price,
                    "fee": t.fee,
                }
                for t in self.trades
            ],
            "metrics": {"arr": self.arr, "sr": self.sharpe, "mdd": self.mdd},
            "unexecuted_final_decision": (
                self.unexecuted_final_decision.value
                if self.unexecuted_final_decision
                else None
            ),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


def step_portfolio(
    state: PortfolioState,
    action: DecisionAction,
    price: float,
    cfg: BacktestConfig,
) -> PortfolioState:
    """Apply one action at the given execution price.

    A BUY that affords zero shares is a no-op; a SELL with no position is a
    no-op (full liquidation, never short).
    """
    if price <= 0.0:
        raise NonPositivePrice(str(price))
    if action is DecisionAction.HOLD:
        return state
    if action is DecisionAction.BUY:
        dh = math.floor(cfg.capital_utilization * state.cash / price)
        # Guard against float rounding pushing the floor one share too high.
        while dh > 0 and (1.0 + cfg.fee_rate) * dh * price > state.cash:
            dh -= 1
        if dh == 0:
            return state
        return PortfolioState(
            shares=state.shares + dh,
            cash=state.cash - (1.0 + cfg.fee_rate) * dh * price,
        )
    if state.shares == 0:
        return state
    return PortfolioState(
        shares=0,
        cash=state.cash + (1.0 - cfg.fee_rate) * state.shares * price,
    )


def arr(values: list[float]) -> float:
    """Annualized rate of return of a value series V0..VT."""
    if len(values) < 2:
        raise DegenerateSeries("ARR needs at least two values")
    if values[0] <= 0.0:
        raise ValueError("initial value must be positive")
    periods = len(values) - 1
    return (values[-1] / values[0]) ** (TRADING_DAYS_PER_YEAR / periods) - 1.0


def sharpe(values: list[float]) -> float:
    """Mean daily return over its sample standard deviation; 0 when flat."""
    if len(values) < 3:
        raise DegenerateSeries("Sharpe needs at least two daily returns")
    returns = [
        (values[i] - values[i - 1]) / values[i - 1] for i in range(1, len(values))
    ]
    n = len(returns)
    mean = sum(returns) / n
    var = sum((r - mean) ** 2 for r in returns) / (n - 1)
    if var == 0.0:
        return 0.0
    return mean / math.sqrt(var)


def mdd(values: list[float]) -> float:
    """Largest peak-to-trough decline; peaks tracked from the first post-start value."""
    if len(values) < 2:
        raise DegenerateSeries("MDD needs at least two values")
    if min(values) <= 0.0:
        raise ValueError("values must be positive")
    peak = values[1]
    worst = 0.0
    for v in values[1:]:
        peak = max(peak, v)
        worst = max(worst, (peak - v) / peak)
    return worst


def run_backtest(
    signals: list[DecisionAction],
    prices: BarSeries,
    cfg: BacktestConfig,
) -> BacktestReport:
    """Simulate a per-day signal sequence over a bar series.

    ``signals[t]`` is the decision made on trading day t, executed at the
    close of day t+1. Accepts either one signal per day (the final one is
    reported as unexecuted) or one per day except the last.
    """
    n = len(prices)
    if n < 2:
        raise DegenerateSeries("need at least two trading days")
    if len(signals) > n:
        raise MissingExecutionDay(
            f"{len(signals)} signals but only {n} trading days; "
            "the final decisions have no execution day"
        )
    if len(signals) < n - 1:
        raise LengthMismatch(f"expected {n - 1} or {n} signals, got {len(signals)}")
    unexecuted: Optional[DecisionAction] = None
    if len(signals) == n:
        unexecuted = signals[-1]
        signals = signals[:-1]

    bars = prices.bars
    price_of = (lambda b: b.close) if cfg.price_field == "close" else (lambda b: b.adj_close)
    state = PortfolioState(shares=0, cash=cfg.initial_cash)
    values = [state.value(price_of(bars[0]))]
    trades: list[Trade] = []
    for t, action in enumerate(signals):
        exec_bar = bars[t + 1]
        exec_price = price_of(exec_bar)
        new_state = step_portfolio(state, action, exec_price, cfg)
        traded = abs(new_state.shares - state.shares)
        if traded:
            trades.append(
                Trade(
                    date=exec_bar.date,
                    action=action,
                    shares=traded,
                    price=exec_price,
                    fee=cfg.fee_rate * traded * exec_price,
                )
            )
        state = new_state
        values.append(state.value(exec_price))

    return BacktestReport(
        symbol=prices.symbol,
        start=bars[0].date,
        end=bars[len(values) - 1].date,
        trading_days=len(values) - 1,
        values=tuple(values),
        trades=tuple(trades),
        arr=arr(values),
        sharpe=sharpe(values),
        mdd=mdd(values),
        unexecuted_final_decision=unexecuted,
    )


def equity_curve_svg(values: list[float], width: int = 640, height: int = 320) -> str:
    """Minimal deterministic SVG polyline of the value series."""
    if len(values) < 2:
        raise DegenerateSeries("need at least two values to plot")
    lo, hi = min(values), max(values)
    span = hi - lo or 1.0
    margin = 10.0
    inner_w = width - 2 * margin
    inner_h = height - 2 * margin
    points = []
    for i, v in enumerate(values):
        x = margin + inner_w * i / (len(values) - 1)
        y = margin + inner_h * (1.0 - (v - lo) / span)
        points.append(f"{x:.2f},{y:.2f}")
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">\n'
        f'  <rect width="{width}" height="{height}" fill="white"/>\n'
        f'  <polyline fill="none" stroke="#1f6fb2" stroke-width="1.5" '
        f'points="{" ".join(points)}"/>\n'
        f"</svg>\n"
    )
