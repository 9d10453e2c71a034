"""Rule-based signal generators: buy-and-hold, MACD crossover, z-score
mean reversion.

All generators emit one decision per trading day using only data up to and
including that day; execution at the next day's close is the backtester's
concern. Warm-up days emit HOLD.
"""

from __future__ import annotations

from dataclasses import dataclass

from .backtest import BacktestError
from .env import DecisionAction
from .indicators import IndicatorKind, IndicatorTag, compute_indicator
from .marketdata import BarSeries


class BaselineError(BacktestError):
    pass


class EmptySeries(BaselineError):
    pass


class InsufficientHistory(BaselineError):
    pass


MACD_PARAMS = (12, 26, 9)
ZMR_LOOKBACK = 20
ZMR_ENTRY_THRESHOLD = 1.0


def buy_and_hold_signals(prices: BarSeries) -> list[DecisionAction]:
    """BUY on every trading day."""
    if not prices.bars:
        raise EmptySeries(prices.symbol)
    return [DecisionAction.BUY] * len(prices)


def macd_signals(prices: BarSeries) -> list[DecisionAction]:
    """Trend-following crossover signals from the MACD histogram.

    BUY the day the MACD line crosses from <= the signal line to above it,
    SELL on the opposite crossing, HOLD otherwise.
    """
    kind = IndicatorKind(tag=IndicatorTag.MACD, params=MACD_PARAMS)
    if len(prices) < kind.min_length():
        raise InsufficientHistory(
            f"MACD needs {kind.min_length()} bars, got {len(prices)}"
        )
    series = compute_indicator(prices, kind)
    warmup = len(prices) - len(series)
    signals = [DecisionAction.HOLD] * len(prices)
    hist = [v[2] for v in series.values]  # MACD line minus signal line
    for i in range(1, len(hist)):
        if hist[i - 1] <= 0.0 and hist[i] > 0.0:
            signals[warmup + i] = DecisionAction.BUY
        elif hist[i - 1] >= 0.0 and hist[i] < 0.0:
            signals[warmup + i] = DecisionAction.SELL
    return signals


def zmr_signals(
    prices: BarSeries,
    lookback: int = ZMR_LOOKBACK,
    entry_threshold: float = ZMR_ENTRY_THRESHOLD,
) -> list[DecisionAction]:
    """Long-only z-score mean reversion.

    Z is the close's distance from its rolling mean in population standard
    deviations. Enter when flat and Z <= -entry_threshold; exit the first
    day Z >= 0. Flat-window days (zero deviation) emit HOLD.

    The short side (entry on Z >= +threshold) is intentionally dropped: the
    portfolio model cannot short.
    """
    if len(prices) < lookback:
        raise InsufficientHistory(f"ZMR needs {lookback} bars, got {len(prices)}")
    closes = prices.closes
    signals = [DecisionAction.HOLD] * len(prices)
    in_position = False
    for i in range(lookback - 1, len(closes)):
        win = closes[i - lookback + 1 : i + 1]
        mean = sum(win) / lookback
        var = sum((x - mean) ** 2 for x in win) / lookback
        if var == 0.0:
            continue
        z = (closes[i] - mean) / var ** 0.5
        if not in_position and z <= -entry_threshold:
            signals[i] = DecisionAction.BUY
            in_position = True
        elif in_position and z >= 0.0:
            signals[i] = DecisionAction.SELL
            in_position = False
    return signals


@dataclass(frozen=True)
class StrategyKind:
    """CLI-facing strategy selector."""

    name: str

    CHOICES = ("buy-and-hold", "macd", "zmr")

    def __post_init__(self):
        if self.name not in self.CHOICES:
            raise ValueError(f"unknown strategy {self.name!r}")

    def signals(self, prices: BarSeries) -> list[DecisionAction]:
        if self.name == "buy-and-hold":
            return buy_and_hold_signals(prices)
        if self.name == "macd":
            return macd_signals(prices)
        return zmr_signals(prices)
