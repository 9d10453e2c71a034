"""Technical indicators over daily bar series.

Conventions, pinned so golden files stay stable:

* all formulas read the close unless they need high/low/volume
* EMA is seeded with the SMA of its first n values, multiplier 2/(n+1)
* RSI and ATR use Wilder smoothing
* BBANDS uses the population (divide-by-n) standard deviation
* degenerate denominators map to neutral values instead of errors
  (flat high/low window -> raw %K = 50, zero price deviation -> CCI = 0,
  H = L -> money-flow multiplier 0, zero window volume -> VWMA falls back
  to the SMA and CMF to 0)

Outputs are suffix-aligned to the input dates: the undefined warm-up
prefix is dropped, so ``len(points) == len(series) - (min_length - 1)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import date as Date
from datetime import timedelta
from enum import Enum
from typing import Callable

from .marketdata import BarSeries


class IndicatorError(Exception):
    pass


class InsufficientHistory(IndicatorError):
    def __init__(self, kind: "IndicatorKind", needed: int, got: int):
        super().__init__(f"{kind.name()}: needs {needed} bars, got {got}")
        self.kind = kind
        self.needed = needed
        self.got = got


class IndicatorTag(str, Enum):
    SMA = "SMA"
    EMA = "EMA"
    VWMA = "VWMA"
    RSI = "RSI"
    STOCH = "STOCH"
    CCI = "CCI"
    BBANDS = "BBANDS"
    ATR = "ATR"
    OBV = "OBV"
    CMF = "CMF"
    MACD = "MACD"


DEFAULT_PARAMS: dict[IndicatorTag, tuple[int, ...]] = {
    IndicatorTag.SMA: (20,),
    IndicatorTag.EMA: (10,),
    IndicatorTag.VWMA: (20,),
    IndicatorTag.RSI: (14,),
    IndicatorTag.STOCH: (14, 3, 3),
    IndicatorTag.CCI: (21,),
    IndicatorTag.BBANDS: (20, 2),
    IndicatorTag.ATR: (14,),
    IndicatorTag.OBV: (),
    IndicatorTag.CMF: (20,),
    IndicatorTag.MACD: (12, 26, 9),
}

_ARITY = {tag: len(params) for tag, params in DEFAULT_PARAMS.items()}

#: Component labels used when a kind produces more than one value per date.
COMPONENT_LABELS: dict[IndicatorTag, tuple[str, ...]] = {
    IndicatorTag.STOCH: ("K", "D"),
    IndicatorTag.BBANDS: ("Middle", "Upper", "Lower"),
    IndicatorTag.MACD: ("MACD", "Signal", "Histogram"),
}


@dataclass(frozen=True)
class IndicatorKind:
    """An indicator family plus its period parameters."""

    tag: IndicatorTag
    params: tuple[int, ...]

    def __post_init__(self):
        if len(self.params) != _ARITY[self.tag]:
            raise ValueError(
                f"{self.tag.value} takes {_ARITY[self.tag]} parameters, got {len(self.params)}"
            )
        if any(p < 1 for p in self.params):
            raise ValueError(f"{self.tag.value}: all parameters must be >= 1")

    @classmethod
    def default(cls, tag: IndicatorTag | str) -> "IndicatorKind":
        tag = IndicatorTag(tag)
        return cls(tag=tag, params=DEFAULT_PARAMS[tag])

    def name(self) -> str:
        return self.tag.value

    def min_length(self) -> int:
        """Shortest series that yields at least one defined point."""
        p = self.params
        tag = self.tag
        if tag in (IndicatorTag.SMA, IndicatorTag.EMA, IndicatorTag.VWMA,
                   IndicatorTag.BBANDS, IndicatorTag.CMF, IndicatorTag.CCI):
            return p[0]
        if tag in (IndicatorTag.RSI, IndicatorTag.ATR):
            return p[0] + 1
        if tag is IndicatorTag.STOCH:
            return p[0] + p[1] + p[2] - 2
        if tag is IndicatorTag.MACD:
            return p[1] + p[2] - 1
        return 1  # OBV


@dataclass(frozen=True)
class IndicatorSeries:
    """Computed indicator values aligned to the tail of the input dates."""

    kind: IndicatorKind
    dates: tuple[Date, ...]
    values: tuple[tuple[float, ...], ...]

    def __len__(self) -> int:
        return len(self.dates)


def _sma(xs: list[float], n: int) -> list[float]:
    return [sum(xs[i - n + 1 : i + 1]) / n for i in range(n - 1, len(xs))]


def _ema(xs: list[float], n: int) -> list[float]:
    """EMA seeded with the SMA of the first n values; aligned from index n-1."""
    k = 2.0 / (n + 1)
    out = [sum(xs[:n]) / n]
    for x in xs[n:]:
        out.append(k * x + (1.0 - k) * out[-1])
    return out


def _compute_sma(series: BarSeries, n: int):
    closes = series.closes
    return [(v,) for v in _sma(closes, n)]


def _compute_ema(series: BarSeries, n: int):
    return [(v,) for v in _ema(series.closes, n)]


def _compute_vwma(series: BarSeries, n: int):
    out = []
    bars = series.bars
    for i in range(n - 1, len(bars)):
        win = bars[i - n + 1 : i + 1]
        vol = float(sum(b.volume for b in win))
        if vol == 0.0:
            out.append((sum(b.close for b in win) / n,))
        else:
            out.append((sum(b.close * b.volume for b in win) / vol,))
    return out


def _compute_rsi(series: BarSeries, n: int):
    closes = series.closes
    gains = [max(closes[i] - closes[i - 1], 0.0) for i in range(1, len(closes))]
    losses = [max(closes[i - 1] - closes[i], 0.0) for i in range(1, len(closes))]
    avg_gain = sum(gains[:n]) / n
    avg_loss = sum(losses[:n]) / n
    out = []

    def rsi(g: float, l: float) -> float:
        if l == 0.0:
            return 100.0
        if g == 0.0:
            return 0.0
        return 100.0 - 100.0 / (1.0 + g / l)

    out.append((rsi(avg_gain, avg_loss),))
    for i in range(n, len(gains)):
        avg_gain = (avg_gain * (n - 1) + gains[i]) / n
        avg_loss = (avg_loss * (n - 1) + losses[i]) / n
        out.append((rsi(avg_gain, avg_loss),))
    return out


def _compute_stoch(series: BarSeries, n: int, k_smooth: int, d_smooth: int):
    bars = series.bars
    raw = []
    for i in range(n - 1, len(bars)):
        win = bars[i - n + 1 : i + 1]
        hi = max(b.high for b in win)
        lo = min(b.low for b in win)
        if hi == lo:
            raw.append(50.0)
        else:
            raw.append(100.0 * (bars[i].close - lo) / (hi - lo))
    k_line = _sma(raw, k_smooth)
    d_line = _sma(k_line, d_smooth)
    offset = len(k_line) - len(d_line)
    return [(k_line[i + offset], d_line[i]) for i in range(len(d_line))]


def _compute_cci(series: BarSeries, n: int):
    tp = [(b.high + b.low + b.close) / 3.0 for b in series.bars]
    out = []
    for i in range(n - 1, len(tp)):
        win = tp[i - n + 1 : i + 1]
        mean = sum(win) / n
        dev = sum(abs(x - mean) for x in win) / n
        if dev == 0.0:
            out.append((0.0,))
        else:
            out.append(((tp[i] - mean) / (0.015 * dev),))
    return out


def _compute_bbands(series: BarSeries, n: int, m: int):
    closes = series.closes
    out = []
    for i in range(n - 1, len(closes)):
        win = closes[i - n + 1 : i + 1]
        mid = sum(win) / n
        var = sum((x - mid) ** 2 for x in win) / n
        offset = m * var ** 0.5
        out.append((mid, mid + offset, mid - offset))
    return out


def _true_ranges(series: BarSeries) -> list[float]:
    bars = series.bars
    return [
        max(
            bars[i].high - bars[i].low,
            abs(bars[i].high - bars[i - 1].close),
            abs(bars[i].low - bars[i - 1].close),
        )
        for i in range(1, len(bars))
    ]


def _compute_atr(series: BarSeries, n: int):
    trs = _true_ranges(series)
    atr = sum(trs[:n]) / n
    out = [(atr,)]
    for tr in trs[n:]:
        atr = (atr * (n - 1) + tr) / n
        out.append((atr,))
    return out


def _compute_obv(series: BarSeries):
    bars = series.bars
    obv = 0.0
    out = [(0.0,)]
    for i in range(1, len(bars)):
        if bars[i].close > bars[i - 1].close:
            obv += bars[i].volume
        elif bars[i].close < bars[i - 1].close:
            obv -= bars[i].volume
        out.append((obv,))
    return out


def _money_flow_multiplier(high: float, low: float, close: float) -> float:
    if high == low:
        return 0.0
    return ((close - low) - (high - close)) / (high - low)


def _compute_cmf(series: BarSeries, n: int):
    bars = series.bars
    out = []
    for i in range(n - 1, len(bars)):
        win = bars[i - n + 1 : i + 1]
        vol = float(sum(b.volume for b in win))
        if vol == 0.0:
            out.append((0.0,))
            continue
        flow = sum(_money_flow_multiplier(b.high, b.low, b.close) * b.volume for b in win)
        out.append((flow / vol,))
    return out


def _compute_macd(series: BarSeries, fast: int, slow: int, sig: int):
    closes = series.closes
    ema_fast = _ema(closes, fast)   # aligned from index fast-1
    ema_slow = _ema(closes, slow)   # aligned from index slow-1
    shift = slow - fast
    macd_line = [ema_fast[i + shift] - ema_slow[i] for i in range(len(ema_slow))]
    signal = _ema(macd_line, sig)   # aligned from macd index sig-1
    offset = len(macd_line) - len(signal)
    return [
        (macd_line[i + offset], signal[i], macd_line[i + offset] - signal[i])
        for i in range(len(signal))
    ]


_COMPUTE: dict[IndicatorTag, Callable] = {
    IndicatorTag.SMA: _compute_sma,
    IndicatorTag.EMA: _compute_ema,
    IndicatorTag.VWMA: _compute_vwma,
    IndicatorTag.RSI: _compute_rsi,
    IndicatorTag.STOCH: _compute_stoch,
    IndicatorTag.CCI: _compute_cci,
    IndicatorTag.BBANDS: _compute_bbands,
    IndicatorTag.ATR: _compute_atr,
    IndicatorTag.OBV: _compute_obv,
    IndicatorTag.CMF: _compute_cmf,
    IndicatorTag.MACD: _compute_macd,
}


def compute_indicator(series: BarSeries, kind: IndicatorKind) -> IndicatorSeries:
    """Compute one indicator over a bar series.

    Raises InsufficientHistory when the series is shorter than the kind's
    warm-up requirement.
    """
    needed = kind.min_length()
    if len(series) < needed:
        raise InsufficientHistory(kind, needed, len(series))
    values = _COMPUTE[kind.tag](series, *kind.params)
    dates = series.dates[len(series) - len(values):]
    return IndicatorSeries(kind=kind, dates=tuple(dates), values=tuple(values))


USAGE_NOTES: dict[IndicatorTag, str] = {
    IndicatorTag.SMA: (
        "SMA: Arithmetic average of closing prices over the period. Usage: Price "
        "above a rising SMA supports an uptrend; crosses of price through the SMA "
        "flag potential trend changes."
    ),
    IndicatorTag.EMA: (
        "EMA: Moving average that weights recent prices more heavily. Usage: Reacts "
        "faster than the SMA; watch price/EMA crossovers for early trend shifts."
    ),
    IndicatorTag.VWMA: (
        "VWMA: Moving average weighted by traded volume. Usage: Divergence between "
        "VWMA and a plain SMA shows whether volume supports the current move."
    ),
    IndicatorTag.RSI: (
        "RSI: Measures momentum to flag overbought/oversold conditions. Usage: "
        "Apply 70/30 thresholds and watch for divergence to signal reversals."
    ),
    IndicatorTag.STOCH: (
        "STOCH: Compares the close to the recent high-low range. Usage: K/D above "
        "80 flags overbought, below 20 oversold; K-D crossovers give timing signals."
    ),
    IndicatorTag.CCI: (
        "CCI: Measures deviation of typical price from its average. Usage: Readings "
        "above +100 suggest overbought conditions, below -100 oversold."
    ),
    IndicatorTag.BBANDS: (
        "Bollinger Bands: Consist of a Middle Band (typically a 20-period SMA) and "
        "Upper/Lower Bands set at ±2 standard deviations from the middle. Usage: The "
        "middle band serves as a dynamic benchmark for price, the upper band "
        "highlights potential overbought or breakout zones, and the lower band "
        "signals possible oversold conditions."
    ),
    IndicatorTag.ATR: (
        "ATR: Average true range, a measure of market volatility. Usage: Rising ATR "
        "signals expanding volatility; use it to size stops rather than direction."
    ),
    IndicatorTag.OBV: (
        "OBV: Cumulative volume that adds on up days and subtracts on down days. "
        "Usage: OBV trending with price confirms the move; divergence warns of "
        "reversal."
    ),
    IndicatorTag.CMF: (
        "CMF: Measures money flow volume over a period. Usage: Positive values "
        "indicate accumulation, negative values distribution; zero crossings flag "
        "shifts in buying pressure."
    ),
    IndicatorTag.MACD: (
        "MACD: Momentum indicator composed of the MACD line (difference between two "
        "EMAs), the Signal line (EMA of the MACD line), and the Histogram (gap "
        "between MACD and Signal). Usage: Identify trend changes through MACD-Signal "
        "crossovers, gauge momentum strength via Histogram size, and watch for "
        "divergence between MACD and price as early reversal signals."
    ),
}


def format_point(kind: IndicatorKind, value: tuple[float, ...]) -> str:
    """Render one indicator point with two-decimal values."""
    labels = COMPONENT_LABELS.get(kind.tag)
    if labels is None:
        return f"{value[0]:.2f}"
    inner = ",".join(f"{label}={v:.2f}" for label, v in zip(labels, value))
    return f"({inner})"


def render_indicator_text(ind: IndicatorSeries, curr_date: Date, look_back_days: int) -> str:
    """Tool-response text: header, arrow-joined two-decimal values, usage note.

    Only points dated within [curr_date - look_back_days, curr_date] are
    rendered; full precision stays in the IndicatorSeries.
    """
    start = curr_date - timedelta(days=look_back_days)
    picked = [
        (d, v) for d, v in zip(ind.dates, ind.values) if start <= d <= curr_date
    ]
    name = ind.kind.name()
    if not picked:
        header = f"## {name} values from {start.isoformat()} to {curr_date.isoformat()}:"
        return f"{header}\n\nNo values available in this window.\n\n{USAGE_NOTES[ind.kind.tag]}"
    first, last = picked[0][0], picked[-1][0]
    header = f"## {name} values from {first.isoformat()} to {last.isoformat()}:"
    joined = "-> ".join(format_point(ind.kind, v) for _, v in picked)
    return f"{header}\n\n{joined}\n\n{USAGE_NOTES[ind.kind.tag]}"
