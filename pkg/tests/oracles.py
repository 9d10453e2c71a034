"""Naive from-definition reference implementations.

Deliberately independent of the package under test: every function works on
plain lists, recomputes windows from scratch, and shares no helpers with
the production code. Clarity over speed.
"""

from __future__ import annotations

import math


# -- indicator references ----------------------------------------------------

def sma_ref(closes, n):
    out = []
    for i in range(n - 1, len(closes)):
        total = 0.0
        for j in range(i - n + 1, i + 1):
            total += closes[j]
        out.append(total / n)
    return out


def ema_ref(closes, n):
    k = 2.0 / (n + 1)
    seed = sum(closes[:n]) / n
    out = [seed]
    prev = seed
    for i in range(n, len(closes)):
        prev = k * closes[i] + (1.0 - k) * prev
        out.append(prev)
    return out


def vwma_ref(closes, volumes, n):
    out = []
    for i in range(n - 1, len(closes)):
        num = 0.0
        den = 0.0
        for j in range(i - n + 1, i + 1):
            num += closes[j] * volumes[j]
            den += volumes[j]
        if den == 0:
            out.append(sum(closes[i - n + 1 : i + 1]) / n)
        else:
            out.append(num / den)
    return out


def rsi_ref(closes, n):
    gains = []
    losses = []
    for i in range(1, len(closes)):
        change = closes[i] - closes[i - 1]
        gains.append(change if change > 0 else 0.0)
        losses.append(-change if change < 0 else 0.0)
    avg_gain = sum(gains[:n]) / n
    avg_loss = sum(losses[:n]) / n
    out = []

    def to_rsi(g, l):
        if l == 0.0:
            return 100.0
        if g == 0.0:
            return 0.0
        rs = g / l
        return 100.0 - 100.0 / (1.0 + rs)

    out.append(to_rsi(avg_gain, avg_loss))
    for i in range(n, len(gains)):
        avg_gain = (avg_gain * (n - 1) + gains[i]) / n
        avg_loss = (avg_loss * (n - 1) + losses[i]) / n
        out.append(to_rsi(avg_gain, avg_loss))
    return out


def stoch_ref(highs, lows, closes, n, k_period, d_period):
    raw = []
    for i in range(n - 1, len(closes)):
        window_high = max(highs[i - n + 1 : i + 1])
        window_low = min(lows[i - n + 1 : i + 1])
        if window_high == window_low:
            raw.append(50.0)
        else:
            raw.append(100.0 * (closes[i] - window_low) / (window_high - window_low))
    k_line = []
    for i in range(k_period - 1, len(raw)):
        k_line.append(sum(raw[i - k_period + 1 : i + 1]) / k_period)
    pairs = []
    for i in range(d_period - 1, len(k_line)):
        d_val = sum(k_line[i - d_period + 1 : i + 1]) / d_period
        pairs.append((k_line[i], d_val))
    return pairs


def cci_ref(highs, lows, closes, n):
    tps = [(highs[i] + lows[i] + closes[i]) / 3.0 for i in range(len(closes))]
    out = []
    for i in range(n - 1, len(tps)):
        window = tps[i - n + 1 : i + 1]
        mean = sum(window) / n
        mad = sum(abs(x - mean) for x in window) / n
        if mad == 0.0:
            out.append(0.0)
        else:
            out.append((tps[i] - mean) / (0.015 * mad))
    return out


def bbands_ref(closes, n, m):
    out = []
    for i in range(n - 1, len(closes)):
        window = closes[i - n + 1 : i + 1]
        mean = sum(window) / n
        variance = sum((x - mean) ** 2 for x in window) / n
        width = m * math.sqrt(variance)
        out.append((mean, mean + width, mean - width))
    return out


def atr_ref(highs, lows, closes, n):
    trs = []
    for i in range(1, len(closes)):
        trs.append(
            max(
                highs[i] - lows[i],
                abs(highs[i] - closes[i - 1]),
                abs(lows[i] - closes[i - 1]),
            )
        )
    atr = sum(trs[:n]) / n
    out = [atr]
    for i in range(n, len(trs)):
        atr = (atr * (n - 1) + trs[i]) / n
        out.append(atr)
    return out


def obv_ref(closes, volumes):
    out = [0.0]
    total = 0.0
    for i in range(1, len(closes)):
        if closes[i] > closes[i - 1]:
            total += volumes[i]
        elif closes[i] < closes[i - 1]:
            total -= volumes[i]
        out.append(total)
    return out


def cmf_ref(highs, lows, closes, volumes, n):
    out = []
    for i in range(n - 1, len(closes)):
        money_flow = 0.0
        total_volume = 0.0
        for j in range(i - n + 1, i + 1):
            if highs[j] == lows[j]:
                multiplier = 0.0
            else:
                multiplier = ((closes[j] - lows[j]) - (highs[j] - closes[j])) / (
                    highs[j] - lows[j]
                )
            money_flow += multiplier * volumes[j]
            total_volume += volumes[j]
        out.append(money_flow / total_volume if total_volume else 0.0)
    return out


def macd_ref(closes, fast, slow, signal_period):
    fast_line = ema_ref(closes, fast)
    slow_line = ema_ref(closes, slow)
    macd_line = []
    for i in range(len(slow_line)):
        macd_line.append(fast_line[i + (slow - fast)] - slow_line[i])
    signal_line = ema_ref(macd_line, signal_period)
    out = []
    for i in range(len(signal_line)):
        macd_val = macd_line[i + signal_period - 1]
        out.append((macd_val, signal_line[i], macd_val - signal_line[i]))
    return out


# -- metric references -------------------------------------------------------

def arr_ref(values):
    periods = len(values) - 1
    return (values[-1] / values[0]) ** (252.0 / periods) - 1.0


def sharpe_ref(values):
    returns = []
    for i in range(1, len(values)):
        returns.append((values[i] - values[i - 1]) / values[i - 1])
    mean = sum(returns) / len(returns)
    sq = 0.0
    for r in returns:
        sq += (r - mean) ** 2
    std = math.sqrt(sq / (len(returns) - 1))
    if std == 0.0:
        return 0.0
    return mean / std


def mdd_ref(values):
    worst = 0.0
    for t in range(1, len(values)):
        peak = values[1]
        for s in range(1, t + 1):
            if values[s] > peak:
                peak = values[s]
        drawdown = (peak - values[t]) / peak
        if drawdown > worst:
            worst = drawdown
    return worst


# -- reward reference --------------------------------------------------------

def forward_return_ref(prices, t, horizon, decay):
    denom = 0.0
    for i in range(1, horizon + 1):
        denom += decay ** i
    total = 0.0
    for h in range(1, horizon + 1):
        weight = (decay ** h) / denom
        total += weight * (prices[t + h + 1] / prices[t + 1] - 1.0)
    return total
