"""Shared fixture builders for the test suite."""

from __future__ import annotations

import json
import math
from datetime import date as Date
from datetime import timedelta
from pathlib import Path

from quantgym.marketdata import Bar, BarSeries

# The reference MSFT window used throughout: eleven trading days ending
# 2025-05-16, last close 454.27.
MSFT_WINDOW_ROWS = [
    ("2025-05-02", 431.74, 439.44, 429.99, 435.28, 434.48, 30757400),
    ("2025-05-05", 432.87, 439.50, 432.11, 436.17, 435.37, 20136100),
    ("2025-05-06", 432.20, 437.73, 431.17, 433.31, 432.52, 15104200),
    ("2025-05-07", 433.84, 438.12, 431.11, 433.35, 432.56, 23295300),
    ("2025-05-08", 437.93, 443.67, 435.66, 438.17, 437.37, 23491300),
    ("2025-05-09", 440.00, 440.74, 435.88, 438.73, 437.93, 15324200),
    ("2025-05-12", 445.94, 449.37, 439.78, 449.26, 448.44, 22821900),
    ("2025-05-13", 447.78, 450.67, 445.36, 449.14, 448.32, 23618800),
    ("2025-05-14", 448.14, 453.90, 448.14, 452.94, 452.11, 19902800),
    ("2025-05-15", 450.77, 456.19, 450.43, 453.13, 453.13, 21992300),
    ("2025-05-16", 452.05, 454.36, 448.73, 454.27, 454.27, 23849800),
]

MSFT_DECISION_DAY = Date(2025, 5, 16)


def _weekdays_back(end: Date, count: int) -> list[Date]:
    """The `count` weekdays strictly before `end`, ascending."""
    days = []
    d = end
    while len(days) < count:
        d -= timedelta(days=1)
        if d.weekday() < 5:
            days.append(d)
    return list(reversed(days))


def _weekdays_forward(start: Date, count: int) -> list[Date]:
    days = []
    d = start
    while len(days) < count:
        d += timedelta(days=1)
        if d.weekday() < 5:
            days.append(d)
    return days


def msft_bar_rows(pre: int = 50, post: int = 10) -> list[tuple]:
    """Reference window plus deterministic synthetic history and future bars."""
    first = Date.fromisoformat(MSFT_WINDOW_ROWS[0][0])
    last = Date.fromisoformat(MSFT_WINDOW_ROWS[-1][0])
    rows = []
    for i, day in enumerate(_weekdays_back(first, pre)):
        close = round(385.0 + 46.0 * i / max(pre - 1, 1) + 2.0 * math.sin(i * 0.7), 2)
        open_ = round(close - 0.6, 2)
        high = round(max(open_, close) + 1.8, 2)
        low = round(min(open_, close) - 1.8, 2)
        volume = 17_500_000 + ((i * 137) % 9) * 250_000
        rows.append((day.isoformat(), open_, high, low, close, round(close - 0.8, 2), volume))
    rows.extend(MSFT_WINDOW_ROWS)
    for i, day in enumerate(_weekdays_forward(last, post)):
        close = round(455.0 + 4.0 * math.sin(i * 0.9), 2)
        open_ = round(close - 0.4, 2)
        high = round(max(open_, close) + 1.5, 2)
        low = round(min(open_, close) - 1.5, 2)
        volume = 21_000_000 + ((i * 91) % 7) * 300_000
        rows.append((day.isoformat(), open_, high, low, close, round(close - 0.5, 2), volume))
    return rows


def bars_csv_text(rows: list[tuple]) -> str:
    lines = ["date,open,high,low,close,adj_close,volume"]
    for d, o, h, l, c, a, v in rows:
        lines.append(f"{d},{o:.2f},{h:.2f},{l:.2f},{c:.2f},{a:.2f},{v}")
    return "\n".join(lines) + "\n"


INSIDER_DOCS = [
    {
        "date": "2025-05-15",
        "symbol": "MSFT",
        "name": "COLEMAN, AMY",
        "role": "EVP, Chief Human Resources Off",
        "shares": 77.894,
        "direction": "disposal",
    },
    {
        "date": "2025-05-15",
        "symbol": "MSFT",
        "name": "COLEMAN, AMY",
        "role": "EVP, Chief Human Resources Off",
        "shares": 13242.774,
        "direction": "disposal",
    },
]

NEWS_DOCS = [
    {
        "date": "2025-05-14",
        "symbol": "MSFT",
        "headline": "Cloud unit lands a record enterprise contract",
        "summary": "Multi-year infrastructure deal announced.",
        "sentiment": 0.27,
    },
    {
        "date": "2025-05-15",
        "symbol": "MSFT",
        "headline": "Analysts split on valuation after the latest rally",
        "summary": "Price targets diverge across brokerages.",
        "sentiment": 0.01,
    },
    {
        "date": "2025-05-16",
        "symbol": "MSFT",
        "headline": "Regulators open a review of a pending acquisition",
        "summary": "Timeline for closing now uncertain.",
        "sentiment": -0.22,
    },
    {
        "date": "2025-05-17",
        "symbol": "MSFT",
        "headline": "Weekend feature on the company's research lab",
        "summary": "Published after the decision day; must never leak.",
        "sentiment": 0.10,
    },
]

REDDIT_DOCS = [
    {
        "date": "2025-05-15",
        "symbol": "MSFT",
        "title": "Is the run-up sustainable?",
        "summary": "Mixed takes; several posters flag overbought momentum readings.",
    }
]

MACRO_DOCS = [
    {"date": "2025-05-01", "symbol": "GLOBAL", "indicator": "CPI", "value": 319.8},
    {"date": "2025-05-01", "symbol": "GLOBAL", "indicator": "Federal Funds Rate", "value": 4.33},
]

BALANCE_SHEET_DOCS = [
    {
        "date": "2025-04-30",
        "symbol": "MSFT",
        "period": "2025-Q3",
        "fields": {"total_assets": 562000000000, "total_liabilities": 231000000000},
    }
]

CASHFLOW_DOCS = [
    {
        "date": "2025-04-30",
        "symbol": "MSFT",
        "period": "2025-Q3",
        "fields": {"operating_cashflow": 37200000000, "capital_expenditure": -16700000000},
    }
]

INCOME_DOCS = [
    {
        "date": "2025-04-30",
        "symbol": "MSFT",
        "period": "2025-Q3",
        "fields": {"total_revenue": 70100000000, "net_income": 25800000000},
    }
]

DIVIDEND_DOCS = [
    {"date": "2025-05-15", "symbol": "MSFT", "amount": 0.83},
]

EARNINGS_DOCS = [
    {
        "date": "2025-04-25",
        "symbol": "MSFT",
        "horizon": "2025-Q4",
        "eps_estimate": 3.35,
        "revenue_estimate": 73500000000,
        "num_analysts": 32,
    }
]

_DOC_FILES = {
    "insider_transaction": INSIDER_DOCS,
    "news": NEWS_DOCS,
    "reddit": REDDIT_DOCS,
    "macro": MACRO_DOCS,
    "balance_sheet": BALANCE_SHEET_DOCS,
    "cashflow": CASHFLOW_DOCS,
    "income_statement": INCOME_DOCS,
    "dividend": DIVIDEND_DOCS,
    "earnings_estimate": EARNINGS_DOCS,
}


def write_corpus(root: Path, pre: int = 50, post: int = 10) -> Path:
    """Write the MSFT fixture corpus under `root` and return it."""
    bars_dir = root / "bars"
    docs_dir = root / "docs"
    bars_dir.mkdir(parents=True, exist_ok=True)
    docs_dir.mkdir(parents=True, exist_ok=True)
    (bars_dir / "MSFT.csv").write_text(bars_csv_text(msft_bar_rows(pre, post)))
    for name, docs in _DOC_FILES.items():
        lines = [json.dumps(doc) for doc in docs]
        (docs_dir / f"{name}.jsonl").write_text("\n".join(lines) + "\n")
    return root


def make_series(
    closes: list[float],
    symbol: str = "TEST",
    start: Date = Date(2024, 1, 1),
    highs: list[float] | None = None,
    lows: list[float] | None = None,
    volumes: list[int] | None = None,
) -> BarSeries:
    """Build a valid BarSeries from a close sequence on consecutive weekdays."""
    days = []
    d = start
    while len(days) < len(closes):
        if d.weekday() < 5:
            days.append(d)
        d += timedelta(days=1)
    bars = []
    for i, (day, close) in enumerate(zip(days, closes)):
        open_ = closes[i - 1] if i > 0 else close
        high = highs[i] if highs else max(open_, close) * 1.01
        low = lows[i] if lows else min(open_, close) * 0.99
        volume = volumes[i] if volumes else 1_000_000 + i * 1000
        bars.append(
            Bar(date=day, open=open_, high=high, low=low, close=close,
                adj_close=close, volume=volume)
        )
    return BarSeries(symbol=symbol, bars=tuple(bars))


def random_series(rng, n: int, symbol: str = "RND", start_price: float = 100.0) -> BarSeries:
    """Random-walk series with valid OHLC structure and random volumes."""
    closes = [start_price]
    for _ in range(n - 1):
        closes.append(max(closes[-1] * (1.0 + rng.uniform(-0.04, 0.04)), 1.0))
    days = []
    d = Date(2023, 1, 2)
    while len(days) < n:
        if d.weekday() < 5:
            days.append(d)
        d += timedelta(days=1)
    bars = []
    for i, (day, close) in enumerate(zip(days, closes)):
        open_ = closes[i - 1] if i > 0 else close
        spread = abs(close - open_) + close * rng.uniform(0.001, 0.02)
        high = max(open_, close) + spread * rng.random()
        low = max(min(open_, close) - spread * rng.random(), 0.01)
        bars.append(
            Bar(date=day, open=open_, high=high, low=low, close=close,
                adj_close=close, volume=int(rng.uniform(1e5, 5e6)))
        )
    return BarSeries(symbol=symbol, bars=tuple(bars))
