"""Market data corpus: OHLCV bar series plus categorized document stores.

All query paths enforce the look-ahead guard: nothing dated after the
query's current date is ever returned. Look-back windows are measured in
calendar days and are inclusive on both ends.

On-disk layout of a corpus directory:

    corpus/
      bars/<SYMBOL>.csv          header: date,open,high,low,close,adj_close,volume
      docs/<category>.jsonl      one JSON object per line, keys per category

Document files are optional; a missing category is simply empty.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from datetime import date as Date
from datetime import timedelta
from enum import Enum
from pathlib import Path
from typing import Iterable, Optional


class MarketDataError(Exception):
    """Base class for corpus ingestion and query errors."""


class MalformedRow(MarketDataError):
    def __init__(self, line: int, reason: str):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


class NonMonotonicDates(MarketDataError):
    def __init__(self, line: int):
        super().__init__(f"line {line}: dates must be strictly increasing")
        self.line = line


class EmptyFile(MarketDataError):
    pass


class DateBeforeSeries(MarketDataError):
    pass


class UnknownCategory(MarketDataError):
    pass


class DocumentCategory(str, Enum):
    NEWS = "news"
    REDDIT = "reddit"
    MACRO = "macro"
    BALANCE_SHEET = "balance_sheet"
    CASHFLOW = "cashflow"
    INCOME_STATEMENT = "income_statement"
    INSIDER_TRANSACTION = "insider_transaction"
    DIVIDEND = "dividend"
    EARNINGS_ESTIMATE = "earnings_estimate"


#: Symbol used by macro documents, which are not bound to a ticker.
GLOBAL_SYMBOL = "GLOBAL"

#: Required payload keys per document category.
REQUIRED_PAYLOAD_KEYS = {
    DocumentCategory.NEWS: ("headline", "summary", "sentiment"),
    DocumentCategory.REDDIT: ("title", "summary"),
    DocumentCategory.MACRO: ("indicator", "value"),
    DocumentCategory.BALANCE_SHEET: ("period", "fields"),
    DocumentCategory.CASHFLOW: ("period", "fields"),
    DocumentCategory.INCOME_STATEMENT: ("period", "fields"),
    DocumentCategory.INSIDER_TRANSACTION: ("name", "role", "shares", "direction"),
    DocumentCategory.DIVIDEND: ("amount",),
    DocumentCategory.EARNINGS_ESTIMATE: (
        "horizon",
        "eps_estimate",
        "revenue_estimate",
        "num_analysts",
    ),
}

BAR_CSV_HEADER = ["date", "open", "high", "low", "close", "adj_close", "volume"]


@dataclass(frozen=True)
class Bar:
    """One trading day's OHLCV record for one symbol."""

    date: Date
    open: float
    high: float
    low: float
    close: float
    adj_close: float
    volume: int

    def validate(self) -> Optional[str]:
        """Return a reason string if a bar invariant is violated, else None."""
        if min(self.open, self.high, self.low, self.close, self.adj_close) <= 0:
            return "prices must be strictly positive"
        if self.volume < 0:
            return "volume must be non-negative"
        if self.low > self.high:
            return "low exceeds high"
        if not (self.low <= self.open <= self.high):
            return "open outside [low, high]"
        if not (self.low <= self.close <= self.high):
            return "close outside [low, high]"
        return None


@dataclass(frozen=True)
class BarSeries:
    """Bars for one symbol, strictly increasing by date.

    Dates need not be calendar-consecutive; non-trading days are absent.
    """

    symbol: str
    bars: tuple[Bar, ...]

    def __len__(self) -> int:
        return len(self.bars)

    @property
    def dates(self) -> list[Date]:
        return [b.date for b in self.bars]

    @property
    def closes(self) -> list[float]:
        return [b.close for b in self.bars]

    def index_of(self, d: Date) -> Optional[int]:
        lo, hi = 0, len(self.bars) - 1
        while lo <= hi:
            mid = (lo + hi) // 2
            if self.bars[mid].date == d:
                return mid
            if self.bars[mid].date < d:
                lo = mid + 1
            else:
                hi = mid - 1
        return None


@dataclass(frozen=True)
class Document:
    """A dated record from one of the non-price information sources."""

    date: Date
    category: DocumentCategory
    symbol: str
    payload: dict


@dataclass
class Corpus:
    """Immutable-after-load store of bar series and documents.

    Read-only once constructed, so a single corpus is safely shared across
    concurrent episode sessions.
    """

    bars: dict[str, BarSeries] = field(default_factory=dict)
    # (category, symbol) -> documents sorted ascending by date
    documents: dict[tuple[DocumentCategory, str], list[Document]] = field(default_factory=dict)

    @property
    def symbols(self) -> list[str]:
        return sorted(self.bars)

    def series(self, symbol: str) -> Optional[BarSeries]:
        return self.bars.get(symbol)

    def add_documents(self, docs: Iterable[Document]) -> None:
        for doc in docs:
            key = (doc.category, doc.symbol)
            self.documents.setdefault(key, []).append(doc)
        for bucket in self.documents.values():
            bucket.sort(key=lambda d: d.date)


def _parse_date(text: str) -> Date:
    return Date.fromisoformat(text.strip())


def ingest_bars(path: str | Path, symbol: str) -> BarSeries:
    """Parse one bars CSV into a BarSeries, rejecting invalid rows.

    Errors carry the 1-based index of the offending data row (the header is
    row 0). Raises EmptyFile when no data rows are present.
    """
    path = Path(path)
    bars: list[Bar] = []
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise EmptyFile(str(path)) from None
        if [h.strip().lower() for h in header] != BAR_CSV_HEADER:
            raise MalformedRow(0, f"expected header {','.join(BAR_CSV_HEADER)}")
        for lineno, row in enumerate(reader, start=1):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != len(BAR_CSV_HEADER):
                raise MalformedRow(lineno, f"expected {len(BAR_CSV_HEADER)} fields, got {len(row)}")
            try:
                bar = Bar(
                    date=_parse_date(row[0]),
                    open=float(row[1]),
                    high=float(row[2]),
                    low=float(row[3]),
                    close=float(row[4]),
                    adj_close=float(row[5]),
                    volume=int(row[6]),
                )
            except ValueError as exc:
                raise MalformedRow(lineno, str(exc)) from None
            reason = bar.validate()
            if reason is not None:
                raise MalformedRow(lineno, reason)
            if bars and bar.date <= bars[-1].date:
                raise NonMonotonicDates(lineno)
            bars.append(bar)
    if not bars:
        raise EmptyFile(str(path))
    return BarSeries(symbol=symbol, bars=tuple(bars))


def window(series: BarSeries, curr_date: Date, look_back_days: int) -> BarSeries:
    """Bars with date in [curr_date - look_back_days, curr_date], inclusive.

    Never returns a bar dated after curr_date. Raises DateBeforeSeries when
    curr_date precedes all data.
    """
    if look_back_days < 0:
        raise ValueError("look_back_days must be non-negative")
    if not series.bars or curr_date < series.bars[0].date:
        raise DateBeforeSeries(
            f"{series.symbol}: window ending {curr_date} precedes first bar"
        )
    start = curr_date - timedelta(days=look_back_days)
    picked = tuple(b for b in series.bars if start <= b.date <= curr_date)
    return BarSeries(symbol=series.symbol, bars=picked)


def history_through(series: BarSeries, curr_date: Date) -> BarSeries:
    """All bars dated on or before curr_date."""
    picked = tuple(b for b in series.bars if b.date <= curr_date)
    return BarSeries(symbol=series.symbol, bars=picked)


def query_documents(
    corpus: Corpus,
    category: DocumentCategory | str,
    symbol: str,
    curr_date: Date,
    look_back_days: int,
) -> list[Document]:
    """Documents in [curr_date - look_back_days, curr_date], ascending by date.

    The macro category ignores the symbol argument. An empty result is not
    an error.
    """
    try:
        category = DocumentCategory(category)
    except ValueError:
        raise UnknownCategory(str(category)) from None
    if look_back_days < 0:
        raise ValueError("look_back_days must be non-negative")
    key_symbol = GLOBAL_SYMBOL if category is DocumentCategory.MACRO else symbol
    docs = corpus.documents.get((category, key_symbol), [])
    start = curr_date - timedelta(days=look_back_days)
    return [d for d in docs if start <= d.date <= curr_date]


def _load_document_line(category: DocumentCategory, lineno: int, line: str) -> Document:
    try:
        record = json.loads(line)
    except json.JSONDecodeError as exc:
        raise MalformedRow(lineno, f"invalid JSON: {exc}") from None
    if not isinstance(record, dict):
        raise MalformedRow(lineno, "document record must be a JSON object")
    for required in ("date", "symbol"):
        if required not in record:
            raise MalformedRow(lineno, f"missing key {required!r}")
    try:
        doc_date = _parse_date(record["date"])
    except ValueError as exc:
        raise MalformedRow(lineno, str(exc)) from None
    symbol = str(record["symbol"])
    payload = {k: v for k, v in record.items() if k not in ("date", "symbol")}
    for required in REQUIRED_PAYLOAD_KEYS[category]:
        if required not in payload:
            raise MalformedRow(lineno, f"missing payload key {required!r}")
    if category is DocumentCategory.NEWS:
        sentiment = payload["sentiment"]
        if not isinstance(sentiment, (int, float)) or sentiment != sentiment:
            raise MalformedRow(lineno, "sentiment must be a finite real")
    if category is DocumentCategory.INSIDER_TRANSACTION:
        if payload["direction"] not in ("acquisition", "disposal"):
            raise MalformedRow(lineno, "direction must be acquisition or disposal")
    if category is DocumentCategory.MACRO:
        symbol = GLOBAL_SYMBOL
    return Document(date=doc_date, category=category, symbol=symbol, payload=payload)


def ingest_documents(path: str | Path, category: DocumentCategory | str) -> list[Document]:
    """Parse one JSON-lines document file for a category."""
    try:
        category = DocumentCategory(category)
    except ValueError:
        raise UnknownCategory(str(category)) from None
    docs: list[Document] = []
    with Path(path).open() as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            docs.append(_load_document_line(category, lineno, line))
    return docs


def load_corpus(directory: str | Path) -> Corpus:
    """Load a corpus directory (bars/*.csv plus optional docs/*.jsonl).

    Re-loading replaces the corpus wholesale; nothing is merged.
    """
    directory = Path(directory)
    bars_dir = directory / "bars"
    if not bars_dir.is_dir():
        raise MarketDataError(f"no bars/ directory under {directory}")
    corpus = Corpus()
    for csv_path in sorted(bars_dir.glob("*.csv")):
        symbol = csv_path.stem
        corpus.bars[symbol] = ingest_bars(csv_path, symbol)
    if not corpus.bars:
        raise MarketDataError(f"no bar CSV files under {bars_dir}")
    docs_dir = directory / "docs"
    if docs_dir.is_dir():
        for category in DocumentCategory:
            doc_path = docs_dir / f"{category.value}.jsonl"
            if doc_path.exists():
                corpus.add_documents(ingest_documents(doc_path, category))
    return corpus
