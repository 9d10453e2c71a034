"""Tool-augmented decision episodes over a market data corpus.

An episode is opened for one (symbol, trading day). The agent issues query
actions against the eleven tools, optionally interleaving free-text
reasoning, and terminates the episode with a single BUY / SELL / HOLD
decision. State transitions are deterministic: the same state and query
always produce byte-identical response text.

Malformed tool calls (unknown tool, bad arguments) do not kill the episode;
they are counted on the trajectory and penalized later by the reward
module. The hard cap ``max_tool_calls`` applies to successful calls only.

Assistant turns: every reasoning append opens a new turn and subsequent
successful tool calls land in it. The trajectory records per-turn call
counts so the scorer can detect the degenerate pattern of acquiring all
data in one round and immediately answering.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from datetime import date as Date
from datetime import timedelta
from enum import Enum
from typing import Any, Optional

from . import indicators, marketdata
from .indicators import IndicatorKind, InsufficientHistory
from .marketdata import BarSeries, Corpus, DocumentCategory


class EnvError(Exception):
    pass


class UnknownSymbol(EnvError):
    pass


class NotATradingDay(EnvError):
    pass


class EpisodeTerminated(EnvError):
    pass


class ToolBudgetExhausted(EnvError):
    pass


class MalformedArguments(EnvError):
    def __init__(self, tool: str, reason: str):
        super().__init__(f"{tool}: {reason}")
        self.tool = tool
        self.reason = reason


class DecisionAction(str, Enum):
    BUY = "BUY"
    SELL = "SELL"
    HOLD = "HOLD"


@dataclass(frozen=True)
class QueryAction:
    tool: str
    arguments: dict


DEFAULT_MAX_TOOL_CALLS = 8

#: Tool name -> (document category or None, default look-back in calendar days).
#: Defaults roughly track each source's cadence: short for news, weekly for
#: social/insider flow, monthly for macro, quarterly+ for filings.
TOOL_TABLE: dict[str, tuple[Optional[DocumentCategory], int]] = {
    "get_market_data": (None, 14),
    "get_stock_indicators": (None, 14),
    "get_news_data": (DocumentCategory.NEWS, 2),
    "get_reddit_data": (DocumentCategory.REDDIT, 7),
    "get_macro_indicators": (DocumentCategory.MACRO, 30),
    "get_balance_sheet": (DocumentCategory.BALANCE_SHEET, 120),
    "get_cashflow": (DocumentCategory.CASHFLOW, 120),
    "get_income_statements": (DocumentCategory.INCOME_STATEMENT, 120),
    "get_insider_transactions": (DocumentCategory.INSIDER_TRANSACTION, 7),
    "get_dividends": (DocumentCategory.DIVIDEND, 365),
    "get_earnings_estimate": (DocumentCategory.EARNINGS_ESTIMATE, 90),
}

TOOL_NAMES = tuple(TOOL_TABLE)


@dataclass(frozen=True)
class EpisodeConfig:
    symbol: str
    curr_date: Date
    corpus: Corpus
    max_tool_calls: int = DEFAULT_MAX_TOOL_CALLS

    def __post_init__(self):
        if self.max_tool_calls < 1:
            raise ValueError("max_tool_calls must be >= 1")


@dataclass(frozen=True)
class TrajectoryStep:
    state_digest: str
    action: str


@dataclass(frozen=True)
class Trajectory:
    """Complete record of one terminated episode."""

    symbol: str
    curr_date: Date
    events: tuple[dict, ...]            # ordered reasoning/query/decision records
    steps: tuple[TrajectoryStep, ...]   # (state digest, action) pairs, decision last
    tool_calls_per_turn: tuple[int, ...]
    malformed_calls: int
    final_action: DecisionAction

    @property
    def assistant_turns(self) -> int:
        return len(self.tool_calls_per_turn)

    @property
    def tool_calls(self) -> int:
        return sum(self.tool_calls_per_turn)

    @property
    def reasoning_texts(self) -> list[str]:
        return [e["text"] for e in self.events if e["type"] == "reasoning"]

    def query_events(self) -> list[dict]:
        return [e for e in self.events if e["type"] == "query"]

    def to_jsonl(self) -> str:
        lines = []
        for step, event in enumerate(self.events):
            record: dict[str, Any] = {"step": step, "type": event["type"]}
            if event["type"] == "query":
                record["tool"] = event["tool"]
                record["arguments"] = event["arguments"]
                record["response"] = event["response"]
            elif event["type"] == "reasoning":
                record["text"] = event["text"]
            else:
                record["action"] = event["action"]
            lines.append(json.dumps(record))
        meta = {
            "symbol": self.symbol,
            "date": self.curr_date.isoformat(),
            "malformed_calls": self.malformed_calls,
            "assistant_turns": self.assistant_turns,
            "tool_calls_per_turn": list(self.tool_calls_per_turn),
        }
        lines.append(json.dumps(meta))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_jsonl(cls, text: str) -> "Trajectory":
        events: list[dict] = []
        meta: Optional[dict] = None
        for lineno, line in enumerate(text.splitlines(), start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"line {lineno}: invalid JSON: {exc}") from None
            if "type" in record:
                events.append(record)
            else:
                meta = record
        if meta is None:
            raise ValueError("missing trailing metadata record")
        if not events or events[-1]["type"] != "decision":
            raise ValueError("trajectory must end with a decision record")
        cleaned: list[dict] = []
        for e in events:
            if e["type"] == "query":
                cleaned.append({"type": "query", "tool": e["tool"],
                                "arguments": e["arguments"], "response": e["response"]})
            elif e["type"] == "reasoning":
                cleaned.append({"type": "reasoning", "text": e["text"]})
            elif e["type"] == "decision":
                cleaned.append({"type": "decision", "action": e["action"]})
            else:
                raise ValueError(f"unknown step type {e['type']!r}")
        return cls(
            symbol=meta["symbol"],
            curr_date=Date.fromisoformat(meta["date"]),
            events=tuple(cleaned),
            steps=(),
            tool_calls_per_turn=tuple(meta["tool_calls_per_turn"]),
            malformed_calls=int(meta["malformed_calls"]),
            final_action=DecisionAction(cleaned[-1]["action"]),
        )


class Episode:
    """Mutable episode state; immutable once a decision is submitted."""

    def __init__(self, config: EpisodeConfig):
        self.config = config
        self.query_history: list[QueryAction] = []
        self.query_results: list[str] = []
        self.reasoning_log: list[str] = []
        self.terminated = False
        self.final_action: Optional[DecisionAction] = None
        self.malformed_calls = 0
        self._events: list[dict] = []
        self._steps: list[TrajectoryStep] = []
        self._turns: list[int] = []

    # -- state digest ----------------------------------------------------

    def _digest(self) -> str:
        snapshot = {
            "symbol": self.config.symbol,
            "date": self.config.curr_date.isoformat(),
            "queries": [[q.tool, q.arguments] for q in self.query_history],
            "results": len(self.query_results),
            "reasoning": len(self.reasoning_log),
        }
        blob = json.dumps(snapshot, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    # -- lifecycle -------------------------------------------------------

    def _check_alive(self) -> None:
        if self.terminated:
            raise EpisodeTerminated(f"{self.config.symbol}@{self.config.curr_date}")

    def append_reasoning(self, text: str) -> None:
        """Record a free-text segment; each one begins a new assistant turn."""
        self._check_alive()
        self._turns.append(0)
        self.reasoning_log.append(text)
        self._events.append({"type": "reasoning", "text": text})

    def execute_query(self, action: QueryAction) -> str:
        self._check_alive()
        if len(self.query_history) >= self.config.max_tool_calls:
            raise ToolBudgetExhausted(
                f"tool budget of {self.config.max_tool_calls} calls exhausted"
            )
        digest = self._digest()
        try:
            response = self._run_tool(action)
        except MalformedArguments:
            self.malformed_calls += 1
            raise
        if not self._turns:
            self._turns.append(0)
        self._turns[-1] += 1
        self.query_history.append(action)
        self.query_results.append(response)
        self._events.append({
            "type": "query",
            "tool": action.tool,
            "arguments": dict(action.arguments),
            "response": response,
        })
        self._steps.append(TrajectoryStep(state_digest=digest, action=action.tool))
        return response

    def submit_decision(self, action: DecisionAction) -> Trajectory:
        self._check_alive()
        action = DecisionAction(action)
        digest = self._digest()
        self.terminated = True
        self.final_action = action
        if not self._turns:
            self._turns.append(0)
        self._events.append({"type": "decision", "action": action.value})
        self._steps.append(TrajectoryStep(state_digest=digest, action=action.value))
        return Trajectory(
            symbol=self.config.symbol,
            curr_date=self.config.curr_date,
            events=tuple(self._events),
            steps=tuple(self._steps),
            tool_calls_per_turn=tuple(self._turns),
            malformed_calls=self.malformed_calls,
            final_action=action,
        )

    # -- tool dispatch ---------------------------------------------------

    def _series(self) -> BarSeries:
        series = self.config.corpus.series(self.config.symbol)
        assert series is not None  # validated at open
        return series

    def _validate_common(self, action: QueryAction) -> int:
        """Validate shared arguments; return the effective look-back."""
        tool = action.tool
        args = action.arguments
        category, default_lb = TOOL_TABLE[tool]
        allowed = {"symbol", "curr_date", "look_back_days"}
        if tool == "get_stock_indicators":
            allowed.add("indicator")
        for key in args:
            if key not in allowed:
                raise MalformedArguments(tool, f"unexpected argument {key!r}")
        symbol = args.get("symbol")
        if symbol is not None and category is not DocumentCategory.MACRO:
            if symbol != self.config.symbol:
                raise MalformedArguments(
                    tool, f"symbol {symbol!r} does not match episode symbol"
                )
        curr = args.get("curr_date")
        if curr is not None:
            try:
                parsed = Date.fromisoformat(str(curr))
            except ValueError:
                raise MalformedArguments(tool, f"invalid curr_date {curr!r}") from None
            if parsed != self.config.curr_date:
                raise MalformedArguments(
                    tool, f"curr_date {curr!r} does not match episode date"
                )
        lb = args.get("look_back_days", default_lb)
        if isinstance(lb, bool) or not isinstance(lb, int):
            raise MalformedArguments(tool, "look_back_days must be an integer")
        if lb < 0:
            raise MalformedArguments(tool, "look_back_days must be >= 0")
        return lb

    def _run_tool(self, action: QueryAction) -> str:
        tool = action.tool
        if tool not in TOOL_TABLE:
            raise MalformedArguments(tool, "unknown tool")
        look_back = self._validate_common(action)
        curr = self.config.curr_date
        if tool == "get_market_data":
            win = marketdata.window(self._series(), curr, look_back)
            return _render_market_table(win)
        if tool == "get_stock_indicators":
            name = action.arguments.get("indicator")
            if name is None:
                raise MalformedArguments(tool, "missing required argument 'indicator'")
            try:
                kind = IndicatorKind.default(str(name))
            except ValueError:
                raise MalformedArguments(tool, f"unknown indicator {name!r}") from None
            history = marketdata.history_through(self._series(), curr)
            try:
                ind = indicators.compute_indicator(history, kind)
            except InsufficientHistory as exc:
                return (
                    f"{kind.name()}: insufficient history "
                    f"(needs {exc.needed} bars, have {exc.got})."
                )
            return indicators.render_indicator_text(ind, curr, look_back)
        category, _ = TOOL_TABLE[tool]
        docs = marketdata.query_documents(
            self.config.corpus, category, self.config.symbol, curr, look_back
        )
        return _render_documents(category, self.config.symbol, docs, curr, look_back)


def open_episode(config: EpisodeConfig) -> Episode:
    """Validate the config against the corpus and start a fresh episode."""
    series = config.corpus.series(config.symbol)
    if series is None:
        raise UnknownSymbol(config.symbol)
    if series.index_of(config.curr_date) is None:
        raise NotATradingDay(f"{config.symbol}: {config.curr_date} is not a trading day")
    return Episode(config)


# -- response rendering ----------------------------------------------------

MARKET_COLUMNS = ("Date", "Open", "High", "Low", "Close", "Adj Close", "Volume")


def _render_market_table(series: BarSeries) -> str:
    """Plain-text OHLCV table: left-aligned row index, right-aligned columns."""
    if not series.bars:
        return "No market data available in this window."
    rows = [
        (
            b.date.isoformat(),
            f"{b.open:.2f}",
            f"{b.high:.2f}",
            f"{b.low:.2f}",
            f"{b.close:.2f}",
            f"{b.adj_close:.2f}",
            str(b.volume),
        )
        for b in series.bars
    ]
    idx_width = max(len(str(i)) for i in range(len(rows)))
    widths = [
        max(len(MARKET_COLUMNS[c]), max(len(r[c]) for r in rows))
        for c in range(len(MARKET_COLUMNS))
    ]
    header = " " * idx_width + "".join(
        "  " + name.rjust(widths[c]) for c, name in enumerate(MARKET_COLUMNS)
    )
    lines = [header]
    for i, row in enumerate(rows):
        lines.append(
            str(i).ljust(idx_width)
            + "".join("  " + cell.rjust(widths[c]) for c, cell in enumerate(row))
        )
    return "\n".join(lines)


def _fmt_payload_value(value: Any) -> str:
    # Payload numbers keep their ingested precision (e.g. fractional shares).
    return str(value)


def _sentiment_label(score: float) -> str:
    if score <= -0.35:
        return "Bearish"
    if score <= -0.15:
        return "Somewhat-Bearish"
    if score < 0.15:
        return "Neutral"
    if score < 0.35:
        return "Somewhat-Bullish"
    return "Bullish"


_SENTIMENT_NOTE = (
    "Interpret the sentiment score x: values near 0 are Neutral, larger positive "
    "values indicate increasingly Bullish, and larger negative values indicate "
    "increasingly Bearish."
)


def _render_documents(
    category: DocumentCategory,
    symbol: str,
    docs: list[marketdata.Document],
    curr: Date,
    look_back: int,
) -> str:
    start = (curr - timedelta(days=look_back)).isoformat()
    end = curr.isoformat()
    if category is DocumentCategory.NEWS:
        header = f"## {symbol} News, from {start} to {end}:"
        if not docs:
            return f"{header}\nNo records in this window."
        lines = [header, _SENTIMENT_NOTE]
        for d in docs:
            score = float(d.payload["sentiment"])
            lines.append(
                f"{d.date.isoformat()} [Sentiment score = {score:.2f}, "
                f"{_sentiment_label(score)}] {d.payload['headline']}"
            )
        return "\n".join(lines)
    if category is DocumentCategory.REDDIT:
        header = f"## {symbol} Reddit posts, from {start} to {end}:"
        if not docs:
            return f"{header}\nNo records in this window."
        sections = [
            f"### {d.date.isoformat()}: {d.payload['title']}\n{d.payload['summary']}"
            for d in docs
        ]
        return header + "\n" + "\n\n".join(sections)
    if category is DocumentCategory.MACRO:
        header = f"## Macro indicators, from {start} to {end}:"
        if not docs:
            return f"{header}\nNo records in this window."
        lines = [header]
        for d in docs:
            lines.append(
                f"{d.date.isoformat()} {d.payload['indicator']}: "
                f"{_fmt_payload_value(d.payload['value'])}"
            )
        return "\n".join(lines)
    if category is DocumentCategory.INSIDER_TRANSACTION:
        header = f"## {symbol} insider transactions from {start} to {end}:"
        if not docs:
            return f"{header}\nNo records in this window."
        sections = []
        for d in docs:
            p = d.payload
            sections.append(
                f"### Transaction Date: {d.date.isoformat()}, {p['name']} ({p['role']})\n"
                f"Type: {p.get('security_type', 'Common Stock')}\n"
                f"Shares: {_fmt_payload_value(p['shares'])} ({str(p['direction']).capitalize()})"
            )
        return header + "\n" + "\n\n".join(sections)
    if category is DocumentCategory.DIVIDEND:
        header = f"## {symbol} dividends, from {start} to {end}:"
        if not docs:
            return f"{header}\nNo records in this window."
        lines = [header]
        for d in docs:
            lines.append(
                f"{d.date.isoformat()} Dividend: {_fmt_payload_value(d.payload['amount'])}"
            )
        return "\n".join(lines)
    if category is DocumentCategory.EARNINGS_ESTIMATE:
        header = f"## {symbol} earnings estimates, from {start} to {end}:"
        if not docs:
            return f"{header}\nNo records in this window."
        lines = [header]
        for d in docs:
            p = d.payload
            lines.append(
                f"{d.date.isoformat()} [{p['horizon']}] "
                f"EPS estimate: {_fmt_payload_value(p['eps_estimate'])}, "
                f"Revenue estimate: {_fmt_payload_value(p['revenue_estimate'])}, "
                f"Analysts: {_fmt_payload_value(p['num_analysts'])}"
            )
        return "\n".join(lines)
    # balance_sheet / cashflow / income_statement
    titles = {
        DocumentCategory.BALANCE_SHEET: "balance sheet",
        DocumentCategory.CASHFLOW: "cash flow statements",
        DocumentCategory.INCOME_STATEMENT: "income statements",
    }
    header = f"## {symbol} {titles[category]}, from {start} to {end}:"
    if not docs:
        return f"{header}\nNo records in this window."
    sections = []
    for d in docs:
        p = d.payload
        body = "\n".join(
            f"{key}: {_fmt_payload_value(val)}" for key, val in p["fields"].items()
        )
        sections.append(
            f"### Period: {p['period']} (reported {d.date.isoformat()})\n{body}"
        )
    return header + "\n" + "\n\n".join(sections)
