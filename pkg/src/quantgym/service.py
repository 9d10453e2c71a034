"""HTTP episode service.

Exposes the decision environment to external agents as JSON over HTTP:

    POST /episodes                    open an episode -> {episode_id}
    POST /episodes/{id}/tool          tool call       -> {response_text}
    POST /episodes/{id}/decision      decide          -> {trajectory_ref, reward}
    GET  /episodes/{id}/trajectory    persisted JSON-lines record
    GET  /health

Tool requests and the decision request accept an optional ``reasoning``
field carrying the agent's free-text thinking for that turn; it feeds the
format score and the turn structure. Malformed tool calls return HTTP 200
with the error text in-band (the agent must see the error) while the
episode records them for scoring.

Sessions expire after an idle period; expired sessions reject all calls
and are never scored. One in-flight request per episode is enforced with a
per-session lock; the shared corpus is read-only.
"""

from __future__ import annotations

import threading
import time
import uuid
from dataclasses import dataclass, field
from datetime import date as Date
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse, PlainTextResponse

from . import env as envmod
from . import reward as rewardmod
from .marketdata import Corpus

DEFAULT_SESSION_TTL_SECONDS = 30 * 60


@dataclass
class Session:
    episode_id: str
    episode: envmod.Episode
    created_at: float
    deadline: float
    lock: threading.Lock = field(default_factory=threading.Lock)


class SessionTable:
    """Thread-safe episode session registry with idle expiry."""

    def __init__(self, ttl_seconds: float, clock=time.monotonic):
        self.ttl = ttl_seconds
        self.clock = clock
        self._lock = threading.Lock()
        self._sessions: dict[str, Session] = {}

    def create(self, episode: envmod.Episode) -> Session:
        now = self.clock()
        session = Session(
            episode_id=uuid.uuid4().hex,
            episode=episode,
            created_at=now,
            deadline=now + self.ttl,
        )
        with self._lock:
            self._sessions[session.episode_id] = session
        return session

    def get(self, episode_id: str) -> Optional[Session]:
        """Look up a live session, refreshing its idle deadline."""
        now = self.clock()
        with self._lock:
            self._expire_locked(now)
            session = self._sessions.get(episode_id)
            if session is None:
                return None
            session.deadline = now + self.ttl
            return session

    def _expire_locked(self, now: float) -> None:
        dead = [k for k, s in self._sessions.items() if s.deadline < now]
        for k in dead:
            del self._sessions[k]


def _error(status: int, detail: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"detail": detail})


def create_app(
    corpus: Corpus,
    reward_config: Optional[rewardmod.RewardConfig] = None,
    trajectory_dir: str | Path = "trajectories",
    session_ttl_seconds: float = DEFAULT_SESSION_TTL_SECONDS,
    clock=time.monotonic,
) -> FastAPI:
    reward_config = reward_config or rewardmod.RewardConfig()
    trajectory_dir = Path(trajectory_dir)
    trajectory_dir.mkdir(parents=True, exist_ok=True)
    sessions = SessionTable(session_ttl_seconds, clock=clock)
    app = FastAPI(title="quantgym episode service")

    @app.exception_handler(RequestValidationError)
    async def _validation_handler(request: Request, exc: RequestValidationError):
        return _error(400, str(exc.errors()))

    @app.get("/health")
    def health():
        return {"status": "ok", "symbols": corpus.symbols}

    @app.post("/episodes")
    def open_episode(payload: dict):
        symbol = payload.get("symbol")
        date_text = payload.get("date")
        if not isinstance(symbol, str) or not isinstance(date_text, str):
            return _error(400, "symbol and date are required strings")
        try:
            curr_date = Date.fromisoformat(date_text)
        except ValueError:
            return _error(400, f"date {date_text!r} is not an ISO-8601 date")
        max_calls = payload.get("max_tool_calls", envmod.DEFAULT_MAX_TOOL_CALLS)
        if not isinstance(max_calls, int) or isinstance(max_calls, bool) or max_calls < 1:
            return _error(400, "max_tool_calls must be a positive integer")
        config = envmod.EpisodeConfig(
            symbol=symbol, curr_date=curr_date, corpus=corpus, max_tool_calls=max_calls
        )
        try:
            episode = envmod.open_episode(config)
        except envmod.UnknownSymbol:
            return _error(404, f"unknown symbol {symbol!r}")
        except envmod.NotATradingDay:
            return _error(404, f"{date_text} is not a trading day for {symbol}")
        session = sessions.create(episode)
        return {"episode_id": session.episode_id}

    @app.post("/episodes/{episode_id}/tool")
    def call_tool(episode_id: str, payload: dict):
        session = sessions.get(episode_id)
        if session is None:
            return _error(404, "unknown or expired episode")
        name = payload.get("name")
        arguments = payload.get("arguments", {})
        reasoning = payload.get("reasoning")
        if not isinstance(name, str):
            return _error(400, "tool name is required")
        if not isinstance(arguments, dict):
            return _error(400, "arguments must be an object")
        if reasoning is not None and not isinstance(reasoning, str):
            return _error(400, "reasoning must be a string")
        with session.lock:
            try:
                if reasoning is not None:
                    session.episode.append_reasoning(reasoning)
                text = session.episode.execute_query(
                    envmod.QueryAction(tool=name, arguments=arguments)
                )
            except envmod.MalformedArguments as exc:
                return {"response_text": f"Error: {exc}"}
            except envmod.EpisodeTerminated:
                return _error(409, "episode already terminated")
            except envmod.ToolBudgetExhausted as exc:
                return _error(429, str(exc))
        return {"response_text": text}

    @app.post("/episodes/{episode_id}/decision")
    def decide(episode_id: str, payload: dict):
        session = sessions.get(episode_id)
        if session is None:
            return _error(404, "unknown or expired episode")
        action_text = payload.get("action")
        reasoning = payload.get("reasoning")
        if action_text not in ("BUY", "SELL", "HOLD"):
            return _error(400, "action must be one of BUY, SELL, HOLD")
        if reasoning is not None and not isinstance(reasoning, str):
            return _error(400, "reasoning must be a string")
        with session.lock:
            try:
                if reasoning is not None:
                    session.episode.append_reasoning(reasoning)
                trajectory = session.episode.submit_decision(
                    envmod.DecisionAction(action_text)
                )
            except envmod.EpisodeTerminated:
                return _error(409, "episode already terminated")
            path = trajectory_dir / f"{episode_id}.jsonl"
            path.write_text(trajectory.to_jsonl())
            prices = corpus.series(trajectory.symbol)
            body: dict = {"trajectory_ref": episode_id, "reward": None}
            try:
                breakdown = rewardmod.score_trajectory(trajectory, prices, reward_config)
                body["reward"] = breakdown.to_dict()
            except rewardmod.InsufficientFuture:
                body["reward_omitted_reason"] = "insufficient_future"
        return body

    @app.get("/episodes/{episode_id}/trajectory")
    def get_trajectory(episode_id: str):
        # Episode ids are uuid hex; anything else never touches the filesystem.
        if not episode_id.isalnum():
            return _error(404, "no persisted trajectory for this episode")
        path = trajectory_dir / f"{episode_id}.jsonl"
        if not path.exists():
            return _error(404, "no persisted trajectory for this episode")
        return PlainTextResponse(path.read_text(), media_type="application/x-ndjson")

    return app
