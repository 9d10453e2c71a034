"""HTTP client for the episode service.

Talks JSON over HTTP only; it has no dependency on the service's internals.
A ClientSession keeps a local mirror of everything it sent and received so
callers can diff it against the server's persisted trajectory.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Optional

import httpx

ENDPOINT_ENV_VAR = "QUANTGYM_ENDPOINT"


class ClientError(Exception):
    pass


class ConnectionFailed(ClientError):
    pass


class ServerRejected(ClientError):
    def __init__(self, status_code: int, detail: str):
        super().__init__(f"HTTP {status_code}: {detail}")
        self.status_code = status_code
        self.detail = detail


def resolve_endpoint(endpoint: Optional[str] = None) -> str:
    """Explicit argument wins; otherwise fall back to the environment."""
    resolved = endpoint or os.environ.get(ENDPOINT_ENV_VAR)
    if not resolved:
        raise ClientError(
            f"no endpoint given and {ENDPOINT_ENV_VAR} is not set"
        )
    return resolved.rstrip("/")


@dataclass
class ClientSession:
    """One live episode on the server plus a local mirror of its steps."""

    endpoint: str
    episode_id: str
    symbol: str
    date: str
    steps: list[dict] = field(default_factory=list)
    final_reward: Optional[dict] = None

    def _post(self, path: str, payload: dict) -> httpx.Response:
        url = f"{self.endpoint}{path}"
        try:
            response = httpx.post(url, json=payload, timeout=30.0)
        except httpx.HTTPError as exc:
            raise ConnectionFailed(f"{self.endpoint}: {exc}") from None
        if response.status_code != 200:
            detail = response.json().get("detail", response.text)
            raise ServerRejected(response.status_code, detail)
        return response

    def call_tool(self, name: str, arguments: Optional[dict] = None,
                  reasoning: Optional[str] = None) -> str:
        payload: dict = {"name": name, "arguments": arguments or {}}
        if reasoning is not None:
            payload["reasoning"] = reasoning
        response = self._post(f"/episodes/{self.episode_id}/tool", payload)
        text = response.json()["response_text"]
        if reasoning is not None:
            self.steps.append({"type": "reasoning", "text": reasoning})
        if text.startswith("Error:"):
            # malformed call: recorded server-side, nothing enters the history
            return text
        self.steps.append({
            "type": "query", "tool": name,
            "arguments": arguments or {}, "response": text,
        })
        return text

    def decide(self, action: str, reasoning: Optional[str] = None) -> dict:
        payload: dict = {"action": action}
        if reasoning is not None:
            payload["reasoning"] = reasoning
        response = self._post(f"/episodes/{self.episode_id}/decision", payload)
        if reasoning is not None:
            self.steps.append({"type": "reasoning", "text": reasoning})
        self.steps.append({"type": "decision", "action": action})
        body = response.json()
        self.final_reward = body.get("reward")
        return body

    def fetch_trajectory(self) -> str:
        """The server's persisted JSON-lines record for this episode."""
        url = f"{self.endpoint}/episodes/{self.episode_id}/trajectory"
        try:
            response = httpx.get(url, timeout=30.0)
        except httpx.HTTPError as exc:
            raise ConnectionFailed(f"{self.endpoint}: {exc}") from None
        if response.status_code != 200:
            raise ServerRejected(response.status_code, response.text)
        return response.text


def open_episode(
    endpoint: Optional[str] = None,
    symbol: str = "",
    date: str = "",
    max_tool_calls: Optional[int] = None,
) -> ClientSession:
    base = resolve_endpoint(endpoint)
    payload: dict = {"symbol": symbol, "date": date}
    if max_tool_calls is not None:
        payload["max_tool_calls"] = max_tool_calls
    try:
        response = httpx.post(f"{base}/episodes", json=payload, timeout=30.0)
    except httpx.HTTPError as exc:
        raise ConnectionFailed(f"{base}: {exc}") from None
    if response.status_code != 200:
        detail = response.json().get("detail", response.text)
        raise ServerRejected(response.status_code, detail)
    episode_id = response.json()["episode_id"]
    return ClientSession(endpoint=base, episode_id=episode_id, symbol=symbol, date=date)


def call_tool(session: ClientSession, name: str, arguments: Optional[dict] = None,
              reasoning: Optional[str] = None) -> str:
    return session.call_tool(name, arguments, reasoning)


def decide(session: ClientSession, action: str,
           reasoning: Optional[str] = None) -> dict:
    return session.decide(action, reasoning)
