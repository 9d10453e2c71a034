"""Client SDK for the quantgym episode service."""

from .client import (
    ClientError,
    ClientSession,
    ConnectionFailed,
    ServerRejected,
    call_tool,
    decide,
    open_episode,
    resolve_endpoint,
)
from .scripted import run_scripted_episode

__all__ = [
    "ClientError",
    "ClientSession",
    "ConnectionFailed",
    "ServerRejected",
    "call_tool",
    "decide",
    "open_episode",
    "resolve_endpoint",
    "run_scripted_episode",
]

__version__ = "0.1.0"
