"""Trajectory scoring: outcome, format, and tool-use components.

The outcome side classifies the market regime from an exponentially
weighted forward return and pays a fixed matrix value for the chosen
action. The process side penalizes reasoning traces outside a token band,
tool-call counts outside a call band, the degenerate collect-then-conclude
pattern, and malformed calls. The total is

    total = outcome_weight * outcome + format + tool

with the outcome term dominating by construction: the default penalties
are small against outcome_weight * (+/-1).
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from enum import Enum

from .env import DecisionAction, Trajectory
from .marketdata import BarSeries


class RewardError(Exception):
    pass


class InsufficientFuture(RewardError):
    def __init__(self, needed: int, available: int):
        super().__init__(
            f"needs {needed} future trading days beyond the decision day, have {available}"
        )
        self.needed = needed
        self.available = available


class Regime(str, Enum):
    HIGHLY_BULLISH = "highly_bullish"
    HIGHLY_BEARISH = "highly_bearish"
    SIDEWAYS = "sideways"


@dataclass(frozen=True)
class RewardConfig:
    """Scoring knobs. Defaults follow the shipped configuration."""

    horizon: int = 7                 # forward-return horizon in trading days
    decay: float = 0.8               # exponential decay of horizon weights, in (0,1)
    regime_threshold: float = 0.015  # forward-return threshold separating regimes
    outcome_weight: float = 5.0      # multiplier on the outcome score
    min_tokens: int = 200            # reasoning-length band (whitespace tokens)
    max_tokens: int = 600
    min_tool_calls: int = 4          # scored tool-call band
    max_tool_calls: int = 8
    format_penalty: float = 0.5      # reasoning length outside the token band
    band_penalty: float = 0.5        # tool-call count outside the call band
    pattern_penalty: float = 0.5     # collect-then-conclude pattern
    malformed_penalty: float = 0.25  # per malformed call
    malformed_cap: float = 1.0       # cap on total malformed penalty
    token_mode: str = "whitespace"   # or "chars4": len(text) // 4

    def __post_init__(self):
        if not 0.0 < self.decay < 1.0:
            raise ValueError("decay must lie in (0, 1)")
        if self.regime_threshold <= 0.0:
            raise ValueError("regime_threshold must be positive")
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if self.min_tokens >= self.max_tokens:
            raise ValueError("min_tokens must be < max_tokens")
        if self.min_tool_calls > self.max_tool_calls:
            raise ValueError("min_tool_calls must be <= max_tool_calls")
        if self.outcome_weight <= 0.0:
            raise ValueError("outcome_weight must be positive")
        if self.token_mode not in ("whitespace", "chars4"):
            raise ValueError("token_mode must be 'whitespace' or 'chars4'")


@dataclass(frozen=True)
class RewardBreakdown:
    forward_return: float
    regime: Regime
    outcome: float
    format: float
    tool: float
    total: float

    def to_dict(self) -> dict:
        d = asdict(self)
        d["regime"] = self.regime.value
        return d


def forward_return_weights(horizon: int, decay: float) -> list[float]:
    """Normalized exponential weights for horizons 1..H; they sum to 1."""
    raw = [decay ** h for h in range(1, horizon + 1)]
    total = sum(raw)
    return [w / total for w in raw]


def forward_return(prices: list[float], t: int, cfg: RewardConfig) -> float:
    """Decay-weighted average of forward returns off the next day's price.

    Uses prices at trading-day indices t+1 .. t+H+1; the h-step component is
    prices[t+h+1] / prices[t+1] - 1. Raises InsufficientFuture when fewer
    than H+1 future prices exist beyond index t.
    """
    needed = cfg.horizon + 1
    available = len(prices) - 1 - t
    if t < 0 or available < needed:
        raise InsufficientFuture(needed, max(available, 0))
    base = prices[t + 1]
    weights = forward_return_weights(cfg.horizon, cfg.decay)
    return sum(
        w * (prices[t + 1 + h] / base - 1.0) for h, w in enumerate(weights, start=1)
    )


def classify_regime(r: float, threshold: float) -> Regime:
    """Threshold the forward return; the boundary |r| == threshold is sideways."""
    if threshold <= 0.0:
        raise ValueError("threshold must be positive")
    if r > threshold:
        return Regime.HIGHLY_BULLISH
    if r < -threshold:
        return Regime.HIGHLY_BEARISH
    return Regime.SIDEWAYS


#: Discrete outcome matrix. Fighting a strong trend costs more (-1.0) than
#: sitting one out (-0.75); acting in a sideways market costs -0.5.
OUTCOME_MATRIX: dict[tuple[Regime, DecisionAction], float] = {
    (Regime.HIGHLY_BULLISH, DecisionAction.BUY): 1.0,
    (Regime.HIGHLY_BULLISH, DecisionAction.SELL): -1.0,
    (Regime.HIGHLY_BULLISH, DecisionAction.HOLD): -0.75,
    (Regime.HIGHLY_BEARISH, DecisionAction.BUY): -1.0,
    (Regime.HIGHLY_BEARISH, DecisionAction.SELL): 1.0,
    (Regime.HIGHLY_BEARISH, DecisionAction.HOLD): -0.75,
    (Regime.SIDEWAYS, DecisionAction.BUY): -0.5,
    (Regime.SIDEWAYS, DecisionAction.SELL): -0.5,
    (Regime.SIDEWAYS, DecisionAction.HOLD): 1.0,
}


def outcome_score(regime: Regime, action: DecisionAction) -> float:
    return OUTCOME_MATRIX[(regime, action)]


def count_tokens(texts: list[str], cfg: RewardConfig) -> int:
    joined = " ".join(texts)
    if cfg.token_mode == "chars4":
        return len(joined) // 4
    return len(joined.split())


def format_score(trajectory: Trajectory, cfg: RewardConfig) -> float:
    """0 inside the token band, -format_penalty outside (including empty)."""
    tokens = count_tokens(trajectory.reasoning_texts, cfg)
    if cfg.min_tokens <= tokens <= cfg.max_tokens:
        return 0.0
    return -cfg.format_penalty


def tool_score(trajectory: Trajectory, cfg: RewardConfig) -> float:
    """Band term + collect-then-conclude term + capped malformed term.

    The pattern term fires when every successful call sits in a single
    assistant turn and the decision follows that turn directly (the only
    content after it is the closing reasoning/answer turn).
    """
    n = trajectory.tool_calls
    score = 0.0
    if not (cfg.min_tool_calls <= n <= cfg.max_tool_calls):
        score -= cfg.band_penalty
    if n >= 2:
        per_turn = trajectory.tool_calls_per_turn
        bearing = [i for i, c in enumerate(per_turn) if c > 0]
        if len(bearing) == 1 and bearing[0] >= len(per_turn) - 2:
            score -= cfg.pattern_penalty
    malformed = min(trajectory.malformed_calls * cfg.malformed_penalty, cfg.malformed_cap)
    score -= malformed
    return score


def locate_decision_day(prices: BarSeries, trajectory: Trajectory) -> int:
    idx = prices.index_of(trajectory.curr_date)
    if idx is None:
        raise RewardError(
            f"decision day {trajectory.curr_date} not found in the price series"
        )
    return idx


def score_trajectory(
    trajectory: Trajectory, prices: BarSeries, cfg: RewardConfig
) -> RewardBreakdown:
    """Compose forward return, regime, outcome, format, and tool scores."""
    t = locate_decision_day(prices, trajectory)
    r = forward_return(prices.closes, t, cfg)
    regime = classify_regime(r, cfg.regime_threshold)
    outcome = outcome_score(regime, trajectory.final_action)
    fmt = format_score(trajectory, cfg)
    tool = tool_score(trajectory, cfg)
    total = cfg.outcome_weight * outcome + fmt + tool
    return RewardBreakdown(
        forward_return=r,
        regime=regime,
        outcome=outcome,
        format=fmt,
        tool=tool,
        total=total,
    )
