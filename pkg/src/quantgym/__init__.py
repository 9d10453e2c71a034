"""Deterministic daily-trading decision environment and backtesting toolkit.

Subpackages:
    marketdata  -- corpus ingestion and time-bounded, leakage-guarded queries
    indicators  -- technical indicator computation and tool-text rendering
    env         -- episode lifecycle, query tools, trajectory recording
    reward      -- trajectory scoring (outcome / format / tool components)
    backtest    -- portfolio simulation and ARR / Sharpe / max-drawdown metrics
    baselines   -- buy-and-hold, MACD crossover, and z-score mean-reversion signals
    service     -- HTTP episode service
    cli         -- operator command line
"""

__version__ = "0.1.0"
