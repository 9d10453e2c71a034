"""Operator command line.

Subcommands:
    ingest      validate a corpus directory and print a summary
    indicators  dump an indicator series as CSV (date,value[,value2,value3])
    backtest    run a baseline / replayed / agent-driven backtest
    score       score a trajectory JSON-lines file against a price CSV
    serve       launch the HTTP episode service

Exit codes: 0 success, 1 input error (unreadable/invalid files or flags),
2 domain precondition failure (e.g. date range outside the corpus, or not
enough future data to score).

The optional --config file is flat ``key = value`` text; unknown keys are
rejected. Keys mirror the RewardConfig and BacktestConfig field names.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import threading
import time
from dataclasses import fields as dataclass_fields
from datetime import date as Date
from pathlib import Path
from typing import Optional

from . import backtest as btmod
from . import baselines, env, marketdata, reward, service
from .indicators import IndicatorError, IndicatorKind, IndicatorTag, compute_indicator

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_PRECONDITION = 2


class CliError(Exception):
    def __init__(self, message: str, exit_code: int = EXIT_INPUT):
        super().__init__(message)
        self.exit_code = exit_code


class AgentUnreachable(CliError):
    def __init__(self, message: str):
        super().__init__(message, exit_code=EXIT_PRECONDITION)


# -- config file -------------------------------------------------------------

_REWARD_KEYS = {f.name for f in dataclass_fields(reward.RewardConfig)}
_BACKTEST_KEYS = {f.name for f in dataclass_fields(btmod.BacktestConfig)}


def _parse_scalar(text: str):
    text = text.strip()
    if len(text) >= 2 and text[0] == text[-1] and text[0] in "\"'":
        return text[1:-1]
    for caster in (int, float):
        try:
            return caster(text)
        except ValueError:
            continue
    return text


def load_config_file(path: str | Path) -> tuple[reward.RewardConfig, btmod.BacktestConfig]:
    """Parse a flat key = value config file into the two config objects."""
    reward_kwargs: dict = {}
    backtest_kwargs: dict = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise CliError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        parsed = _parse_scalar(value)
        if key in _REWARD_KEYS:
            reward_kwargs[key] = parsed
        elif key in _BACKTEST_KEYS:
            backtest_kwargs[key] = parsed
        else:
            raise CliError(f"{path}:{lineno}: unknown config key {key!r}")
    try:
        return reward.RewardConfig(**reward_kwargs), btmod.BacktestConfig(**backtest_kwargs)
    except (TypeError, ValueError) as exc:
        raise CliError(f"{path}: {exc}") from None


def _load_configs(args) -> tuple[reward.RewardConfig, btmod.BacktestConfig]:
    if getattr(args, "config", None):
        return load_config_file(args.config)
    return reward.RewardConfig(), btmod.BacktestConfig()


def _load_corpus(args) -> marketdata.Corpus:
    if not args.corpus:
        raise CliError("--corpus is required for this command")
    try:
        return marketdata.load_corpus(args.corpus)
    except marketdata.MarketDataError as exc:
        raise CliError(f"corpus load failed: {exc}") from None


def _parse_date(text: str, flag: str) -> Date:
    try:
        return Date.fromisoformat(text)
    except ValueError:
        raise CliError(f"{flag}: {text!r} is not an ISO-8601 date") from None


def _write_atomic(path: Path, payload: str) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(payload)
    tmp.replace(path)


# -- subcommands -------------------------------------------------------------

def cmd_ingest(args) -> int:
    corpus = _load_corpus(args)
    summary = {
        "symbols": {
            sym: {
                "bars": len(series),
                "first": series.bars[0].date.isoformat(),
                "last": series.bars[-1].date.isoformat(),
            }
            for sym, series in sorted(corpus.bars.items())
        },
        "documents": {},
    }
    counts: dict[str, int] = {}
    for (category, _symbol), docs in corpus.documents.items():
        counts[category.value] = counts.get(category.value, 0) + len(docs)
    summary["documents"] = dict(sorted(counts.items()))
    print(json.dumps(summary, indent=2))
    return EXIT_OK


def cmd_indicators(args) -> int:
    corpus = _load_corpus(args)
    series = corpus.series(args.symbol)
    if series is None:
        raise CliError(f"unknown symbol {args.symbol!r}", EXIT_PRECONDITION)
    curr = _parse_date(args.date, "--date")
    if args.look_back < 0:
        raise CliError("--look-back must be >= 0")
    try:
        kind = IndicatorKind.default(args.kind)
    except ValueError:
        raise CliError(f"unknown indicator kind {args.kind!r}") from None
    history = marketdata.history_through(series, curr)
    try:
        ind = compute_indicator(history, kind)
    except IndicatorError as exc:
        raise CliError(str(exc), EXIT_PRECONDITION) from None
    start = curr.toordinal() - args.look_back
    rows = [
        [d.isoformat()] + [repr(component) for component in v]
        for d, v in zip(ind.dates, ind.values)
        if start <= d.toordinal() <= curr.toordinal()
    ]
    out = "\n".join(",".join(row) for row in rows) + "\n"
    if args.out:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        path = out_dir / f"{args.symbol}_{kind.name()}.csv"
        _write_atomic(path, out)
        print(str(path))
    else:
        sys.stdout.write(out)
    return EXIT_OK


def _slice_series(
    series: marketdata.BarSeries, start: Date, end: Date
) -> marketdata.BarSeries:
    if start > end:
        raise CliError("--start must not be after --end")
    first, last = series.bars[0].date, series.bars[-1].date
    if start < first or end > last:
        raise CliError(
            f"date range {start}..{end} outside corpus coverage {first}..{last}",
            EXIT_PRECONDITION,
        )
    bars = tuple(b for b in series.bars if start <= b.date <= end)
    if len(bars) < 2:
        raise CliError("date range covers fewer than two trading days", EXIT_PRECONDITION)
    return marketdata.BarSeries(symbol=series.symbol, bars=bars)


def _signals_from_decisions_file(
    path: str, window: marketdata.BarSeries
) -> list[env.DecisionAction]:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise CliError(f"cannot read decisions file: {exc}") from None
    actions: dict[Date, env.DecisionAction] = {}
    reader = csv.reader(text.splitlines())
    for lineno, row in enumerate(reader, start=1):
        if not row or row[0].strip().lower() == "date":
            continue
        if len(row) != 2:
            raise CliError(f"{path}:{lineno}: expected 'date,action'")
        try:
            day = Date.fromisoformat(row[0].strip())
            action = env.DecisionAction(row[1].strip())
        except ValueError as exc:
            raise CliError(f"{path}:{lineno}: {exc}") from None
        actions[day] = action
    signals = []
    for i, day in enumerate(window.dates):
        if day in actions:
            signals.append(actions[day])
        elif i == len(window) - 1:
            break  # final day decision is optional; it cannot execute anyway
        else:
            raise CliError(f"decisions file is missing {day.isoformat()}")
    return signals


def _serve_in_process(app) -> tuple["object", str]:
    """Start a uvicorn server on an ephemeral localhost port."""
    import uvicorn

    config = uvicorn.Config(app, host="127.0.0.1", port=0, log_level="warning")
    server = uvicorn.Server(config)
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    deadline = time.monotonic() + 10.0
    while not server.started:
        if time.monotonic() > deadline:
            raise CliError("in-process service failed to start")
        time.sleep(0.02)
    port = server.servers[0].sockets[0].getsockname()[1]
    return server, f"http://127.0.0.1:{port}"


def _signals_from_agent(
    agent_url: str,
    window: marketdata.BarSeries,
    corpus: marketdata.Corpus,
    reward_cfg: reward.RewardConfig,
    out_dir: Path,
) -> list[env.DecisionAction]:
    """One service-driven episode per trading day, decided by the agent."""
    import httpx

    app = service.create_app(
        corpus, reward_cfg, trajectory_dir=out_dir / "trajectories"
    )
    server, base_url = _serve_in_process(app)
    signals = []
    try:
        with httpx.Client(timeout=60.0) as client:
            for day in window.dates:
                try:
                    resp = client.post(
                        agent_url.rstrip("/") + "/decide",
                        json={
                            "service": base_url,
                            "symbol": window.symbol,
                            "date": day.isoformat(),
                        },
                    )
                except httpx.HTTPError as exc:
                    raise AgentUnreachable(f"agent at {agent_url}: {exc}") from None
                if resp.status_code != 200:
                    raise AgentUnreachable(
                        f"agent at {agent_url} returned HTTP {resp.status_code}"
                    )
                try:
                    action = env.DecisionAction(resp.json()["action"])
                except (KeyError, ValueError) as exc:
                    raise CliError(f"agent returned an invalid action: {exc}") from None
                signals.append(action)
    finally:
        server.should_exit = True
    return signals


def cmd_backtest(args) -> int:
    corpus = _load_corpus(args)
    reward_cfg, backtest_cfg = _load_configs(args)
    out_dir = Path(args.out or ".")
    out_dir.mkdir(parents=True, exist_ok=True)
    start = _parse_date(args.start, "--start")
    end = _parse_date(args.end, "--end")

    reports = []
    for symbol in args.symbol:
        series = corpus.series(symbol)
        if series is None:
            raise CliError(f"unknown symbol {symbol!r}", EXIT_PRECONDITION)
        window = _slice_series(series, start, end)
        if args.strategy:
            signals = baselines.StrategyKind(args.strategy).signals(window)
        elif args.decisions:
            signals = _signals_from_decisions_file(args.decisions, window)
        else:
            signals = _signals_from_agent(
                args.agent, window, corpus, reward_cfg, out_dir
            )
        try:
            report = btmod.run_backtest(signals, window, backtest_cfg)
        except btmod.BacktestError as exc:
            raise CliError(str(exc), EXIT_PRECONDITION) from None
        payload = report.to_dict()
        if not args.no_timestamp:
            payload["generated_at"] = time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())
        _write_atomic(out_dir / f"{symbol}_report.json", json.dumps(payload, indent=2) + "\n")
        if args.svg:
            _write_atomic(
                out_dir / f"{symbol}_equity.svg",
                btmod.equity_curve_svg(list(report.values)),
            )
        if args.strategy or args.agent:
            lines = ["date,action"] + [
                f"{d.isoformat()},{a.value}" for d, a in zip(window.dates, signals)
            ]
            _write_atomic(out_dir / f"{symbol}_signals.csv", "\n".join(lines) + "\n")
        reports.append(report)
        print(
            f"{symbol}: T={report.trading_days} "
            f"arr={report.arr:.6f} sr={report.sharpe:.6f} mdd={report.mdd:.6f}"
        )

    if args.average and reports:
        n = len(reports)
        avg = {
            "symbols": [r.symbol for r in reports],
            "metrics": {
                "arr": sum(r.arr for r in reports) / n,
                "sr": sum(r.sharpe for r in reports) / n,
                "mdd": sum(r.mdd for r in reports) / n,
            },
        }
        _write_atomic(out_dir / "average_report.json", json.dumps(avg, indent=2) + "\n")
    return EXIT_OK


def cmd_score(args) -> int:
    try:
        text = Path(args.trajectory).read_text()
    except OSError as exc:
        raise CliError(f"cannot read trajectory: {exc}") from None
    try:
        trajectory = env.Trajectory.from_jsonl(text)
    except ValueError as exc:
        raise CliError(f"{args.trajectory}: {exc}") from None
    try:
        prices = marketdata.ingest_bars(args.prices, trajectory.symbol)
    except (OSError, marketdata.MarketDataError) as exc:
        raise CliError(f"{args.prices}: {exc}") from None
    reward_cfg, _ = _load_configs(args)
    try:
        breakdown = reward.score_trajectory(trajectory, prices, reward_cfg)
    except reward.InsufficientFuture as exc:
        raise CliError(f"cannot score: {exc}", EXIT_PRECONDITION) from None
    except reward.RewardError as exc:
        raise CliError(str(exc), EXIT_PRECONDITION) from None
    payload = breakdown.to_dict()
    payload["config"] = {
        f.name: getattr(reward_cfg, f.name) for f in dataclass_fields(reward.RewardConfig)
    }
    blob = json.dumps(payload, indent=2) + "\n"
    if args.out:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        path = out_dir / (Path(args.trajectory).stem + "_reward.json")
        _write_atomic(path, blob)
        print(str(path))
    else:
        sys.stdout.write(blob)
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    corpus = _load_corpus(args)
    reward_cfg, _ = _load_configs(args)
    app = service.create_app(
        corpus,
        reward_cfg,
        trajectory_dir=args.trajectory_dir,
        session_ttl_seconds=args.session_ttl,
    )
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return EXIT_OK


# -- parser ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--corpus", help="corpus directory (bars/ + docs/)")
    common.add_argument("--config", help="flat key = value config file")
    common.add_argument("--out", help="output directory")

    parser = argparse.ArgumentParser(prog="quantgym")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("ingest", parents=[common], help="validate and summarize a corpus")

    p_ind = sub.add_parser("indicators", parents=[common], help="dump an indicator series")
    p_ind.add_argument("--symbol", required=True)
    p_ind.add_argument("--kind", required=True,
                       choices=[tag.value for tag in IndicatorTag])
    p_ind.add_argument("--date", required=True, help="window end date (ISO)")
    p_ind.add_argument("--look-back", type=int, default=14, dest="look_back")

    p_bt = sub.add_parser("backtest", parents=[common], help="run a backtest")
    p_bt.add_argument("--symbol", action="append", required=True)
    p_bt.add_argument("--start", required=True)
    p_bt.add_argument("--end", required=True)
    source = p_bt.add_mutually_exclusive_group(required=True)
    source.add_argument("--strategy", choices=baselines.StrategyKind.CHOICES)
    source.add_argument("--decisions", help="CSV decisions file (date,action)")
    source.add_argument("--agent", help="external agent endpoint URL")
    p_bt.add_argument("--svg", action="store_true", help="also write equity-curve SVG")
    p_bt.add_argument("--average", action="store_true",
                      help="write the cross-symbol mean of ARR/SR/MDD")
    p_bt.add_argument("--no-timestamp", action="store_true", dest="no_timestamp",
                      help="omit generated_at for byte-identical reports")

    p_score = sub.add_parser("score", parents=[common], help="score a trajectory file")
    p_score.add_argument("trajectory", help="trajectory JSON-lines file")
    p_score.add_argument("prices", help="bars CSV for the episode's symbol")

    p_serve = sub.add_parser("serve", parents=[common], help="launch the episode service")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8000)
    p_serve.add_argument("--trajectory-dir", default="trajectories", dest="trajectory_dir")
    p_serve.add_argument("--session-ttl", type=float, dest="session_ttl",
                         default=service.DEFAULT_SESSION_TTL_SECONDS)

    return parser


_COMMANDS = {
    "ingest": cmd_ingest,
    "indicators": cmd_indicators,
    "backtest": cmd_backtest,
    "score": cmd_score,
    "serve": cmd_serve,
}


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
