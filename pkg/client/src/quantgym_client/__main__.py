"""Run the scripted episode from the command line.

    python -m quantgym_client --endpoint http://127.0.0.1:8000 \
        --symbol MSFT --date 2025-05-16

The endpoint may also come from the QUANTGYM_ENDPOINT environment variable.
"""

from __future__ import annotations

import argparse
import json
import sys

from .client import ClientError
from .scripted import run_scripted_episode


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="quantgym-client")
    parser.add_argument("--endpoint", help="service base URL (or QUANTGYM_ENDPOINT)")
    parser.add_argument("--symbol", required=True)
    parser.add_argument("--date", required=True, help="episode trading day (ISO)")
    args = parser.parse_args(argv)
    try:
        session, reward = run_scripted_episode(
            args.endpoint, symbol=args.symbol, date=args.date
        )
    except ClientError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    decision = session.steps[-1]["action"]
    print(json.dumps({
        "episode_id": session.episode_id,
        "decision": decision,
        "reward": reward,
    }, indent=2))
    return 0


if __name__ == "__main__":
    sys.exit(main())
