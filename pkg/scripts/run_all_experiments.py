#!/usr/bin/env python3
"""Run every config template in configs/ and report bound checks.

Usage: python scripts/run_all_experiments.py [--workers N] [--seed SEED]
"""

import argparse
import pathlib
import sys

from rotquant.cli import main as cli_main

ROOT = pathlib.Path(__file__).resolve().parent.parent


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--seed", type=int, default=None)
    args = ap.parse_args()

    worst = 0
    for cfg in sorted((ROOT / "configs").glob("*.yaml")):
        print(f"=== {cfg.name} ===")
        argv = ["run", "--config", str(cfg), "--workers", str(args.workers)]
        if args.seed is not None:
            argv += ["--seed-override", str(args.seed)]
        worst = max(worst, cli_main(argv))
    return worst


if __name__ == "__main__":
    sys.exit(main())
