#!/usr/bin/env python3
"""Run every scenario with its shipped config into runs/<scenario>/.

Usage: python scripts/run_all.py [--out-root runs] [--seed 0]
The full map and the one-second detection run take a couple of minutes
combined; everything else is instant.
"""

import argparse
import sys
import time
from pathlib import Path

from nvloop.cli import main as nvloop_main

SCENARIOS = ("esr", "inductance", "rabi", "odmr", "tune", "casr", "map")


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out-root", default="runs")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    config_dir = Path(__file__).resolve().parent / "configs"
    failures = 0
    for scenario in SCENARIOS:
        out_dir = Path(args.out_root) / scenario
        started = time.time()
        code = nvloop_main([scenario,
                            "--config", str(config_dir / f"{scenario}.cfg"),
                            "--out", str(out_dir),
                            "--seed", str(args.seed)])
        elapsed = time.time() - started
        status = "ok" if code == 0 else f"exit {code}"
        print(f"== {scenario}: {status} ({elapsed:.1f}s) -> {out_dir}")
        failures += code != 0
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
