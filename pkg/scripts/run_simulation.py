#!/usr/bin/env python3
"""Single coupled kinetic run with periodic field snapshots (binary) and a
diagnostics manifest (JSON)."""

import argparse
import sys
from pathlib import Path

from rodflow.cli import main

CONFIGS = Path(__file__).parent / "configs"

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", default=str(CONFIGS / "simulate_small.json"))
    ap.add_argument("--out", default="out/simulate")
    ap.add_argument("--seed", type=int, default=None)
    args = ap.parse_args()
    argv = ["simulate", "--config", args.config, "--out", args.out]
    if args.seed is not None:
        argv += ["--seed", str(args.seed)]
    sys.exit(main(argv))
