#!/usr/bin/env python3
"""Boussinesq-reformulated steady Stokes model vs the hierarchical solution:
H1 distance over the epsilon sweep with its log-log slope."""

import argparse
import sys
from pathlib import Path

from rodflow.cli import main

CONFIGS = Path(__file__).parent / "configs"

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", default=str(CONFIGS / "boussinesq_compare.json"))
    ap.add_argument("--out", default="out/boussinesq")
    args = ap.parse_args()
    sys.exit(main(["boussinesq-compare", "--config", args.config,
                   "--out", args.out]))
