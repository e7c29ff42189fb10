#!/usr/bin/env python3
"""Viscometric sweep for the passive d = 3 suspension: steady shear,
elongation and oscillatory shear over an epsilon ladder, compared with the
ordered-fluid predictions.  Writes rheometry.csv and a summary JSON."""

import argparse
import sys
from pathlib import Path

from rodflow.cli import main

CONFIGS = Path(__file__).parent / "configs"

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", default=str(CONFIGS / "rheometry_passive_d3.json"))
    ap.add_argument("--out", default="out/rheometry")
    args = ap.parse_args()
    sys.exit(main(["rheometry", "--config", args.config, "--out", args.out]))
