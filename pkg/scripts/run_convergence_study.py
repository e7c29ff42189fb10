#!/usr/bin/env python3
"""Hydrodynamic-limit rate study with the standard well-prepared protocol.

Runs the kinetic solver against the order-(0+1) hierarchy over the epsilon
sweep and reports log-log slopes.  Pass --navier-stokes for the Re = 1
variant.  Expect a few minutes of runtime at the default resolution.
"""

import argparse
import sys
from pathlib import Path

from rodflow.cli import main

CONFIGS = Path(__file__).parent / "configs"

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--navier-stokes", action="store_true",
                    help="Re = 1 prognostic-velocity variant")
    ap.add_argument("--out", default="out/convergence")
    ap.add_argument("--threads", type=int, default=None)
    args = ap.parse_args()
    cfg = CONFIGS / ("convergence_navier_stokes.json" if args.navier_stokes
                     else "convergence_stokes.json")
    argv = ["convergence", "--config", str(cfg), "--out", args.out]
    if args.threads is not None:
        argv += ["--threads", str(args.threads)]
    sys.exit(main(argv))
