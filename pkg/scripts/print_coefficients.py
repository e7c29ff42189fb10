#!/usr/bin/env python3
"""Ordered-fluid coefficient tables for a given parameter set, with the
quadrature cross-checks of their defining angular integrals."""

import argparse
import sys
from pathlib import Path

from rodflow.cli import main

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", default=None,
                    help="JSON config with a params block (default: passive d=3)")
    ap.add_argument("--out", default="out/coeffs")
    args = ap.parse_args()
    argv = ["coeffs", "--out", args.out]
    if args.config is not None:
        argv += ["--config", args.config]
    sys.exit(main(argv))
