#!/usr/bin/env python3
"""Reproduce the paper-scale convergence comparison (all three dim tuples).

Writes out/paper_fig1/results.csv; plot residual_rel vs k per method with any
CSV plotter to recover the figure's style.  Pass --desk to run the small
instances only.
"""
import pathlib
import sys

from sella.cli import main

ROOT = pathlib.Path(__file__).resolve().parent.parent

if __name__ == "__main__":
    cfg = ROOT / "configs" / "paper_fig1.json"
    out = ROOT / "out" / "paper_fig1"
    args = ["bench", "--config", str(cfg), "--out", str(out)]
    if "--desk" not in sys.argv[1:]:
        args.append("--full")
    sys.exit(main(args))
