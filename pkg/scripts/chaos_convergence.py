"""Convergence of the chaotic fraction with integration time: R(E) for the
classical parameters at t_end = 500, 1000, 2000, 4000 (CSV on stdout)."""

import argparse
import sys

from qaction.chaos2d import ChaosOptions, chaotic_fraction
from qaction.cli import csv_text
from qaction.model import CLASSICAL_2D

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--energies", type=float, nargs="+", default=[2.0, 10.0, 20.0, 40.0, 80.0])
    ap.add_argument("--t-end", type=float, nargs="+", default=[500.0, 1000.0, 2000.0, 4000.0])
    ap.add_argument("--n-ic", type=int, default=50)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args()
    rows = []
    for t_end in args.t_end:
        opts = ChaosOptions(t_end=t_end, jobs=args.jobs)
        for E in args.energies:
            sc = chaotic_fraction(CLASSICAL_2D, E, args.n_ic, args.seed, opts)
            rows.append({"t_end": t_end, "E": E, "R": sc.R, "sigma": sc.sigma,
                         "threshold": sc.threshold, "baseline": sc.baseline})
    sys.stdout.write(csv_text(rows))
