"""Run every experiment into runs/<name>/ and print a one-line status per
experiment.  The resolution study and the chaos scan take about ten minutes
each on one core; pass --quick to skip them."""

import argparse
import sys
import time
from pathlib import Path

from qaction.cli import EXPERIMENTS, main

SLOW = {"resolution-study", "fig3-chaos-scan"}


def run_all(root: Path, quick: bool, jobs: int | None) -> dict:
    status = {}
    for name in EXPERIMENTS:
        if quick and name in SLOW:
            continue
        t0 = time.perf_counter()
        argv = ["--experiment", name, "--out", str(root / name)]
        if jobs:
            argv += ["--jobs", str(jobs)]
        status[name] = (main(argv), time.perf_counter() - t0)
    return status


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="runs")
    ap.add_argument("--quick", action="store_true")
    ap.add_argument("--jobs", type=int)
    args = ap.parse_args()
    status = run_all(Path(args.out), args.quick, args.jobs)
    for name, (rc, wall) in status.items():
        print(f"{name:<22} exit {rc}  {wall:7.1f} s")
    sys.exit(max(rc for rc, _ in status.values()))
