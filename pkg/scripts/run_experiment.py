"""Run one named experiment with its defaults, e.g.

    python scripts/run_experiment.py fig2-fit-vs-T runs/fig2
    python scripts/run_experiment.py fig3-chaos-scan runs/fig3 --jobs 4
"""

import sys

from qaction.cli import main

if __name__ == "__main__":
    if len(sys.argv) < 3:
        sys.exit(__doc__)
    name, out, *rest = sys.argv[1:]
    sys.exit(main(["--experiment", name, "--out", out, *rest]))
