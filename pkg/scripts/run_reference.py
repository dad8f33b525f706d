"""Run every CLI stage on the reference parameters.

    python scripts/run_reference.py [OUTPUT_DIR] [N_PATHS]

The simulation horizon is 120 years: almost no path stops once Z drifts up
to the barrier, so a longer horizon only adds runtime.
"""

import sys

from retiregame.cli import main

out = sys.argv[1] if len(sys.argv) > 1 else "reference_out"
n_paths = sys.argv[2] if len(sys.argv) > 2 else "200000"
common = ["-o", out, "-s", f"sim.n_paths={n_paths}", "-s", "sim.horizon=120"]

for cmd in ("solve", "grid", "policy", "verify"):
    rc = main([cmd, *common])
    print(f"{cmd}: exit {rc}")
    if rc:
        sys.exit(rc)
