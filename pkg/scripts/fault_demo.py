"""Inject a 5% barrier error and show that verification catches it.

The faulty solution keeps its coefficients consistent with the shifted
barrier, so only the optimality checks (grid sign pattern and the
controller-side deviation) can notice.
"""

import json
import sys
from pathlib import Path

from retiregame.cli import main

out = Path(sys.argv[1] if len(sys.argv) > 1 else "fault_out")
rc = main(["verify", "-o", str(out), "-s", "verify.barrier_shift=1.05",
           "-s", "sim.n_paths=200000", "-s", "sim.horizon=120"])
doc = json.loads((out / "sim_report.json").read_text())
print(f"exit {rc}; failed checks: {', '.join(doc['failed']) or 'none'}")
for name in doc["failed"]:
    c = doc["checks"].get(name)
    if c:
        print(f"  {name}: estimate {c['estimate']:.6g} +- {c['stderr']:.2g}, oracle {c['oracle']:.6g}")
sys.exit(0 if rc == 3 else 1)
