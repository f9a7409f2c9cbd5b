"""
Batch runs from JSON configs
============================

Every experiment is a JSON document.  ``schro-maxlab run`` writes a CSV of
results and a JSON summary with the pass/fail of each registered check.
The same thing from Python:
"""

import json
import sys
import tempfile
from pathlib import Path

from schro_maxlab import cli

here = Path(__file__).parent / "configs"
out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(tempfile.mkdtemp(prefix="schro-maxlab-"))

for line in cli.list_experiments():
    print(line)

for name in ("suffsum_interval", "covernum_cantor", "exponents", "propagate"):
    code = cli.main(["run", str(here / f"{name}.json"), "--out", str(out)])
    print(f"  exit {code}")

summary = json.loads((out / "suffsum_summary.json").read_text())
print(summary["metrics"]["verdict"], summary["inputs_hash"][:12])
print((out / "covernum.csv").read_text())
