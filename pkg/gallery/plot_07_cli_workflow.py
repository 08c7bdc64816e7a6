"""
Command-line workflow
=====================

The same pipeline runs from files: ``simulate`` writes a TOA table and
the ground truth, ``localize`` reads them back and evaluates against
``truth.json`` when it sits next to the table.
"""

import json
import tempfile
from pathlib import Path

from arraycalib.cli import main

work = Path(tempfile.mkdtemp())
scenario = work / "scenario.json"
scenario.write_text(json.dumps({"m": 10, "k": 10, "noise_sigma": 1e-5}))

main(["simulate", str(scenario), "--seed", "3", "--out", str(work / "data")])
main(["localize", str(work / "data" / "toa.csv"), "--out", str(work / "result")])

# %%
results = json.loads((work / "result" / "results.json").read_text())
print("status:", results["sdr"]["status"], "refinement:", results["refine"]["reason"])
print("evaluation:", results["evaluation"])
