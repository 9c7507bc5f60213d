"""
Scenario files, CSV output and re-checking
==========================================

The same pipeline the ``fwguide`` command uses.
"""

import tempfile
from dataclasses import replace
from pathlib import Path

from fwguide import scenarios

out = Path(tempfile.mkdtemp())
sc = replace(scenarios.load_preset("sim1a-gradient"), name="my-run", seed=7)
path = scenarios.write_scenario(sc, out / "my-run.json")
print(path.read_text()[:200], "...")

res = scenarios.run_scenario(scenarios.load_scenario(path), out)
print("exit code", res.exit_code, "csv", res.csv_path.name)
print(res.csv_path.read_text().splitlines()[0])

# %%
# The certificate can be re-run from the stored trajectory alone.
code, summary = scenarios.check_trajectory(res.csv_path, sc)
print("check:", code, summary["passed"], summary["final_delta"])

# %%
# Batch runs are ordered by name and identical for any number of workers.
rows = scenarios.batch("sim2*", out / "batch", jobs=2)
print([(r["name"], r["exit_code"]) for r in rows])
