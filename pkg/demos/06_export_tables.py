"""
Exporting results from the command line
=======================================

The same steps through ``decpomdp-pbp``: solve, save the strategies,
verify them against brute force and export tables.
"""

# %%
import json
import tempfile
from pathlib import Path

from decpomdp_pbp import cli

out = Path(tempfile.mkdtemp())
cli.main(["solve", "--scenario", "paper_example", "--out", str(out / "report.json")])

# %%
code = cli.main(["verify", "--scenario", "paper_example",
                 "--strategies", str(out / "report.json")])
print("verify exit code", code)

# %%
cli.main(["export", "--scenario", "paper_example", "--out", str(out / "tables.json")])
for row in json.loads((out / "tables.json").read_text())["sample_values"]:
    print(row["agent"], " ".join(row["realization"]), round(row["value"], 3), row["action"])

cli.main(["export", "--scenario", "paper_example", "--format", "csv",
          "--out", str(out / "tables.csv")])
print((out / "tables.csv").read_text().splitlines()[0])
