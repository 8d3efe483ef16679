"""
The command line
================

Every run is described by a JSON config.  ``superhedge price|check|hedge|converge``
prints a JSON report; the same commands are callable in-process.
"""
import json
import tempfile
from pathlib import Path

from superhedge.cli import run_command

configs = Path(__file__).resolve().parents[1] / "configs"

###############################################################################
# Price the fixed-fee call and look at the arbitrage rows.

code, doc = run_command(["price", "--config", str(configs / "fixed_cost_call.json")])
print("exit", code, "price", doc["price"], "radius from", doc["radius_market"])
print(json.dumps(doc["arbitrage"]["per_time"], indent=1))

###############################################################################
# Hedge with less cash than the price to see a negative shortfall, and write
# the rollout paths to CSV.

with tempfile.TemporaryDirectory() as tmp:
    code, doc = run_command(["hedge", "--config", str(configs / "binomial_call.json"),
                             "--cash", "9", "--out-dir", tmp])
    print("hedge with 9:", doc["worst_shortfall"], doc["super_replicates"])
    print((Path(tmp) / "rollout_paths.csv").read_text())

###############################################################################
# Grid refinement for the basket call.

code, doc = run_command(["converge", "--config", str(configs / "basket_call.json")])
for row in doc["rows"]:
    print(row)

###############################################################################
# A bad config names the offending key and exits with code 2.

bad = json.loads((configs / "binomial_call.json").read_text())
del bad["grid"]
with tempfile.NamedTemporaryFile("w", suffix=".json", delete=False) as fh:
    json.dump(bad, fh)
print("exit", run_command(["price", "--config", fh.name])[0])
Path(fh.name).unlink()
