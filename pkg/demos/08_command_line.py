"""Drive the command-line tool from Python: write a config, dump a spectrum,
optimize, and feed the result back into the stability and Hessian commands."""
import json
import tempfile
from pathlib import Path

import yaml

from opo_cqfc.cli import run

work = Path(tempfile.mkdtemp())
cfg = {
    "problem": {"topology": "two_opo", "omega_opt_mhz": 10.0},
    "optimizer": {"n_ev": 5, "islands": [
        {"kind": "differential_evolution", "params": {"generations": 40}},
        {"kind": "basin_hopping", "params": {"n_stop": 3, "max_evals": 4000}},
    ]},
    "spectrum": {"f_min_mhz": 0, "f_max_mhz": 40, "points": 5},
}
(work / "run.yaml").write_text(yaml.safe_dump(cfg))
args = ["--config", str(work / "run.yaml")]

assert run(["optimize", *args, "--out", str(work / "best.json")]) == 0
best = json.loads((work / "best.json").read_text())
print("optimized Q- =", best["Q_minus_db"], "dB, config", best["config_hash"])

result = ["--result", str(work / "best.json")]
run(["spectrum", *args, *result])
run(["stability", *args, *result, "--out", str(work / "stab.json")])
print("stable:", json.loads((work / "stab.json").read_text())["stable"])
run(["hessian", *args, *result, "--out", str(work / "hess.json")])
print("Hessian eigenvalues:", json.loads((work / "hess.json").read_text())["eigenvalues"])
