"""
Running an experiment from a config file
========================================

The ``omedal`` command reads a JSON config, runs every mode for every
seed, and writes one ledger CSV per run plus a summary and an optional SVG.
"""

import csv
import json
import tempfile
from pathlib import Path

from omedal.cli import main

work = Path(tempfile.mkdtemp())
config = {
    "dataset": {"kind": "blobs", "n": 400, "dim": 8, "n_classes": 2, "clusters_per_class": 2},
    "modes": ["medal", "omedal", "random"],
    "sampler": {"M": 30, "ell": 10},
    "loop": {"epochs_per_iter": 10, "max_iters": 8},
    "mode_overrides": {"medal": {"patience": 10}},
    "n_seeds": 2,
    "baseline_epochs": 40,
}
(work / "experiment.json").write_text(json.dumps(config, indent=2))

# Same as: omedal --config experiment.json --out runs --plot
status = main(["--config", str(work / "experiment.json"), "--out", str(work / "runs"), "--plot"])
print("exit status", status)

with open(work / "runs" / "summary.csv") as fh:
    for row in csv.DictReader(fh):
        if row["seed"] == "mean":
            print(f"{row['mode']:>7}: max acc {float(row['max_test_acc']):.3f}, "
                  f"examples {float(row['examples_processed']):,.0f}")
print("plot at", work / "runs" / "learning_curves.svg")
