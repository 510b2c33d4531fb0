"""
Running a grid from a config file
=================================

The same runs are available from the command line:

    milstroud gen demo.json --out data/
    milstroud run demo.json --out results/ --jobs 4
"""

import json
import tempfile
from pathlib import Path

from milstroud.cli import main

cfg = {
    "data": {"synthetic": {"feature_dim": 4, "n_train_bags": 20, "n_test_bags_per_class": 15, "seed": 7}},
    "lof": {"k": {"min": 2, "max": 6}},
    "mse": {"architecture": [3, 2, 1], "epochs": 40, "batch_size": 16, "learning_rate": 0.05},
    "aggregates": ["max", "mean", "dspread"],
    "confidence_step": 0.001,
}

work = Path(tempfile.mkdtemp())
(work / "demo.json").write_text(json.dumps(cfg, indent=2))
main(["run", str(work / "demo.json"), "--out", str(work / "out"), "--jobs", "4"])

summary = json.loads((work / "out" / "summary.json").read_text())
print(len(summary["cells"]), "cells; outputs under", work / "out")
