"""
Bag-level conformal testing
===========================

Each bag gets one score (an aggregate of its instance scores).  The scores
of the normal training bags form a baseline, and a test bag's p-value is
the smoothed share of baseline scores at least as large as its own.
Sweeping the confidence level turns the p-values into a ROC curve.
"""

import numpy as np

from milstroud import LofScorer, SyntheticSpec, generate_synthetic, run_experiment
from milstroud.mil import bag_score, p_value

data = generate_synthetic(SyntheticSpec(feature_dim=4, bag_size=10, seed=3))
print(len(data.training_bags), "training bags,", len(data.test_bags), "test bags")

scorer = LofScorer(k=3)
result = run_experiment(data, scorer, "max")
print("baseline n_x =", result.baseline.n_x)
print("AUC with LOF / max: %.4f" % result.roc.auc)

# one bag by hand
bag = data.test_bags[-1]
s = bag_score(bag, scorer, "max")
print("last test bag: score %.3f, p-value %.4f, label %s" % (s, p_value(result.baseline, s), bag.label.name))
print("anomalous at 95%% confidence: %s" % result.verdicts[-1].prediction_at(0.95).name)

# how the choice of aggregate matters
for f in ("max", "mean", "median", "dspread", "spread", "min"):
    print("%-8s AUC %.4f" % (f, run_experiment(data, scorer, f).roc.auc))
