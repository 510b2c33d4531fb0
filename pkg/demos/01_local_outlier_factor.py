"""
Local outlier factor on a small cloud
=====================================

LOF compares the density around a point with the density around its
neighbours.  Points inside a cluster score close to 1, isolated points
score well above 1.
"""

import numpy as np

from milstroud.lof import LofConfig, ProximityContext, Scope, local_outlier_factors, lof_score

rng = np.random.default_rng(0)
cluster = rng.normal(scale=0.5, size=(30, 2))
points = np.vstack([cluster, [[4.0, 4.0]]])

# every point scored against the rest of the set (itself excluded)
scores = local_outlier_factors(points, k=5)
print("median LOF inside the cluster: %.3f" % np.median(scores[:-1]))
print("LOF of the isolated point:      %.3f" % scores[-1])

# scoring new points against a fixed reference set
ctx = ProximityContext(cluster)
for q in ([0.0, 0.0], [1.5, 0.0], [6.0, 0.0]):
    print(q, "->", round(lof_score(ctx, np.array(q), LofConfig(5, Scope.REFERENCE_GLOBAL)), 3))

# a whole stack of bags at once: shape (bags, instances, features)
bags = rng.normal(size=(4, 10, 3))
bags[2, 0] += 8
print("per-bag max LOF:", np.round(local_outlier_factors(bags, 3).max(axis=1), 2))
