"""Slow, independent reference computations used to check the fast paths."""

import math

CEILING = 1e12


def naive_lof(points, k, query=None):
    """LOF by direct loops.

    ``points`` is the reference set (list of tuples).  If ``query`` is an
    index, that reference point is scored with itself excluded; if it is a
    tuple, it is treated as an external point.
    """
    n = len(points)

    def dist(a, b):
        return math.sqrt(sum((x - y) ** 2 for x, y in zip(a, b)))

    def others(i):
        # (distance, index) to every reference point except i itself
        p = points[i] if isinstance(i, int) else i
        return sorted(
            (dist(p, points[j]), j) for j in range(n) if not (isinstance(i, int) and j == i)
        )

    def kdist(i):
        return others(i)[k - 1][0]

    def neighbours(i):
        kd = kdist(i)
        return [j for d, j in others(i) if d <= kd]

    def lrd(i):
        p = points[i] if isinstance(i, int) else i
        nb = neighbours(i)
        total = sum(max(kdist(j), dist(p, points[j])) for j in nb)
        if total == 0:
            return CEILING
        return min(len(nb) / total, CEILING)

    target = query
    nb = neighbours(target)
    own = lrd(target)
    return sum(lrd(j) / own for j in nb) / len(nb)


def mann_whitney_auc(pos, neg):
    """P(random positive ranks above random negative), ties count 1/2."""
    wins = 0.0
    for p in pos:
        for q in neg:
            if p > q:
                wins += 1
            elif p == q:
                wins += 0.5
    return wins / (len(pos) * len(neg))


def count_pvalue(baseline, score):
    """Smoothed fraction of baseline scores >= score."""
    m = sum(1 for s in baseline if s >= score)
    return (1 + m) / (len(baseline) + 1)


def finite_difference(f, x, step=1e-5):
    """Central differences of scalar f w.r.t. every entry of array x (in place, restored)."""
    import numpy as np

    grad = np.zeros_like(x)
    it = np.nditer(x, flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        orig = x[idx]
        x[idx] = orig + step
        up = f()
        x[idx] = orig - step
        down = f()
        x[idx] = orig
        grad[idx] = (up - down) / (2 * step)
    return grad


def reference_ae_loss(weights, biases, X, masks=None):
    """Mean squared reconstruction error of the dense AE, written out layer by layer.

    Activations are tanh, relu, relu, relu, relu, linear; ``masks`` (if given)
    multiply the outputs of the first two layers.  Works in whatever float
    precision the inputs carry, so it can be fed ``np.longdouble`` arrays.
    """
    import numpy as np

    acts = [np.tanh, *[lambda z: np.maximum(z, 0)] * 4, lambda z: z]
    h = X
    for i, (W, b, g) in enumerate(zip(weights, biases, acts)):
        h = g(h @ W.T + b)
        if masks is not None and i < 2:
            h = h * masks[i]
    return np.mean((h - X) ** 2)
