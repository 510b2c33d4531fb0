"""Bag-level aggregates of instance strangeness.

Sums use ``math.fsum`` so that every aggregate is exactly invariant to the
order of the scores.  The standard deviation is the population one.
"""

from __future__ import annotations

import enum
import math

import numpy as np


class Aggregate(str, enum.Enum):
    MAX = "max"
    MIN = "min"
    MEAN = "mean"
    MEDIAN = "median"
    DSPREAD = "dspread"
    SPREAD = "spread"


ALL_AGGREGATES = tuple(Aggregate)


def _mean(v):
    return math.fsum(v) / len(v)


def _pstdev(v, mean):
    return math.sqrt(math.fsum((x - mean) ** 2 for x in v) / len(v))


def aggregate(scores, f) -> float:
    f = Aggregate(f)
    v = np.asarray(scores, dtype=float).ravel()
    if v.size == 0:
        raise ValueError("cannot aggregate an empty score vector")
    if not np.all(np.isfinite(v)):
        raise ValueError("scores must be finite")

    if f is Aggregate.MAX:
        return float(v.max())
    if f is Aggregate.MIN:
        return float(v.min())
    if f is Aggregate.MEDIAN:
        s = np.sort(v)
        mid = len(s) // 2
        if len(s) % 2:
            return float(s[mid])
        return float((s[mid - 1] + s[mid]) / 2)

    values = v.tolist()
    # fsum / n can round just outside [min, max]; the exact mean cannot be there
    mean = min(max(_mean(values), float(v.min())), float(v.max()))
    if f is Aggregate.MEAN:
        return mean
    sd = _pstdev(values, mean)
    if f is Aggregate.DSPREAD:
        return mean + 2 * sd
    return mean * sd
