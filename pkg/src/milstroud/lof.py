"""Local Outlier Factor with exact pairwise distances.

Neighbourhoods follow the usual LOF conventions: a point is never its own
neighbour, and every reference point at distance <= k-distance belongs to
the neighbourhood, so ties can make it larger than ``k``.  Local
reachability densities are clamped to ``LRD_CEILING`` when all neighbours
coincide with the point, which keeps duplicate points at LOF = 1 instead
of producing NaN.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.spatial.distance import cdist

from .errors import ConfigurationError

LRD_CEILING = 1e12


class Scope(str, enum.Enum):
    BAG_LOCAL = "bag_local"
    REFERENCE_GLOBAL = "reference_global"


@dataclass(frozen=True)
class LofConfig:
    k: int
    scope: Scope = Scope.BAG_LOCAL

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 1:
            raise ConfigurationError(f"k must be a positive integer, got {self.k!r}")
        object.__setattr__(self, "k", int(self.k))
        object.__setattr__(self, "scope", Scope(self.scope))


def pairwise_distances(X, Y=None) -> np.ndarray:
    """Euclidean distances; accepts leading batch dimensions (..., n, d)."""
    X = np.asarray(X, dtype=float)
    Y = X if Y is None else np.asarray(Y, dtype=float)
    if X.ndim == 2 and Y.ndim == 2:
        return cdist(X, Y)
    diff = X[..., :, None, :] - Y[..., None, :, :]
    return np.sqrt(np.einsum("...ijk,...ijk->...ij", diff, diff))


def _check_k(k, available):
    if k < 1:
        raise ConfigurationError(f"k must be >= 1, got {k}")
    if k > available:
        raise ConfigurationError(
            f"k={k} needs {k} neighbours but only {available} reference points are available"
        )


def _kdist(D, k):
    # D has +inf wherever a pair must not count as neighbours (self pairs)
    return np.partition(D, k - 1, axis=-1)[..., k - 1]


def _lrd(D, kdist_q, kdist_ref):
    """Local reachability density for query rows of D against the reference columns."""
    mask = D <= kdist_q[..., None]
    reach = np.maximum(D, kdist_ref[..., None, :])
    total = np.where(mask, reach, 0.0).sum(axis=-1)
    count = mask.sum(axis=-1)
    with np.errstate(divide="ignore"):
        lrd = np.where(total > 0, count / np.where(total > 0, total, 1.0), LRD_CEILING)
    return np.minimum(lrd, LRD_CEILING), mask, count


def _self_excluded(D):
    D = np.array(D, dtype=float, copy=True)
    n = D.shape[-1]
    idx = np.arange(n)
    D[..., idx, idx] = np.inf
    return D


def local_outlier_factors(X, k: int) -> np.ndarray:
    """LOF of every point of X with respect to the other points of X.

    X may carry leading batch dimensions, ``(..., n, d)``; each trailing
    ``(n, d)`` block is scored independently (this is the bag-local case).
    """
    X = np.asarray(X, dtype=float)
    n = X.shape[-2]
    _check_k(k, n - 1)
    D = _self_excluded(pairwise_distances(X))
    kd = _kdist(D, k)
    lrd, mask, count = _lrd(D, kd, kd)
    neigh = np.where(mask, lrd[..., None, :], 0.0).sum(axis=-1)
    return neigh / count / lrd


class ProximityContext:
    """Reference point set plus its distance matrix.

    Queries are either a reference index (the point then excludes itself
    from its neighbourhood) or an external feature vector.
    """

    def __init__(self, reference):
        ref = np.array(reference, dtype=float)
        if ref.ndim != 2 or len(ref) == 0:
            raise ConfigurationError("reference set must be a non-empty (n, d) array")
        ref.setflags(write=False)
        self.reference = ref
        dist = pairwise_distances(ref)
        dist.setflags(write=False)
        self.distances = dist
        self._cache = {}

    @property
    def size(self) -> int:
        return self.reference.shape[0]

    def _reference_stats(self, k):
        if k not in self._cache:
            _check_k(k, self.size - 1)
            D = _self_excluded(self.distances)
            kd = _kdist(D, k)
            lrd, _, _ = _lrd(D, kd, kd)
            self._cache[k] = (kd, lrd)
        return self._cache[k]

    def query_distances(self, points) -> np.ndarray:
        """Distances from each query row to all reference points."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if points.shape[1] != self.reference.shape[1]:
            raise ConfigurationError(
                f"query dimension {points.shape[1]} != reference dimension {self.reference.shape[1]}"
            )
        return pairwise_distances(points, self.reference)

    def _row(self, point):
        if isinstance(point, (int, np.integer)):
            row = np.array(self.distances[int(point)], dtype=float)
            row[int(point)] = np.inf
            return row, self.size - 1
        return self.query_distances(point)[0], self.size

    def scores(self, points, k: int) -> np.ndarray:
        """LOF of external query points (none of them is a reference point)."""
        kd_ref, lrd_ref = self._reference_stats(k)
        _check_k(k, self.size)
        D = self.query_distances(points)
        kd = _kdist(D, k)
        lrd, mask, count = _lrd(D, kd, kd_ref)
        return np.where(mask, lrd_ref[None, :], 0.0).sum(axis=-1) / count / lrd

    def reference_scores(self, k: int) -> np.ndarray:
        """LOF of every reference point against the rest of the reference set."""
        kd_ref, lrd_ref = self._reference_stats(k)
        D = _self_excluded(self.distances)
        mask = D <= kd_ref[:, None]
        count = mask.sum(axis=-1)
        return np.where(mask, lrd_ref[None, :], 0.0).sum(axis=-1) / count / lrd_ref


PointRef = Union[int, np.ndarray]


def k_distance(ctx: ProximityContext, point: PointRef, k: int) -> float:
    row, available = ctx._row(point)
    _check_k(k, available)
    return float(np.partition(row, k - 1)[k - 1])


def reachability_distance(ctx: ProximityContext, a: PointRef, b: int, k: int) -> float:
    """max(k-distance(b), dist(a, b)); ``b`` must be a reference index."""
    if isinstance(a, (int, np.integer)):
        d = float(ctx.distances[int(a), b])
    else:
        d = float(ctx.query_distances(a)[0, b])
    return max(k_distance(ctx, b, k), d)


def _neighbourhood(ctx, point, k):
    row, available = ctx._row(point)
    _check_k(k, available)
    kd = np.partition(row, k - 1)[k - 1]
    return np.flatnonzero(row <= kd), row


def local_reachability_density(ctx: ProximityContext, a: PointRef, k: int) -> float:
    idx, row = _neighbourhood(ctx, a, k)
    kd_ref, _ = ctx._reference_stats(k)
    total = float(np.maximum(row[idx], kd_ref[idx]).sum())
    if total == 0:
        return LRD_CEILING
    return min(len(idx) / total, LRD_CEILING)


def lof_score(ctx: ProximityContext, a: PointRef, cfg: LofConfig) -> float:
    idx, _ = _neighbourhood(ctx, a, cfg.k)
    _, lrd_ref = ctx._reference_stats(cfg.k)
    lrd_a = local_reachability_density(ctx, a, cfg.k)
    return float(lrd_ref[idx].sum() / len(idx) / lrd_a)
