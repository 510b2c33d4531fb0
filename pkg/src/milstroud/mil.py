"""Bag-level conformal anomaly testing.

Training bags (all normal) are scored and sorted into a baseline.  A query
bag is scored the same way and its p-value is the smoothed fraction of
baseline scores that are at least as large as its own.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Hashable, Optional, Sequence

import numpy as np

from .aggregation import Aggregate, aggregate
from .bags import Bag, Dataset, Label, bag_truths
from .errors import ConfigurationError, ExperimentError, ScoringError
from .evaluation import RocCurve, confidence_levels, predict, roc_from_verdicts


def describe(scorer, f) -> dict:
    return {**scorer.descriptor, "aggregate": Aggregate(f).value}


@dataclass(frozen=True, eq=False)
class Baseline:
    sorted_scores: np.ndarray
    descriptor: dict = field(default_factory=dict)

    def __post_init__(self):
        s = np.array(self.sorted_scores, dtype=float)
        if s.ndim != 1 or s.size == 0:
            raise ConfigurationError("empty baseline")
        if np.any(np.diff(s) < 0):
            raise ConfigurationError("baseline scores must be sorted ascending")
        s.setflags(write=False)
        object.__setattr__(self, "sorted_scores", s)

    @property
    def n_x(self) -> int:
        return self.sorted_scores.size

    def to_json(self) -> str:
        return json.dumps(
            {"sorted_scores": self.sorted_scores.tolist(), "descriptor": self.descriptor},
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> "Baseline":
        d = json.loads(text)
        return cls(np.array(d["sorted_scores"], dtype=float), d["descriptor"])


@dataclass(frozen=True, eq=False)
class BagVerdict:
    bag_id: Hashable
    score: float
    p_value: float
    levels: np.ndarray
    predictions: np.ndarray  # True = anomalous, one per level
    truth: Optional[bool] = None

    def prediction_at(self, confidence: float) -> Label:
        return Label.ANOMALOUS if predict(self.p_value, [confidence])[0] else Label.NORMAL


def instance_scores(b: Bag, scorer) -> np.ndarray:
    try:
        scores = np.asarray(scorer.score_bag(b), dtype=float)
    except ScoringError:
        raise
    except Exception as exc:
        raise ScoringError(f"bag {b.id!r}: {exc}") from exc
    if scores.shape != (len(b),):
        raise ScoringError(f"bag {b.id!r}: scorer returned {scores.shape}, expected ({len(b)},)")
    bad = np.flatnonzero(~np.isfinite(scores) | (scores < 0))
    if bad.size:
        inst = b.instances[bad[0]]
        raise ScoringError(f"bag {b.id!r}, instance {inst.id!r}: invalid strangeness {scores[bad[0]]}")
    return scores


def bag_score(b: Bag, scorer, f) -> float:
    return aggregate(instance_scores(b, scorer), f)


def create_baseline(training_bags: Sequence[Bag], scorer, f) -> Baseline:
    if len(training_bags) == 0:
        raise ConfigurationError("empty baseline: no training bags")
    scores = [bag_score(b, scorer, f) for b in training_bags]
    return Baseline(np.sort(np.array(scores)), describe(scorer, f))


def p_value(baseline: Baseline, score: float) -> float:
    """(1 + #{baseline >= score}) / (n_x + 1)."""
    if not np.isfinite(score):
        raise ValueError(f"score must be finite, got {score}")
    index = int(np.searchsorted(baseline.sorted_scores, score, side="left"))
    return (1 + baseline.n_x - index) / (baseline.n_x + 1)


def verdict_from_score(bag_id, score, baseline, levels, truth=None) -> BagVerdict:
    p = p_value(baseline, score)
    levels = np.asarray(levels, dtype=float)
    return BagVerdict(bag_id, float(score), p, levels, predict(p, levels), truth)


def _truth(b: Bag):
    t = bag_truths([b])[0]
    has_label = b.label is not None or any(i.label is not None for i in b.instances)
    return bool(t) if has_label else None


def classify_bag(qb: Bag, baseline: Baseline, scorer, f, levels=None) -> BagVerdict:
    if describe(scorer, f) != baseline.descriptor:
        raise ConfigurationError(
            f"baseline was built with {baseline.descriptor}, query uses {describe(scorer, f)}"
        )
    levels = confidence_levels() if levels is None else np.asarray(levels, dtype=float)
    if levels.size and (levels.min() < 0 or levels.max() > 1):
        raise ConfigurationError("confidence levels must lie in [0, 1]")
    return verdict_from_score(qb.id, bag_score(qb, scorer, f), baseline, levels, _truth(qb))


@dataclass(frozen=True, eq=False)
class ExperimentResult:
    baseline: Baseline
    verdicts: list
    roc: RocCurve
    metadata: dict = field(default_factory=dict)


def _stage(name, fn, *args):
    try:
        return fn(*args)
    except ExperimentError:
        raise
    except Exception as exc:
        raise ExperimentError(name, exc) from exc


def classify_all(bags, baseline, scorer, f, levels, jobs=1):
    if jobs > 1:
        with ThreadPoolExecutor(jobs) as pool:
            return list(pool.map(lambda b: classify_bag(b, baseline, scorer, f, levels), bags))
    return [classify_bag(b, baseline, scorer, f, levels) for b in bags]


def run_experiment(d: Dataset, scorer, f, levels=None, refit=True, jobs=1) -> ExperimentResult:
    """Fit on training bags, build the baseline, classify every test bag and sweep the ROC."""
    levels = confidence_levels() if levels is None else np.asarray(levels, dtype=float)
    if refit or not getattr(scorer, "fitted", False):
        _stage("fit", scorer.fit, d.training_bags)
    baseline = _stage("baseline", create_baseline, d.training_bags, scorer, f)
    verdicts = _stage("classify", classify_all, d.test_bags, baseline, scorer, f, levels, jobs)
    roc = _stage("evaluate", roc_from_verdicts, verdicts, None, levels)
    return ExperimentResult(baseline, verdicts, roc, {"method": "mil-stroud", **baseline.descriptor})
