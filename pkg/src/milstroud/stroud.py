"""Single-instance StrOUD comparator.

Every training instance is scored against the pooled training set, the
scores form an instance baseline, and each test instance gets its own
conformal p-value.  A bag is lifted to a decision with the any-instance
rule (it is anomalous at confidence c iff its smallest instance p-value is
<= 1 - c).  The alternative ``aggregate`` rule aggregates the instance
scores first and tests the bag score against the aggregated training bags.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .bags import Bag, Dataset
from .errors import ConfigurationError
from .evaluation import confidence_levels, predict, roc_from_verdicts
from .lof import Scope
from .mil import (
    BagVerdict,
    ExperimentResult,
    Baseline,
    _stage,
    _truth,
    bag_score,
    create_baseline,
    instance_scores,
    verdict_from_score,
)
from .scorers import LofScorer


class StroudRule(str, enum.Enum):
    ANY_INSTANCE = "any_instance"
    AGGREGATE = "aggregate"
    # no bag lift: every test instance is judged against its own label
    INSTANCE = "instance"


@dataclass(frozen=True, eq=False)
class InstanceBaseline:
    sorted_scores: np.ndarray
    descriptor: dict = field(default_factory=dict)

    def __post_init__(self):
        s = np.array(self.sorted_scores, dtype=float)
        if s.ndim != 1 or s.size == 0:
            raise ConfigurationError("empty instance baseline")
        if np.any(np.diff(s) < 0):
            raise ConfigurationError("instance baseline must be sorted ascending")
        s.setflags(write=False)
        object.__setattr__(self, "sorted_scores", s)

    @property
    def n(self) -> int:
        return self.sorted_scores.size


def global_scorer(scorer):
    """LOF always runs against the pooled training instances here."""
    if isinstance(scorer, LofScorer) and scorer.scope is not Scope.REFERENCE_GLOBAL:
        return LofScorer(scorer.k, Scope.REFERENCE_GLOBAL)
    return scorer


def create_instance_baseline(training_bags, scorer) -> InstanceBaseline:
    scores = np.concatenate([instance_scores(b, scorer) for b in training_bags])
    return InstanceBaseline(np.sort(scores), dict(scorer.descriptor))


def stroud_instance_pvalue(ib: InstanceBaseline, s: float) -> float:
    # identical formula to the bag-level test, over instance counts
    if not np.isfinite(s):
        raise ValueError(f"score must be finite, got {s}")
    return float(stroud_instance_pvalues(ib, [s])[0])


def stroud_instance_pvalues(ib: InstanceBaseline, scores) -> np.ndarray:
    scores = np.asarray(scores, dtype=float)
    if not np.all(np.isfinite(scores)):
        raise ValueError("scores must be finite")
    index = np.searchsorted(ib.sorted_scores, scores, side="left")
    return (1 + ib.n - index) / (ib.n + 1)


def stroud_bag_decision(bag: Bag, ib: InstanceBaseline, scorer, rule=StroudRule.ANY_INSTANCE,
                        levels=None) -> BagVerdict:
    if StroudRule(rule) is not StroudRule.ANY_INSTANCE:
        raise ConfigurationError("stroud_bag_decision implements the any_instance rule; "
                                 "use run_stroud for the aggregate rule")
    if dict(scorer.descriptor) != ib.descriptor:
        raise ConfigurationError(f"instance baseline built with {ib.descriptor}, query uses {scorer.descriptor}")
    levels = confidence_levels() if levels is None else np.asarray(levels, dtype=float)
    scores = instance_scores(bag, scorer)
    p = float(stroud_instance_pvalues(ib, scores).min())
    return BagVerdict(bag.id, float(scores.max()), p, levels, predict(p, levels), _truth(bag))


def instance_verdicts(bags, ib: InstanceBaseline, scorer, levels) -> list:
    """One verdict per test instance; a missing instance label falls back to the bag label."""
    out = []
    for b in bags:
        scores = instance_scores(b, scorer)
        ps = stroud_instance_pvalues(ib, scores)
        for inst, s, p in zip(b.instances, scores, ps):
            label = inst.label if inst.label is not None else b.label
            truth = None if label is None else bool(label)
            out.append(BagVerdict(inst.id, float(s), float(p), levels, predict(p, levels), truth))
    return out


def run_stroud(d: Dataset, scorer, rule=StroudRule.ANY_INSTANCE, f=None, levels=None,
               refit=True) -> ExperimentResult:
    rule = StroudRule(rule)
    levels = confidence_levels() if levels is None else np.asarray(levels, dtype=float)
    scorer = global_scorer(scorer)
    if refit or not getattr(scorer, "fitted", False):
        _stage("fit", scorer.fit, d.training_bags)

    if rule is StroudRule.INSTANCE:
        ib = _stage("baseline", create_instance_baseline, d.training_bags, scorer)
        verdicts = _stage("classify", instance_verdicts, d.test_bags, ib, scorer, levels)
        baseline = Baseline(ib.sorted_scores, ib.descriptor)
        meta = {"method": "stroud", "rule": rule.value, **ib.descriptor}
    elif rule is StroudRule.ANY_INSTANCE:
        ib = _stage("baseline", create_instance_baseline, d.training_bags, scorer)
        verdicts = _stage(
            "classify",
            lambda: [stroud_bag_decision(b, ib, scorer, rule, levels) for b in d.test_bags],
        )
        baseline = Baseline(ib.sorted_scores, ib.descriptor)
        meta = {"method": "stroud", "rule": rule.value, **ib.descriptor}
    else:
        if f is None:
            raise ConfigurationError("the aggregate rule needs an aggregate function")
        baseline = _stage("baseline", create_baseline, d.training_bags, scorer, f)

        def classify():
            return [
                verdict_from_score(b.id, bag_score(b, scorer, f), baseline, levels, _truth(b))
                for b in d.test_bags
            ]

        verdicts = _stage("classify", classify)
        meta = {"method": "stroud", "rule": rule.value, **baseline.descriptor}

    roc = _stage("evaluate", roc_from_verdicts, verdicts, None, levels)
    return ExperimentResult(baseline, verdicts, roc, meta)
