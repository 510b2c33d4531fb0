import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import ConstantScorer, TableScorer, make_bag
from milstroud import Bag, Dataset, Label
from milstroud.autoencoder import AeArchitecture
from milstroud.errors import ConfigurationError, ExperimentError, ScoringError
from milstroud.evaluation import confidence_levels
from milstroud.lof import Scope
from milstroud.mil import (
    Baseline,
    bag_score,
    classify_bag,
    create_baseline,
    p_value,
    run_experiment,
    verdict_from_score,
)
from milstroud.scorers import LofScorer, MseScorer
from oracles import count_pvalue, naive_lof


def baseline(*scores):
    return Baseline(np.sort(np.array(scores, dtype=float)), {})


def scored_bags(values):
    """Bags whose TableScorer/Max score is the given value."""
    return [make_bag([[v], [0.0]], label=Label.NORMAL, id=i) for i, v in enumerate(values)]


class IdentityAe:
    """MSE scorer over a z = x model (zero reconstruction error)."""

    descriptor = {"strangeness": "mse", "model": "identity"}

    def fit(self, bags):
        return self

    def score_bag(self, bag):
        X = bag.as_array()
        return np.mean((X - X) ** 2, axis=1)


class TestBagScore:
    def test_constant(self):
        assert bag_score(make_bag(np.zeros((5, 2))), ConstantScorer(1.0), "mean") == 1.0

    def test_lof_max_matches_oracle(self, rng):
        X = np.vstack([rng.normal(scale=0.3, size=(9, 2)), [[8.0, 8.0]]])
        got = bag_score(make_bag(X), LofScorer(3), "max")
        assert got == pytest.approx(naive_lof(X, 3, 9), rel=1e-9)

    @pytest.mark.parametrize("f", ["max", "min", "mean", "median", "dspread", "spread"])
    def test_zero_error_model(self, rng, f):
        assert bag_score(make_bag(rng.normal(size=(4, 3))), IdentityAe(), f) == 0.0

    def test_scorer_error_names_instance(self):
        class Broken:
            descriptor = {}

            def score_bag(self, bag):
                return np.array([0.1, np.nan])

        b = Bag.from_array(np.zeros((2, 1)), id="b7", instance_ids=["i0", "i1"])
        with pytest.raises(ScoringError, match="i1"):
            bag_score(b, Broken(), "max")


class TestBaseline:
    def test_sorted(self):
        b = create_baseline(scored_bags([0.4, 0.1, 0.3]), TableScorer(), "max")
        np.testing.assert_array_equal(b.sorted_scores, [0.1, 0.3, 0.4])
        assert b.n_x == 3

    def test_empty(self):
        with pytest.raises(ConfigurationError, match="empty baseline"):
            create_baseline([], TableScorer(), "max")

    def test_duplicates_kept(self):
        b = create_baseline(scored_bags([0.2, 0.2]), TableScorer(), "max")
        np.testing.assert_array_equal(b.sorted_scores, [0.2, 0.2])

    def test_json_round_trip(self):
        b = create_baseline(scored_bags([0.4, 0.1]), TableScorer(), "mean")
        back = Baseline.from_json(b.to_json())
        assert back.descriptor == b.descriptor
        np.testing.assert_array_equal(back.sorted_scores, b.sorted_scores)


class TestPValue:
    base = baseline(0.1, 0.2, 0.3, 0.4)

    def test_between(self):
        assert p_value(self.base, 0.25) == pytest.approx(0.6)

    def test_below_all(self):
        assert p_value(self.base, 0.0) == 1.0

    def test_above_all(self):
        assert p_value(self.base, 9.0) == pytest.approx(1 / 5)

    def test_tie_counts_as_greater(self):
        assert p_value(self.base, 0.2) == pytest.approx(0.8)

    def test_non_finite(self):
        with pytest.raises(ValueError):
            p_value(self.base, np.inf)

    @given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=30), st.floats(-1e6, 1e6))
    def test_matches_count_oracle(self, scores, s):
        assert p_value(baseline(*scores), s) == count_pvalue(scores, s)

    @given(st.lists(st.floats(-1e3, 1e3), min_size=1, max_size=30),
           st.floats(-1e3, 1e3), st.floats(-1e3, 1e3))
    def test_non_increasing(self, scores, a, b):
        lo, hi = sorted((a, b))
        base = baseline(*scores)
        assert p_value(base, lo) >= p_value(base, hi)

    @given(st.lists(st.integers(-50, 50), min_size=1, max_size=30), st.integers(-50, 50))
    def test_order_only(self, scores, s):
        # strictly increasing transform applied to baseline and query alike;
        # integer inputs keep it strictly increasing after rounding
        g = lambda v: np.exp(np.asarray(v, dtype=float) / 7) * 3 + 1
        assert p_value(baseline(*g(scores)), float(g(s))) == p_value(baseline(*scores), s)


class TestClassify:
    def test_boundary(self):
        v = verdict_from_score("q", 0.25, baseline(0.1, 0.2, 0.3, 0.4), [0.5, 0.6, 0.41, 0.4])
        assert v.p_value == pytest.approx(0.6)
        assert list(v.predictions) == [False, False, False, True]
        assert v.prediction_at(0.4) is Label.ANOMALOUS
        assert v.prediction_at(0.41) is Label.NORMAL

    def test_float_boundary(self):
        # 1 - 0.8 rounds to just below 0.2; p = 1/5 must still be Anomalous there
        v = verdict_from_score("q", 9.0, baseline(1, 2, 3, 4), [0.8])
        assert v.p_value == 0.2 and v.predictions[0]

    def test_most_extreme_enumerated(self):
        n_x = 9
        levels = confidence_levels()
        v = verdict_from_score("q", 99.0, baseline(*range(n_x)), levels)
        assert v.p_value == pytest.approx(1 / (n_x + 1))
        expected = (1 - levels) >= 1 / (n_x + 1) - 1e-12
        np.testing.assert_array_equal(v.predictions, expected)

    @given(st.lists(st.floats(0, 10), min_size=1, max_size=20), st.floats(0, 10))
    def test_anomalous_set_is_upward_closed_in_tau(self, scores, s):
        levels = confidence_levels(0.01)
        v = verdict_from_score("q", s, baseline(*scores), levels)
        tau = 1 - levels
        flagged = tau[v.predictions]
        if flagged.size:
            assert np.all(v.predictions[tau >= flagged.min()])

    def test_descriptor_mismatch(self):
        base = create_baseline(scored_bags([0.1, 0.2]), LofScorer(1), "max")
        with pytest.raises(ConfigurationError):
            classify_bag(scored_bags([0.3])[0], base, TableScorer(), "max")
        with pytest.raises(ConfigurationError):
            classify_bag(scored_bags([0.3])[0], base, LofScorer(1), "mean")
        with pytest.raises(ConfigurationError):
            classify_bag(scored_bags([0.3])[0], base, LofScorer(1, Scope.REFERENCE_GLOBAL), "max")

    def test_bad_levels(self):
        base = create_baseline(scored_bags([0.1]), TableScorer(), "max")
        with pytest.raises(ConfigurationError):
            classify_bag(scored_bags([0.3])[0], base, TableScorer(), "max", [0.5, 1.5])

    def test_default_grid(self):
        base = create_baseline(scored_bags([0.1]), TableScorer(), "max")
        v = classify_bag(scored_bags([0.3])[0], base, TableScorer(), "max")
        assert v.levels.size == 1001 and v.levels[0] == 0 and v.levels[-1] == 1


def small_dataset(rng, n_train=8, anomalous=True):
    train = [make_bag(rng.normal(size=(6, 2)), Label.NORMAL, f"t{i}") for i in range(n_train)]
    test = [make_bag(rng.normal(size=(6, 2)), Label.NORMAL, f"n{i}") for i in range(4)]
    if anomalous:
        for i in range(4):
            X = rng.normal(size=(6, 2))
            X[0] += 10
            test.append(make_bag(X, Label.ANOMALOUS, f"a{i}"))
    return Dataset(train, test)


class TestRunExperiment:
    def test_end_to_end(self, rng):
        res = run_experiment(small_dataset(rng), LofScorer(3, Scope.REFERENCE_GLOBAL), "max")
        assert len(res.verdicts) == 8
        assert res.roc.defined and res.roc.auc == 1.0
        assert res.baseline.n_x == 8

    def test_all_normal_is_undefined(self, rng):
        res = run_experiment(small_dataset(rng, anomalous=False), LofScorer(3), "max")
        assert not res.roc.defined
        assert np.isnan(res.roc.auc)

    def test_no_leakage(self, rng):
        d = small_dataset(rng)
        for scorer in (LofScorer(2, Scope.REFERENCE_GLOBAL), LofScorer(2), TableScorer()):
            full = run_experiment(d, scorer, "dspread").baseline.to_json()
            alone = run_experiment(Dataset(d.training_bags, d.test_bags[:1]), scorer, "dspread")
            assert alone.baseline.to_json() == full

    def test_no_leakage_mse(self, rng):
        from milstroud.autoencoder import AeTrainingConfig

        d = small_dataset(rng)
        cfg = AeTrainingConfig(epochs=3, batch_size=4)
        arch = AeArchitecture(4, (3, 2, 1))
        wide = Dataset(
            [Bag.from_array(np.hstack([b.as_array()] * 2), Label.NORMAL, b.id) for b in d.training_bags],
            [Bag.from_array(np.hstack([b.as_array()] * 2), b.label, b.id) for b in d.test_bags],
        )
        a = run_experiment(wide, MseScorer(arch, cfg), "max").baseline.to_json()
        b = run_experiment(Dataset(wide.training_bags, wide.test_bags[:2]), MseScorer(arch, cfg), "max")
        assert b.baseline.to_json() == a

    def test_stage_name_on_failure(self, rng):
        d = small_dataset(rng)
        with pytest.raises(ExperimentError, match="baseline"):
            run_experiment(d, LofScorer(6), "max")

    def test_jobs_equivalent(self, rng):
        d = small_dataset(rng)
        a = run_experiment(d, LofScorer(3), "median")
        b = run_experiment(d, LofScorer(3), "median", jobs=4)
        assert [v.p_value for v in a.verdicts] == [v.p_value for v in b.verdicts]


def test_conformal_validity_quick():
    """Exchangeable query scores give super-uniform p-values."""
    rng = np.random.default_rng(0)
    n_x, draws = 19, 4000
    hits = {t: 0 for t in (0.05, 0.1, 0.5)}
    for _ in range(draws):
        s = rng.normal(size=n_x + 1)
        p = p_value(baseline(*s[:-1]), s[-1])
        for t in hits:
            hits[t] += p <= t
    for t, h in hits.items():
        assert h / draws <= t + 1 / (n_x + 1) + 0.02
