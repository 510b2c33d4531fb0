import numpy as np
import pytest

from conftest import make_bag
from milstroud import Bag, Label
from milstroud.autoencoder import AeArchitecture, AeTrainingConfig, init_autoencoder
from milstroud.errors import ConfigurationError
from milstroud.lof import ProximityContext, Scope
from milstroud.scorers import LofScorer, MseScorer
from oracles import naive_lof


def training(rng, n_bags=4, size=5):
    return [make_bag(rng.normal(size=(size, 2)), Label.NORMAL, f"t{i}") for i in range(n_bags)]


class TestLofScorer:
    def test_global_training_bags_exclude_themselves(self, rng):
        bags = training(rng)
        pooled = [tuple(x) for b in bags for x in b.as_array()]
        s = LofScorer(3, Scope.REFERENCE_GLOBAL).fit(bags)
        got = s.score_bag(bags[1])
        want = [naive_lof(pooled, 3, 5 + i) for i in range(5)]
        np.testing.assert_allclose(got, want, rtol=1e-12)

    def test_global_copy_is_an_external_query(self, rng):
        bags = training(rng)
        pooled = [tuple(x) for b in bags for x in b.as_array()]
        s = LofScorer(3, Scope.REFERENCE_GLOBAL).fit(bags)
        twin = Bag(bags[0].instances, Label.NORMAL, "copy")
        want = [naive_lof(pooled, 3, p) for p in pooled[:5]]
        np.testing.assert_allclose(s.score_bag(twin), want, rtol=1e-12)

    def test_shared_context_reused(self, rng):
        bags = training(rng)
        ctx = ProximityContext(np.concatenate([b.as_array() for b in bags]))
        a = LofScorer(2, Scope.REFERENCE_GLOBAL, context=ctx).fit(bags)
        b = LofScorer(3, Scope.REFERENCE_GLOBAL, context=ctx).fit(bags)
        assert a.context is ctx and b.context is ctx
        other = LofScorer(2, Scope.REFERENCE_GLOBAL, context=ctx).fit(bags[:2])
        assert other.context is not ctx

    def test_infeasible(self, rng):
        with pytest.raises(ConfigurationError, match="k=5"):
            LofScorer(5).score_bag(make_bag(rng.normal(size=(5, 2))))
        with pytest.raises(ConfigurationError):
            LofScorer(20, Scope.REFERENCE_GLOBAL).fit(training(rng, 2))

    def test_unfitted_global(self, rng):
        s = LofScorer(2, Scope.REFERENCE_GLOBAL)
        assert not s.fitted
        with pytest.raises(ConfigurationError):
            s.score_bag(make_bag(rng.normal(size=(3, 2))))

    def test_descriptor(self):
        assert LofScorer(4).descriptor == {"strangeness": "lof", "k": 4, "scope": "bag_local"}


class TestMseScorer:
    def test_fit_and_score(self, rng):
        bags = [make_bag(rng.normal(size=(10, 4)), Label.NORMAL) for _ in range(3)]
        s = MseScorer(AeArchitecture(4, (3, 2, 1)), AeTrainingConfig(epochs=2)).fit(bags)
        scores = s.score_bag(bags[0])
        assert scores.shape == (10,) and np.all(scores >= 0)
        assert s.descriptor["architecture"] == [4, 3, 2, 1]

    def test_pretrained_model(self, rng):
        m = init_autoencoder(AeArchitecture(4, (3, 2, 1)))
        s = MseScorer(model=m)
        assert s.fitted
        np.testing.assert_array_equal(s.score_bag(make_bag(np.ones((2, 4)))), m.strangeness(np.ones((2, 4))))

    def test_needs_something(self):
        with pytest.raises(ConfigurationError):
            MseScorer()
