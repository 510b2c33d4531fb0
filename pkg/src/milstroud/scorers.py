"""Instance strangeness scorers used by bag scoring.

A scorer is fitted on the normal training bags only and then maps every
instance of a bag to a nonnegative strangeness value, in bag order.
"""

from __future__ import annotations

from typing import Protocol, Sequence

import numpy as np

from .autoencoder import AeArchitecture, AeTrainingConfig, TrainedAe, train
from .bags import Bag
from .errors import ConfigurationError
from .lof import LofConfig, ProximityContext, Scope, local_outlier_factors


class StrangenessScorer(Protocol):
    descriptor: dict

    def fit(self, training_bags: Sequence[Bag]) -> "StrangenessScorer": ...

    def score_bag(self, bag: Bag) -> np.ndarray: ...


class LofScorer:
    """LOF strangeness, either inside each bag or against all training instances."""

    def __init__(self, k: int, scope=Scope.BAG_LOCAL, context: ProximityContext = None):
        self.config = LofConfig(k, scope)
        # a prebuilt context over the pooled training instances may be shared across k
        self._shared = context
        self.context = None
        self._training = {}
        self._reference_scores = None

    @property
    def k(self):
        return self.config.k

    @property
    def scope(self):
        return self.config.scope

    @property
    def descriptor(self) -> dict:
        return {"strangeness": "lof", "k": self.k, "scope": self.scope.value}

    @property
    def fitted(self) -> bool:
        return self.scope is Scope.BAG_LOCAL or self.context is not None

    def fit(self, training_bags):
        if self.scope is Scope.BAG_LOCAL:
            return self
        training_bags = list(training_bags)
        offsets = np.cumsum([0] + [len(b) for b in training_bags])
        pooled = np.concatenate([b.as_array() for b in training_bags])
        if self._shared is not None and np.array_equal(self._shared.reference, pooled):
            self.context = self._shared
        else:
            self.context = ProximityContext(pooled)
        if self.k > self.context.size - 1:
            raise ConfigurationError(
                f"k={self.k} needs {self.k} neighbours but the training pool has "
                f"{self.context.size} instances"
            )
        # training instances are reference points and must not see themselves
        self._reference_scores = self.context.reference_scores(self.k)
        self._training = {
            id(b): (b, slice(offsets[i], offsets[i + 1])) for i, b in enumerate(training_bags)
        }
        return self

    def score_bag(self, bag: Bag) -> np.ndarray:
        if self.scope is Scope.BAG_LOCAL:
            if self.k > len(bag) - 1:
                raise ConfigurationError(
                    f"k={self.k} is infeasible for bag {bag.id!r} of size {len(bag)} "
                    f"(bag-local LOF needs k <= {len(bag) - 1})"
                )
            return local_outlier_factors(bag.as_array(), self.k)
        if self.context is None:
            raise ConfigurationError("reference-global LOF scorer used before fit()")
        hit = self._training.get(id(bag))
        if hit is not None and hit[0] is bag:
            return self._reference_scores[hit[1]].copy()
        return self.context.scores(bag.as_array(), self.k)

    def __repr__(self):
        return f"LofScorer(k={self.k}, scope={self.scope.value})"


class MseScorer:
    """Autoencoder reconstruction error, trained on pooled training instances."""

    def __init__(self, architecture: AeArchitecture = None, config: AeTrainingConfig = AeTrainingConfig(),
                 model: TrainedAe = None):
        if architecture is None and model is None:
            raise ConfigurationError("MseScorer needs an architecture or a trained model")
        self.architecture = architecture if architecture is not None else model.architecture
        self.config = config
        self.model = model

    @property
    def descriptor(self) -> dict:
        a = self.architecture
        return {
            "strangeness": "mse",
            "architecture": [a.input_dim, *a.encoder_widths],
            "dropout": list(a.dropout_rates),
            "epochs": self.config.epochs,
            "batch_size": self.config.batch_size,
            "learning_rate": self.config.learning_rate,
            "seed": self.config.seed,
        }

    @property
    def fitted(self) -> bool:
        return self.model is not None

    def fit(self, training_bags):
        X = np.concatenate([b.as_array() for b in training_bags])
        self.model = train(X, self.architecture, self.config)
        return self

    def score_bag(self, bag: Bag) -> np.ndarray:
        if self.model is None:
            raise ConfigurationError("MSE scorer used before fit()")
        return self.model.strangeness(bag.as_array())

    def __repr__(self):
        return f"MseScorer({' -> '.join(map(str, self.descriptor['architecture']))})"
