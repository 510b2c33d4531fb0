"""Instances, bags and datasets shared by every stage of the pipeline."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Hashable, Optional, Sequence

import numpy as np


class Label(enum.IntEnum):
    NORMAL = 0
    ANOMALOUS = 1

    @classmethod
    def parse(cls, value) -> "Label":
        """Collapse any ground-truth state onto the binary label set.

        Zero / "normal" maps to NORMAL; every other state (fault depths,
        damage levels, ...) is ANOMALOUS.
        """
        if isinstance(value, Label):
            return value
        if isinstance(value, str):
            v = value.strip().lower()
            if v in ("0", "normal", "n", "false"):
                return cls.NORMAL
            if v in ("1", "anomalous", "anomaly", "a", "true"):
                return cls.ANOMALOUS
            try:
                return cls.NORMAL if float(v) == 0 else cls.ANOMALOUS
            except ValueError:
                raise ValueError(f"unrecognised label {value!r}") from None
        return cls.NORMAL if value == 0 else cls.ANOMALOUS


@dataclass(frozen=True, eq=False)
class Instance:
    """One feature vector, e.g. a signal window or a featurized frame."""

    features: np.ndarray
    id: Hashable = None
    label: Optional[Label] = None

    def __post_init__(self):
        arr = np.array(self.features, dtype=float)
        if arr.ndim != 1:
            raise ValueError(f"instance {self.id!r}: features must be a 1-D vector")
        arr.setflags(write=False)
        object.__setattr__(self, "features", arr)

    @property
    def dim(self) -> int:
        return self.features.shape[0]

    def __eq__(self, other):
        if not isinstance(other, Instance):
            return NotImplemented
        return (
            self.id == other.id
            and self.label == other.label
            and np.array_equal(self.features, other.features)
        )

    __hash__ = None


@dataclass(frozen=True, eq=False)
class Bag:
    instances: tuple
    label: Optional[Label] = None
    id: Hashable = None

    def __post_init__(self):
        insts = tuple(self.instances)
        if not insts:
            raise ValueError(f"bag {self.id!r} has no instances")
        object.__setattr__(self, "instances", insts)
        if self.label is not None:
            object.__setattr__(self, "label", Label.parse(self.label))

    @classmethod
    def from_array(cls, X, label=None, id=None, instance_ids=None, instance_labels=None):
        X = np.asarray(X, dtype=float)
        if instance_ids is None:
            instance_ids = [f"{id}:{i}" for i in range(len(X))]
        if instance_labels is None:
            instance_labels = [None] * len(X)
        insts = tuple(
            Instance(x, id=i, label=None if l is None else Label.parse(l))
            for x, i, l in zip(X, instance_ids, instance_labels)
        )
        return cls(insts, label=label, id=id)

    def __len__(self):
        return len(self.instances)

    def __iter__(self):
        return iter(self.instances)

    def as_array(self) -> np.ndarray:
        return np.stack([inst.features for inst in self.instances])

    def __eq__(self, other):
        if not isinstance(other, Bag):
            return NotImplemented
        return (
            self.id == other.id
            and self.label == other.label
            and self.instances == other.instances
        )

    __hash__ = None


@dataclass(frozen=True)
class Dataset:
    training_bags: tuple
    test_bags: tuple
    feature_dim: int = field(default=0)

    def __post_init__(self):
        object.__setattr__(self, "training_bags", tuple(self.training_bags))
        object.__setattr__(self, "test_bags", tuple(self.test_bags))
        if not self.feature_dim:
            bags = self.training_bags + self.test_bags
            dim = bags[0].instances[0].dim if bags else 0
            object.__setattr__(self, "feature_dim", dim)

    def training_instances(self) -> np.ndarray:
        return np.concatenate([b.as_array() for b in self.training_bags])


def validate_dataset(d: Dataset) -> list:
    """Return human-readable invariant violations; empty when the dataset is sound."""
    problems = []
    if not d.training_bags:
        problems.append("dataset has no training bags")
    if d.feature_dim < 1:
        problems.append(f"feature_dim must be positive, got {d.feature_dim}")

    for split, bags in (("training", d.training_bags), ("test", d.test_bags)):
        for bag in bags:
            if len(bag) < 2:
                problems.append(f"{split} bag {bag.id!r}: needs at least 2 instances, has {len(bag)}")
            if split == "training" and bag.label is not None and bag.label != Label.NORMAL:
                problems.append(f"training bag {bag.id!r}: training bag not Normal")
            for inst in bag.instances:
                if inst.dim == 0:
                    problems.append(f"{split} bag {bag.id!r}, instance {inst.id!r}: empty feature vector")
                elif inst.dim != d.feature_dim:
                    problems.append(
                        f"{split} bag {bag.id!r}, instance {inst.id!r}: "
                        f"dimension {inst.dim} != feature_dim {d.feature_dim}"
                    )
                if not np.all(np.isfinite(inst.features)):
                    problems.append(f"{split} bag {bag.id!r}, instance {inst.id!r}: non-finite feature value")
    return problems


def bag_truths(bags: Sequence[Bag]) -> np.ndarray:
    """Bag ground truth as a bool array (True = anomalous).

    A bag without an explicit label is anomalous iff any of its instances is
    labelled anomalous.
    """
    out = []
    for b in bags:
        if b.label is not None:
            out.append(b.label == Label.ANOMALOUS)
        else:
            out.append(any(i.label == Label.ANOMALOUS for i in b.instances))
    return np.array(out, dtype=bool)
