"""Ingestion, windowing, noise corruption, bag composition and synthetic data.

Instance CSV layout: numeric feature columns ``f0 .. f{D-1}``, plus optional
``label`` (0/1 or a state name; any non-normal state collapses to 1),
``run_id`` (contiguous recording run), ``bag``, ``bag_label`` and ``id``.
"""

from __future__ import annotations

import csv
import enum
import math
import re
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .bags import Bag, Dataset, Instance, Label
from .errors import ConfigurationError, DataError

_FEATURE = re.compile(r"^f(\d+)$")


@dataclass(frozen=True)
class CsvSchema:
    label: str = "label"
    run_id: str = "run_id"
    bag: str = "bag"
    bag_label: str = "bag_label"
    id: str = "id"
    require_label: bool = False


@dataclass(frozen=True, eq=False)
class InstanceTable:
    features: np.ndarray
    labels: Optional[list] = None  # Label or None per row
    run_ids: Optional[list] = None
    bags: Optional[list] = None
    bag_labels: Optional[list] = None
    ids: Optional[list] = None

    def __len__(self):
        return self.features.shape[0]

    @property
    def label_array(self) -> np.ndarray:
        if self.labels is None:
            raise DataError("table has no label column")
        if any(l is None for l in self.labels):
            raise DataError("label column has missing entries")
        return np.array([int(l) for l in self.labels])

    def instances(self) -> list:
        ids = self.ids if self.ids is not None else list(range(len(self)))
        labels = self.labels if self.labels is not None else [None] * len(self)
        return [Instance(x, id=i, label=l) for x, i, l in zip(self.features, ids, labels)]


def _optional_label(text):
    text = text.strip()
    return None if text == "" else Label.parse(text)


def load_feature_csv(path, schema: CsvSchema = CsvSchema()) -> InstanceTable:
    path = Path(path)
    if not path.is_file():
        raise DataError(f"no such file: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        feat_cols = sorted(
            ((int(m.group(1)), j) for j, h in enumerate(header) if (m := _FEATURE.match(h))),
        )
        if not feat_cols or [i for i, _ in feat_cols] != list(range(len(feat_cols))):
            raise DataError(f"{path}: header must name feature columns f0..f{{D-1}}")
        col = {h: j for j, h in enumerate(header)}
        if schema.require_label and schema.label not in col:
            raise DataError(f"{path}: missing '{schema.label}' column")

        rows, labels, runs, bags, bag_labels, ids = [], [], [], [], [], []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise DataError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            try:
                values = [float(row[j]) for _, j in feat_cols]
            except ValueError:
                bad = next(row[j] for _, j in feat_cols if not _is_float(row[j]))
                raise DataError(f"{path}:{lineno}: non-numeric feature value {bad!r}") from None
            if not all(math.isfinite(v) for v in values):
                raise DataError(f"{path}:{lineno}: non-finite feature value")
            rows.append(values)
            try:
                if schema.label in col:
                    labels.append(_optional_label(row[col[schema.label]]))
                if schema.bag_label in col:
                    bag_labels.append(_optional_label(row[col[schema.bag_label]]))
            except ValueError as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from None
            if schema.run_id in col:
                runs.append(row[col[schema.run_id]].strip())
            if schema.bag in col:
                bags.append(row[col[schema.bag]].strip())
            if schema.id in col:
                ids.append(row[col[schema.id]].strip())

    if not rows:
        raise DataError(f"{path}: no data rows")
    return InstanceTable(
        np.array(rows, dtype=float),
        labels=labels if schema.label in col else None,
        run_ids=runs if schema.run_id in col else None,
        bags=bags if schema.bag in col else None,
        bag_labels=bag_labels if schema.bag_label in col else None,
        ids=ids if schema.id in col else None,
    )


def _is_float(text):
    try:
        float(text)
        return True
    except ValueError:
        return False


def _fmt(v):
    return repr(float(v))


def _fmt_label(l):
    return "" if l is None else str(int(l))


def write_feature_csv(path, table: InstanceTable, schema: CsvSchema = CsvSchema()):
    n, d = table.features.shape
    extra = [
        (schema.id, table.ids, str),
        (schema.bag, table.bags, str),
        (schema.bag_label, table.bag_labels, _fmt_label),
        (schema.label, table.labels, _fmt_label),
        (schema.run_id, table.run_ids, str),
    ]
    extra = [(name, vals, fmt) for name, vals, fmt in extra if vals is not None]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([name for name, _, _ in extra] + [f"f{j}" for j in range(d)])
        for i in range(n):
            w.writerow([fmt(vals[i]) for _, vals, fmt in extra] + [_fmt(v) for v in table.features[i]])


def bags_to_table(bags: Sequence[Bag]) -> InstanceTable:
    feats, labels, bag_ids, bag_labels, ids = [], [], [], [], []
    for b in bags:
        for inst in b.instances:
            feats.append(inst.features)
            labels.append(inst.label)
            bag_ids.append(b.id)
            bag_labels.append(b.label)
            ids.append(inst.id)
    return InstanceTable(np.array(feats), labels=labels, bags=bag_ids, bag_labels=bag_labels, ids=ids)


def table_to_bags(table: InstanceTable) -> list:
    """Group rows by their ``bag`` column, keeping first-appearance order."""
    if table.bags is None:
        raise DataError("table has no 'bag' column")
    order, groups = [], {}
    for i, b in enumerate(table.bags):
        if b not in groups:
            groups[b] = []
            order.append(b)
        groups[b].append(i)
    insts = table.instances()
    bags = []
    for b in order:
        rows = groups[b]
        label = table.bag_labels[rows[0]] if table.bag_labels is not None else None
        bags.append(Bag(tuple(insts[i] for i in rows), label=label, id=b))
    return bags


def write_dataset(d: Dataset, directory) -> tuple:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    train_path, test_path = directory / "train.csv", directory / "test.csv"
    write_feature_csv(train_path, bags_to_table(d.training_bags))
    write_feature_csv(test_path, bags_to_table(d.test_bags))
    return train_path, test_path


def read_dataset(train_path, test_path) -> Dataset:
    train = load_feature_csv(train_path)
    test = load_feature_csv(test_path)
    if train.features.shape[1] != test.features.shape[1]:
        raise DataError(
            f"feature dimension differs: {train_path} has {train.features.shape[1]}, "
            f"{test_path} has {test.features.shape[1]}"
        )
    train_bags = table_to_bags(train)
    train_bags = [b if b.label is not None else Bag(b.instances, Label.NORMAL, b.id) for b in train_bags]
    return Dataset(train_bags, table_to_bags(test), train.features.shape[1])


# --- signals ---------------------------------------------------------------


@dataclass(frozen=True)
class WindowingSpec:
    window_size: int
    stride: Optional[int] = None

    def __post_init__(self):
        if self.stride is None:
            object.__setattr__(self, "stride", self.window_size)
        if self.window_size < 1 or self.stride < 1:
            raise ConfigurationError("window_size and stride must be positive")


def window_signal(signal, spec: WindowingSpec) -> list:
    """Cut a 1-D signal into windows; a trailing partial window is dropped."""
    x = np.asarray(signal, dtype=float).ravel()
    if len(x) < spec.window_size:
        raise DataError(f"signal of length {len(x)} is shorter than one window ({spec.window_size})")
    count = (len(x) - spec.window_size) // spec.stride + 1
    return [
        Instance(x[i * spec.stride: i * spec.stride + spec.window_size], id=i) for i in range(count)
    ]


def corrupt_snr(signal, snr_db: float, seed: int = 0) -> np.ndarray:
    """Add white Gaussian noise at the requested SNR (dB), power = mean square."""
    x = np.asarray(signal, dtype=float)
    power = float(np.mean(x ** 2))
    if power == 0:
        raise DataError("cannot set an SNR for a zero-power signal")
    if not math.isfinite(snr_db):
        raise ConfigurationError("snr_db must be finite; skip corruption for a clean run")
    noise_var = power / 10 ** (snr_db / 10)
    rng = np.random.default_rng(seed)
    return x + rng.normal(0.0, math.sqrt(noise_var), size=x.shape)


# --- bag composition -------------------------------------------------------


class Insertion(str, enum.Enum):
    CONTIGUOUS_BY_LABEL = "contiguous_by_label"
    RANDOM_INTO_HALF = "random_into_half"


@dataclass(frozen=True)
class BagCompositionSpec:
    normal_bag_size: int
    anomalous_bag_size: Optional[int] = None
    insertion: Insertion = Insertion.RANDOM_INTO_HALF
    seed: int = 0
    n_train_bags: Optional[int] = None
    n_test_bags: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "insertion", Insertion(self.insertion))
        if self.anomalous_bag_size is None:
            object.__setattr__(self, "anomalous_bag_size", self.normal_bag_size)
        if self.normal_bag_size < 2 or self.anomalous_bag_size < 2:
            raise ConfigurationError("bag sizes must be at least 2")


def _runs(labels, run_ids):
    """Contiguous (start, stop) row ranges sharing label and run id."""
    keys = list(zip(labels, run_ids if run_ids is not None else [None] * len(labels)))
    out, start = [], 0
    for i in range(1, len(keys) + 1):
        if i == len(keys) or keys[i] != keys[start]:
            out.append((start, i))
            start = i
    return out


def compose_bags(instances, labels, spec: BagCompositionSpec, run_ids=None) -> Dataset:
    """Partition labelled instances into normal training bags and test bags.

    ``instances`` is an (n, d) array or a list of Instance.  Training bags
    take the first ``n_train_bags * normal_bag_size`` normal rows in order.
    """
    if isinstance(instances, np.ndarray) or (len(instances) and not isinstance(instances[0], Instance)):
        X = np.asarray(instances, dtype=float)
        insts = [Instance(x, id=i) for i, x in enumerate(X)]
    else:
        insts = list(instances)
    labels = [Label.parse(l) for l in labels]
    if len(labels) != len(insts):
        raise DataError(f"{len(insts)} instances but {len(labels)} labels")
    insts = [Instance(inst.features, inst.id, lab) for inst, lab in zip(insts, labels)]
    normal = [i for i, l in enumerate(labels) if l == Label.NORMAL]
    anomalous = [i for i, l in enumerate(labels) if l == Label.ANOMALOUS]
    size = spec.normal_bag_size

    n_train = spec.n_train_bags
    if n_train is None:
        n_train = len(normal) // (2 * size)
    need = n_train * size
    if n_train < 1 or len(normal) < need:
        raise DataError(
            f"need {max(need, size)} normal instances for {max(n_train, 1)} training bags of size {size}, "
            f"have {len(normal)} (short by {max(need, size) - len(normal)})"
        )
    train_rows = normal[:need]
    train_bags = [
        Bag(tuple(insts[i] for i in train_rows[j * size:(j + 1) * size]), Label.NORMAL, f"train-{j}")
        for j in range(n_train)
    ]
    used = set(train_rows)
    rng = np.random.default_rng(spec.seed)

    if spec.insertion is Insertion.RANDOM_INTO_HALF:
        rest = [i for i in normal if i not in used]
        n_test = spec.n_test_bags if spec.n_test_bags is not None else len(rest) // size
        if n_test < 1 or len(rest) < 2 * n_test:
            raise DataError(f"not enough remaining normal instances ({len(rest)}) for {max(n_test, 1)} test bags")
        if spec.n_test_bags is None:
            rest = rest[:n_test * size]
        groups = [list(g) for g in np.array_split(np.array(rest), n_test)]
        if not anomalous:
            warnings.warn("no anomalous instances: every test bag is normal", stacklevel=2)
        else:
            hosts = rng.choice(n_test, size=min(max(n_test // 2, 1), len(anomalous)), replace=False)
            order = rng.permutation(anomalous)
            # one anomaly per host bag, the rest scattered among the hosts
            targets = np.concatenate([hosts, rng.choice(hosts, size=len(order) - len(hosts))])
            for a, t in zip(order, targets):
                g = groups[t]
                g.insert(int(rng.integers(0, len(g) + 1)), int(a))
        test_bags = []
        for j, g in enumerate(groups):
            lab = Label.ANOMALOUS if any(labels[i] == Label.ANOMALOUS for i in g) else Label.NORMAL
            test_bags.append(Bag(tuple(insts[i] for i in g), lab, f"test-{j}"))
    else:
        test_bags = []
        for start, stop in _runs(labels, run_ids):
            rows = [i for i in range(start, stop) if i not in used]
            lab = labels[start]
            bsize = size if lab == Label.NORMAL else spec.anomalous_bag_size
            for j in range(len(rows) // bsize):
                chunk = rows[j * bsize:(j + 1) * bsize]
                test_bags.append(Bag(tuple(insts[i] for i in chunk), lab, f"test-{len(test_bags)}"))
        if not any(b.label == Label.ANOMALOUS for b in test_bags):
            warnings.warn("no anomalous test bags could be formed", stacklevel=2)
    return Dataset(train_bags, test_bags, insts[0].dim)


# --- synthetic data --------------------------------------------------------


@dataclass(frozen=True)
class SyntheticSpec:
    feature_dim: int = 8
    n_train_bags: int = 30
    n_test_bags_per_class: int = 30
    bag_size: int = 10
    anomaly_shift: float = 6.0
    witness_fraction: float = 0.2
    label_noise: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.feature_dim < 1 or self.n_train_bags < 1 or self.n_test_bags_per_class < 0:
            raise ConfigurationError("feature_dim and n_train_bags must be positive")
        if self.bag_size < 2:
            raise ConfigurationError("bag_size must be at least 2")
        if not 0 < self.witness_fraction <= 1:
            raise ConfigurationError("witness_fraction must be in (0, 1]")
        if not 0 <= self.label_noise < 1:
            raise ConfigurationError("label_noise must be in [0, 1)")

    @property
    def witnesses_per_bag(self) -> int:
        return max(1, int(round(self.witness_fraction * self.bag_size)))


def generate_synthetic(spec: SyntheticSpec = SyntheticSpec()) -> Dataset:
    """Gaussian normal instances; witnesses shifted along one random direction.

    A ``label_noise`` fraction of all witnesses (drawn over the whole test
    set) is redrawn from the normal distribution while keeping its anomalous
    instance label and its bag label, which mimics mislabelled recordings.
    """
    rng = np.random.default_rng(spec.seed)
    d, m = spec.feature_dim, spec.bag_size
    direction = rng.normal(size=d)
    direction /= np.linalg.norm(direction)
    counter = iter(range(10 ** 9))

    def make_bag(X, inst_labels, bag_label, bag_id):
        return Bag(
            tuple(Instance(x, id=next(counter), label=l) for x, l in zip(X, inst_labels)),
            bag_label, bag_id,
        )

    train = [
        make_bag(rng.normal(size=(m, d)), [Label.NORMAL] * m, Label.NORMAL, f"train-{j}")
        for j in range(spec.n_train_bags)
    ]
    normal_test = [rng.normal(size=(m, d)) for _ in range(spec.n_test_bags_per_class)]

    n_w = spec.witnesses_per_bag
    anomalous_X, witness_pos = [], []
    for _ in range(spec.n_test_bags_per_class):
        X = rng.normal(size=(m, d))
        pos = np.sort(rng.choice(m, size=n_w, replace=False))
        X[pos] += spec.anomaly_shift * direction
        anomalous_X.append(X)
        witness_pos.append(pos)

    pool = [(b, p) for b, pos in enumerate(witness_pos) for p in pos]
    n_noisy = int(round(spec.label_noise * len(pool)))
    if n_noisy:
        for idx in np.sort(rng.choice(len(pool), size=n_noisy, replace=False)):
            b, p = pool[idx]
            anomalous_X[b][p] = rng.normal(size=d)

    test = []
    for X in normal_test:
        test.append(make_bag(X, [Label.NORMAL] * m, Label.NORMAL, f"test-{len(test)}"))
    for X, pos in zip(anomalous_X, witness_pos):
        labs = [Label.NORMAL] * m
        for p in pos:
            labs[p] = Label.ANOMALOUS
        test.append(make_bag(X, labs, Label.ANOMALOUS, f"test-{len(test)}"))
    return Dataset(train, test, d)
