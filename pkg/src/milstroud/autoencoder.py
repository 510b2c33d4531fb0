"""Dense autoencoder written directly in numpy.

The encoder is ``x -> L1 -> L2 -> y`` with tanh, relu, relu activations and
dropout after the first two hidden layers; the decoder mirrors it
(``y -> L2 -> L1 -> x``, relu, relu, linear output).  Inputs are
standardized with statistics of the training data, and the training loss is
the mean squared error in that standardized space.  Optimisation is plain
mini-batch gradient descent, fully determined by the config seed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import ConfigurationError, TrainingError

ACTIVATIONS = ("tanh", "relu", "relu", "relu", "relu", "linear")
# layers followed by dropout (train mode only)
DROPOUT_LAYERS = (0, 1)

# Encoder widths used for the published datasets.
DEFAULT_ARCHITECTURES = {
    "cwru": (400, (200, 50, 10)),
    "hapt": (561, (280, 35, 5)),
    "virat": (2048, (512, 128, 32)),
    "bridge": (200, (100, 25, 5)),
}


@dataclass(frozen=True)
class AeArchitecture:
    input_dim: int
    encoder_widths: tuple
    dropout_rates: tuple = (0.2, 0.2)

    def __post_init__(self):
        widths = tuple(int(w) for w in self.encoder_widths)
        rates = tuple(float(r) for r in self.dropout_rates)
        object.__setattr__(self, "encoder_widths", widths)
        object.__setattr__(self, "dropout_rates", rates)
        if len(widths) != 3:
            raise ConfigurationError("encoder_widths must be [L1, L2, y]")
        if len(rates) != 2 or not all(0 <= r < 1 for r in rates):
            raise ConfigurationError("dropout_rates must be two values in [0, 1)")
        chain = (self.input_dim,) + widths
        if min(chain) < 1 or any(a <= b for a, b in zip(chain, chain[1:])):
            raise ConfigurationError(
                f"widths must shrink strictly: {' -> '.join(map(str, chain))}"
            )

    @classmethod
    def for_dataset(cls, name: str, dropout_rates=(0.2, 0.2)) -> "AeArchitecture":
        x, widths = DEFAULT_ARCHITECTURES[name.lower()]
        return cls(x, widths, dropout_rates)

    @property
    def layer_widths(self) -> list:
        l1, l2, y = self.encoder_widths
        return [l1, l2, y, l2, l1, self.input_dim]

    @property
    def layer_shapes(self) -> list:
        ins = [self.input_dim] + self.layer_widths[:-1]
        return list(zip(self.layer_widths, ins))


@dataclass(frozen=True)
class AeTrainingConfig:
    epochs: int = 100
    batch_size: int = 32
    learning_rate: float = 0.01
    validation_fraction: float = 0.2
    loss: str = "mse"
    seed: int = 0
    # keep the parameters of the epoch with the lowest validation loss
    restore_best: bool = True

    def __post_init__(self):
        if self.epochs < 0 or self.batch_size < 1 or self.learning_rate <= 0:
            raise ConfigurationError("epochs >= 0, batch_size >= 1 and learning_rate > 0 required")
        if not 0 <= self.validation_fraction < 1:
            raise ConfigurationError("validation_fraction must be in [0, 1)")
        if self.loss != "mse":
            raise ConfigurationError(f"unsupported loss {self.loss!r}; only 'mse' is implemented")


def _freeze(arrays):
    out = []
    for a in arrays:
        a = np.array(a, dtype=float)
        a.setflags(write=False)
        out.append(a)
    return tuple(out)


@dataclass(frozen=True, eq=False)
class TrainedAe:
    architecture: AeArchitecture
    weights: tuple
    biases: tuple
    mean: np.ndarray
    scale: np.ndarray
    seed: int = 0
    training_loss: tuple = ()
    validation_loss: tuple = ()
    initial_validation_loss: Optional[float] = None
    selected_epoch: int = 0

    def __post_init__(self):
        object.__setattr__(self, "weights", _freeze(self.weights))
        object.__setattr__(self, "biases", _freeze(self.biases))
        object.__setattr__(self, "mean", _freeze([self.mean])[0])
        object.__setattr__(self, "scale", _freeze([self.scale])[0])
        object.__setattr__(self, "training_loss", tuple(map(float, self.training_loss)))
        object.__setattr__(self, "validation_loss", tuple(map(float, self.validation_loss)))
        for (out_dim, in_dim), W, b in zip(self.architecture.layer_shapes, self.weights, self.biases):
            if W.shape != (out_dim, in_dim) or b.shape != (out_dim,):
                raise ConfigurationError("parameter shapes do not match the architecture")

    @property
    def params(self) -> list:
        return [p for pair in zip(self.weights, self.biases) for p in pair]

    def standardize(self, X):
        return (X - self.mean) / self.scale

    def reconstruct(self, X, mode="eval", rng=None) -> np.ndarray:
        """Reconstruct rows of X (original units)."""
        X = _as_batch(X, self.architecture.input_dim)
        acts, _, _ = _forward(self.weights, self.biases, self.standardize(X),
                              self.architecture.dropout_rates, mode == "train", rng)
        return acts[-1] * self.scale + self.mean

    def activations(self, X, mode="eval", rng=None) -> list:
        X = _as_batch(X, self.architecture.input_dim)
        acts, _, _ = _forward(self.weights, self.biases, self.standardize(X),
                              self.architecture.dropout_rates, mode == "train", rng)
        return acts[1:]

    def strangeness(self, X) -> np.ndarray:
        """Per-row reconstruction MSE, eval mode."""
        X = _as_batch(X, self.architecture.input_dim)
        return np.mean((X - self.reconstruct(X)) ** 2, axis=1)

    def to_dict(self) -> dict:
        arch = self.architecture
        return {
            "architecture": {
                "input_dim": arch.input_dim,
                "encoder_widths": list(arch.encoder_widths),
                "dropout_rates": list(arch.dropout_rates),
                "activations": list(ACTIVATIONS),
            },
            "seed": self.seed,
            "layers": [
                {"shape": list(W.shape), "weights": W.ravel().tolist(), "bias": b.tolist()}
                for W, b in zip(self.weights, self.biases)
            ],
            "standardization": {"mean": self.mean.tolist(), "scale": self.scale.tolist()},
            "training_loss": list(self.training_loss),
            "validation_loss": list(self.validation_loss),
            "initial_validation_loss": self.initial_validation_loss,
            "selected_epoch": self.selected_epoch,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TrainedAe":
        a = d["architecture"]
        arch = AeArchitecture(a["input_dim"], tuple(a["encoder_widths"]), tuple(a["dropout_rates"]))
        weights = [np.array(l["weights"], dtype=float).reshape(l["shape"]) for l in d["layers"]]
        biases = [np.array(l["bias"], dtype=float) for l in d["layers"]]
        st = d["standardization"]
        return cls(
            arch, weights, biases, np.array(st["mean"]), np.array(st["scale"]),
            seed=d.get("seed", 0),
            training_loss=d.get("training_loss", ()),
            validation_loss=d.get("validation_loss", ()),
            initial_validation_loss=d.get("initial_validation_loss"),
            selected_epoch=d.get("selected_epoch", 0),
        )

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh)

    @classmethod
    def load(cls, path) -> "TrainedAe":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def _as_batch(X, dim):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2 or X.shape[1] != dim:
        raise ConfigurationError(f"expected inputs of dimension {dim}, got shape {np.shape(X)}")
    return X


def _activate(name, z):
    if name == "tanh":
        return np.tanh(z)
    if name == "relu":
        return np.maximum(z, 0.0)
    return z


def _activation_grad(name, z, a):
    if name == "tanh":
        return 1.0 - a * a
    if name == "relu":
        return (z > 0).astype(float)
    return np.ones_like(z)


def _forward(weights, biases, X, dropout_rates, train, rng, masks=None):
    """Return (activations incl. input, pre-activations, dropout masks)."""
    acts, pre, used = [X], [], []
    h = X
    for i, (W, b) in enumerate(zip(weights, biases)):
        z = h @ W.T + b
        h = _activate(ACTIVATIONS[i], z)
        pre.append(z)
        mask = None
        if i in DROPOUT_LAYERS:
            p = dropout_rates[DROPOUT_LAYERS.index(i)]
            if masks is not None:
                mask = masks[DROPOUT_LAYERS.index(i)]
            elif train and p > 0:
                mask = (rng.random(h.shape) >= p) / (1.0 - p)
            if mask is not None:
                h = h * mask
        used.append(mask)
        acts.append(h)
    return acts, pre, used


def loss_and_gradients(weights, biases, X, dropout_rates=(0.0, 0.0), train=False, rng=None, masks=None):
    """Standardized-space MSE of reconstructing X and its parameter gradients.

    Gradients are returned as ``[dW0, db0, dW1, db1, ...]``.
    """
    acts, pre, used = _forward(weights, biases, X, dropout_rates, train, rng, masks)
    out = acts[-1]
    loss = float(np.mean((out - X) ** 2))
    delta = 2.0 * (out - X) / out.size
    grads = [None] * (2 * len(weights))
    for i in reversed(range(len(weights))):
        if used[i] is not None:
            delta = delta * used[i]
        z = pre[i]
        delta = delta * _activation_grad(ACTIVATIONS[i], z, _activate(ACTIVATIONS[i], z))
        grads[2 * i] = delta.T @ acts[i]
        grads[2 * i + 1] = delta.sum(axis=0)
        if i:
            delta = delta @ weights[i]
    return loss, grads


def _standardization(X):
    mean = X.mean(axis=0)
    scale = X.std(axis=0)
    scale[~(scale > 0)] = 1.0
    return mean, scale


def init_autoencoder(arch: AeArchitecture, seed: int = 0, mean=None, scale=None, rng=None) -> TrainedAe:
    """Fresh parameters, uniform in +-1/sqrt(fan_in)."""
    rng = np.random.default_rng(seed) if rng is None else rng
    weights, biases = [], []
    for out_dim, in_dim in arch.layer_shapes:
        bound = 1.0 / np.sqrt(in_dim)
        weights.append(rng.uniform(-bound, bound, size=(out_dim, in_dim)))
        biases.append(rng.uniform(-bound, bound, size=out_dim))
    mean = np.zeros(arch.input_dim) if mean is None else mean
    scale = np.ones(arch.input_dim) if scale is None else scale
    return TrainedAe(arch, weights, biases, mean, scale, seed=seed)


def _split(n, fraction, rng):
    perm = rng.permutation(n)
    n_val = int(round(n * fraction))
    if n_val == 0 or n_val == n:
        return perm, perm
    return perm[n_val:], perm[:n_val]


def train(data, arch: AeArchitecture, cfg: AeTrainingConfig = AeTrainingConfig()) -> TrainedAe:
    """Fit an autoencoder on normal instances only."""
    X = np.asarray(data, dtype=float)
    if X.ndim != 2 or len(X) == 0:
        raise ConfigurationError("training data must be a non-empty (n, d) array")
    if X.shape[1] != arch.input_dim:
        raise ConfigurationError(f"data dimension {X.shape[1]} != architecture input {arch.input_dim}")
    if not np.all(np.isfinite(X)):
        raise ConfigurationError("training data contains non-finite values")

    mean, scale = _standardization(X)
    rng = np.random.default_rng(cfg.seed)
    model = init_autoencoder(arch, cfg.seed, mean, scale, rng=rng)
    Xs = (X - mean) / scale
    tr, va = _split(len(Xs), cfg.validation_fraction, rng)

    weights = [np.array(W) for W in model.weights]
    biases = [np.array(b) for b in model.biases]

    def evaluate(idx):
        loss, _ = loss_and_gradients(weights, biases, Xs[idx])
        return loss

    initial = evaluate(va)
    best = (initial, 0, [W.copy() for W in weights], [b.copy() for b in biases])
    train_hist, val_hist = [], []

    for epoch in range(1, cfg.epochs + 1):
        order = tr[rng.permutation(len(tr))]
        for start in range(0, len(order), cfg.batch_size):
            batch = Xs[order[start:start + cfg.batch_size]]
            _, grads = loss_and_gradients(weights, biases, batch, arch.dropout_rates, True, rng)
            for j in range(len(weights)):
                weights[j] -= cfg.learning_rate * grads[2 * j]
                biases[j] -= cfg.learning_rate * grads[2 * j + 1]
        tl, vl = evaluate(tr), evaluate(va)
        if not (np.isfinite(tl) and np.isfinite(vl)):
            raise TrainingError(f"loss diverged at epoch {epoch} (train={tl}, validation={vl})")
        train_hist.append(tl)
        val_hist.append(vl)
        if vl < best[0]:
            best = (vl, epoch, [W.copy() for W in weights], [b.copy() for b in biases])

    if cfg.restore_best:
        _, selected, weights, biases = best
    else:
        selected = cfg.epochs
    return TrainedAe(
        arch, weights, biases, mean, scale, seed=cfg.seed,
        training_loss=train_hist, validation_loss=val_hist,
        initial_validation_loss=initial, selected_epoch=selected,
    )


def forward(model: TrainedAe, inst, mode: str = "eval", rng=None) -> np.ndarray:
    """Reconstruction of one instance (or a batch of rows)."""
    x = getattr(inst, "features", inst)
    x = np.asarray(x, dtype=float)
    z = model.reconstruct(x, mode=mode, rng=rng)
    return z[0] if x.ndim == 1 else z


def reconstruction_mse(x, z) -> float:
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    if x.shape != z.shape:
        raise ConfigurationError(f"shape mismatch {x.shape} vs {z.shape}")
    return float(np.mean((x - z) ** 2))


def mse_strangeness(model: TrainedAe, inst) -> float:
    x = np.asarray(getattr(inst, "features", inst), dtype=float)
    return reconstruction_mse(x, forward(model, x))
