"""Dense feed-forward binary classifier trained with backprop and Adam.

Small-scale by design: plain numpy, float64 math, ReLU hidden layers, one
sigmoid output unit, inverted dropout, binary cross-entropy.  Everything is
seeded so a (model, data, config) triple reproduces parameters bit-for-bit.

Checkpoints are versioned JSON holding layer shapes, parameters cast to
32-bit floats, activation tags, and the training seed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "MlpModel",
    "TrainConfig",
    "AdamState",
    "init_model",
    "forward",
    "predict_proba",
    "predict_labels",
    "loss_and_grads",
    "train",
    "save_model",
    "load_model",
    "load_checkpoint",
    "model_from_checkpoint",
    "CHECKPOINT_FORMAT",
    "CHECKPOINT_VERSION",
]

CHECKPOINT_FORMAT = "faithgate-model"
CHECKPOINT_VERSION = 1

# Sigmoid outputs are clipped into [_P_EPS, 1 - _P_EPS] so probabilities are
# strictly inside (0,1) and the cross-entropy is always finite.
_P_EPS = 1e-12


@dataclass
class MlpModel:
    """Weights/biases per layer plus per-hidden-layer dropout rates.

    Hidden layers use ReLU; the single output unit uses a logistic sigmoid.
    """

    weights: list
    biases: list
    dropout_rates: tuple = ()

    def __post_init__(self):
        if len(self.weights) != len(self.biases) or not self.weights:
            raise ValueError("need one (weight, bias) pair per layer")
        self.weights = [np.asarray(w, dtype=np.float64) for w in self.weights]
        self.biases = [np.asarray(b, dtype=np.float64) for b in self.biases]
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.ndim != 2 or b.ndim != 1 or b.shape[0] != w.shape[1]:
                raise ValueError(f"layer {i}: weight {w.shape} / bias {b.shape} mismatch")
            if i > 0 and w.shape[0] != self.weights[i - 1].shape[1]:
                raise ValueError(f"layer {i}: input width {w.shape[0]} does not follow previous layer")
        if self.weights[-1].shape[1] != 1:
            raise ValueError("output layer must have width 1")
        n_hidden = len(self.weights) - 1
        rates = tuple(self.dropout_rates) if self.dropout_rates else (0.0,) * n_hidden
        if len(rates) != n_hidden:
            raise ValueError("need one dropout rate per hidden layer")
        if any(not (0.0 <= r < 1.0) for r in rates):
            raise ValueError("dropout rates must lie in [0, 1)")
        self.dropout_rates = rates

    @property
    def n_features(self) -> int:
        return self.weights[0].shape[0]

    @property
    def layer_sizes(self) -> tuple:
        return (self.weights[0].shape[0], *(w.shape[1] for w in self.weights))

    def copy(self) -> "MlpModel":
        return MlpModel(
            weights=[w.copy() for w in self.weights],
            biases=[b.copy() for b in self.biases],
            dropout_rates=self.dropout_rates,
        )


@dataclass(frozen=True)
class TrainConfig:
    """Adam hyperparameters plus loop controls.

    ``epochs`` may be 0, which leaves the model untouched (useful as a
    pipeline no-op); defaults follow the usual Adam constants.
    """

    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    epochs: int = 10
    batch_size: int = 32
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.epochs < 0 or self.batch_size < 1:
            raise ValueError("epochs must be >= 0 and batch_size >= 1")
        if not (0.0 <= self.beta1 < 1.0 and 0.0 <= self.beta2 < 1.0):
            raise ValueError("betas must lie in [0, 1)")


def init_model(n_features: int, hidden, dropout_rates=None, seed: int = 0) -> MlpModel:
    """He-style uniform fan-in initialization, seeded.

    Every layer draws W ~ U(-sqrt(6/fan_in), +sqrt(6/fan_in)) and zero
    biases; applied uniformly to hidden and output layers.
    """
    sizes = [int(n_features), *(int(h) for h in hidden), 1]
    if any(s < 1 for s in sizes):
        raise ValueError("layer sizes must be positive")
    rng = np.random.default_rng(seed)
    weights = []
    biases = []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        limit = np.sqrt(6.0 / fan_in)
        weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    rates = tuple(dropout_rates) if dropout_rates is not None else ()
    return MlpModel(weights=weights, biases=biases, dropout_rates=rates)


def _sigmoid(z: np.ndarray) -> np.ndarray:
    """Numerically stable logistic function, one exp per element."""
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _fake_quant(a: np.ndarray, scale: float, qmax: int) -> np.ndarray:
    """Round to the integer grid defined by (scale, qmax) and back."""
    return np.clip(np.rint(a / scale), -qmax, qmax) * scale


def _forward_pass(model: MlpModel, X: np.ndarray, training: bool, rng, act_scales=None, act_qmax: int = 0):
    """Shared forward: returns (pre-activations, activations, dropout masks, probabilities).

    ``activations[0]`` is the input; ``act_scales`` optionally fake-quantizes
    each post-ReLU hidden activation (straight-through in the backward pass).
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise ValueError(f"expected input width {model.n_features}, got {X.shape}")
    zs = []
    acts = [X]
    masks = []
    a = X
    n_hidden = len(model.weights) - 1
    for i in range(n_hidden):
        z = a @ model.weights[i] + model.biases[i]
        zs.append(z)
        h = np.maximum(z, 0.0)
        if act_scales is not None:
            h = _fake_quant(h, act_scales[i], act_qmax)
        rate = model.dropout_rates[i]
        if training and rate > 0.0:
            if rng is None:
                raise ValueError("training forward with dropout needs an rng")
            # inverted dropout: scale kept units by 1/(1-rate) at train time
            mask = (rng.random(h.shape) >= rate) / (1.0 - rate)
            h = h * mask
            masks.append(mask)
        else:
            masks.append(None)
        acts.append(h)
        a = h
    z_out = a @ model.weights[-1] + model.biases[-1]
    zs.append(z_out)
    p = np.clip(_sigmoid(z_out[:, 0]), _P_EPS, 1.0 - _P_EPS)
    return zs, acts, masks, p


def forward(model: MlpModel, X, training: bool = False, rng=None) -> np.ndarray:
    """Probability of class 1 per row, strictly inside (0,1).

    Dropout fires only when ``training`` is true (and then needs ``rng``);
    inference is deterministic.
    """
    _, _, _, p = _forward_pass(model, X, training, rng)
    return p


def predict_proba(model: MlpModel, X) -> np.ndarray:
    return forward(model, X, training=False)


def predict_labels(model: MlpModel, X, threshold: float = 0.5) -> np.ndarray:
    """Hard labels: 1 iff probability >= threshold (boundary inclusive)."""
    if not (0.0 < threshold < 1.0):
        raise ValueError("threshold must lie in (0, 1)")
    return (predict_proba(model, X) >= threshold).astype(np.int64)


def bce_loss(p: np.ndarray, y: np.ndarray) -> float:
    """Mean binary cross-entropy; p is already clipped inside (0,1)."""
    y = np.asarray(y, dtype=np.float64)
    return float(-np.mean(y * np.log(p) + (1.0 - y) * np.log1p(-p)))


def loss_and_grads(model: MlpModel, X, y, rng=None, act_scales=None, act_qmax: int = 0):
    """Mean BCE and its gradients w.r.t. every weight and bias.

    Passing ``rng`` enables dropout (a training step); ``act_scales`` adds
    fake quantization of hidden activations, treated as identity in the
    backward pass (straight-through estimator).
    """
    y = np.asarray(y, dtype=np.float64)
    training = rng is not None
    zs, acts, masks, p = _forward_pass(model, X, training, rng, act_scales, act_qmax)
    n = X.shape[0]
    loss = bce_loss(p, y)

    # fused sigmoid + BCE gradient: dL/dz_out = (p - y)/n
    delta = ((p - y) / n)[:, None]
    dw = [None] * len(model.weights)
    db = [None] * len(model.biases)
    for i in range(len(model.weights) - 1, -1, -1):
        dw[i] = acts[i].T @ delta
        db[i] = delta.sum(axis=0)
        if i == 0:
            break
        back = delta @ model.weights[i].T
        mask = masks[i - 1]
        if mask is not None:
            back = back * mask
        back[zs[i - 1] <= 0.0] = 0.0  # ReLU gate
        delta = back
    return loss, (dw, db)


@dataclass
class AdamState:
    """First/second moment accumulators and the step counter for Adam."""

    m: list
    v: list
    t: int = 0

    @classmethod
    def for_model(cls, model: MlpModel) -> "AdamState":
        shapes = [w.shape for w in model.weights] + [b.shape for b in model.biases]
        return cls(m=[np.zeros(s) for s in shapes], v=[np.zeros(s) for s in shapes])

    def update(self, model: MlpModel, grads, cfg: TrainConfig) -> None:
        """One in-place Adam step over all parameters of ``model``."""
        dw, db = grads
        self.t += 1
        flat_params = model.weights + model.biases
        flat_grads = list(dw) + list(db)
        bc1 = 1.0 - cfg.beta1 ** self.t
        bc2 = 1.0 - cfg.beta2 ** self.t
        for p, g, m, v in zip(flat_params, flat_grads, self.m, self.v):
            m *= cfg.beta1
            m += (1.0 - cfg.beta1) * g
            v *= cfg.beta2
            v += (1.0 - cfg.beta2) * np.square(g)
            p -= cfg.learning_rate * (m / bc1) / (np.sqrt(v / bc2) + cfg.epsilon)


def train(model: MlpModel, data, cfg: TrainConfig):
    """Adam-train a copy of the model; returns (trained model, per-epoch loss history).

    ``data`` is a standardized training Dataset (or any object exposing
    ``feature_matrix`` and ``labels``).  One rng seeded from ``cfg.seed``
    drives batch shuffling and dropout masks, so identical inputs give
    bit-identical parameters.  A non-finite loss aborts with diagnostics.
    """
    X = np.asarray(data.feature_matrix, dtype=np.float64)
    y = np.asarray(data.labels, dtype=np.float64)
    if X.shape[0] == 0:
        raise ValueError("training data is empty")
    out = model.copy()
    rng = np.random.default_rng(cfg.seed)
    state = AdamState.for_model(out)
    history = []
    n = X.shape[0]
    has_dropout = any(r > 0 for r in out.dropout_rates)
    for epoch in range(cfg.epochs):
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            loss, grads = loss_and_grads(out, X[idx], y[idx], rng=rng if has_dropout else None)
            if not np.isfinite(loss):
                raise RuntimeError(
                    f"non-finite loss {loss!r} at epoch {epoch}, batch offset {start}"
                )
            state.update(out, grads, cfg)
            total += loss * len(idx)
        history.append(total / n)
    return out, history


# --- checkpoints -------------------------------------------------------------

def save_model(model: MlpModel, path, seed: int | None = None, extra: dict | None = None) -> None:
    """Write a versioned JSON checkpoint; parameters are cast to float32.

    ``extra`` entries (e.g. compression records) are merged at top level.
    """
    doc = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "hidden_activation": "relu",
        "output_activation": "sigmoid",
        "layer_sizes": list(model.layer_sizes),
        "dropout_rates": list(model.dropout_rates),
        "seed": seed,
        "layers": [
            {
                "weights": w.astype(np.float32).tolist(),
                "bias": b.astype(np.float32).tolist(),
            }
            for w, b in zip(model.weights, model.biases)
        ],
    }
    if extra:
        doc.update(extra)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)


def load_checkpoint(path) -> dict:
    """Read and validate the raw checkpoint document."""
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("format") != CHECKPOINT_FORMAT:
        raise ValueError(f"{path}: not a model checkpoint (format={doc.get('format')!r})")
    if doc.get("version") != CHECKPOINT_VERSION:
        raise ValueError(f"{path}: unsupported checkpoint version {doc.get('version')!r}")
    return doc


def model_from_checkpoint(doc: dict) -> MlpModel:
    """Rebuild an MlpModel from a checkpoint document (float32-valued params)."""
    if doc.get("hidden_activation") != "relu" or doc.get("output_activation") != "sigmoid":
        raise ValueError("checkpoint carries unsupported activation tags")
    layers = doc["layers"]
    return MlpModel(
        weights=[np.asarray(l["weights"], dtype=np.float64) for l in layers],
        biases=[np.asarray(l["bias"], dtype=np.float64) for l in layers],
        dropout_rates=tuple(doc.get("dropout_rates", ())),
    )


def load_model(path) -> MlpModel:
    return model_from_checkpoint(load_checkpoint(path))
