"""Checkpoint loading and inference for saved classifier models.

Reads the versioned JSON checkpoint format ("faithgate-model", version 1):
float and pruned checkpoints carry float32 parameters in ``layers``;
quantized checkpoints additionally carry integer codes, per-tensor scales,
and activation scales under ``quantization``.  Inference reproduces the
original arithmetic exactly — float64 throughout, ReLU hidden layers with
optional activation fake-quantization, a branch-stable sigmoid clipped to
(0, 1), and an inclusive >= threshold — so labels match the training-side
implementation bit for bit.
"""

import json

import numpy as np

CHECKPOINT_FORMAT = "faithgate-model"
CHECKPOINT_VERSION = 1

# sigmoid outputs are clipped into [P_EPS, 1 - P_EPS]
P_EPS = 1e-12


class LoadedModel:
    """A scoring-ready model: dequantized weights plus optional extras.

    ``act_scales``/``qmax`` are set only for quantized checkpoints, in which
    case every hidden activation is snapped to its integer grid during the
    forward pass, replaying the fake-quantized inference of the original.
    ``standardizer`` is the (mean, std) pair embedded by the training
    pipeline, when present.
    """

    def __init__(self, weights, biases, act_scales=None, qmax=0, standardizer=None):
        self.weights = weights
        self.biases = biases
        self.act_scales = act_scales
        self.qmax = qmax
        self.standardizer = standardizer

    @property
    def n_features(self) -> int:
        return self.weights[0].shape[0]

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise ValueError(f"expected input width {self.n_features}, got {X.shape}")
        a = X
        for i in range(len(self.weights) - 1):
            h = np.maximum(a @ self.weights[i] + self.biases[i], 0.0)
            if self.act_scales is not None:
                h = np.clip(np.rint(h / self.act_scales[i]), -self.qmax, self.qmax) * self.act_scales[i]
            a = h
        z = (a @ self.weights[-1] + self.biases[-1])[:, 0]
        p = np.empty_like(z)
        pos = z >= 0
        p[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
        ez = np.exp(z[~pos])
        p[~pos] = ez / (1.0 + ez)
        return np.clip(p, P_EPS, 1.0 - P_EPS)

    def predict_labels(self, X: np.ndarray, threshold: float = 0.5) -> np.ndarray:
        if not (0.0 < threshold < 1.0):
            raise ValueError("threshold must lie in (0, 1)")
        return (self.predict_proba(X) >= threshold).astype(np.int64)


def load_model(path) -> LoadedModel:
    """Load any supported checkpoint; raises ValueError for unusable files."""
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path}: not a JSON checkpoint ({exc})") from None
    if not isinstance(doc, dict) or doc.get("format") != CHECKPOINT_FORMAT:
        got = doc.get("format") if isinstance(doc, dict) else type(doc).__name__
        raise ValueError(f"{path}: not a model checkpoint (format={got!r})")
    if doc.get("version") != CHECKPOINT_VERSION:
        raise ValueError(f"{path}: unsupported checkpoint version {doc.get('version')!r}")
    if doc.get("hidden_activation") != "relu" or doc.get("output_activation") != "sigmoid":
        raise ValueError(f"{path}: checkpoint carries unsupported activation tags")

    standardizer = None
    pipe = doc.get("pipeline")
    if pipe and "standardizer" in pipe:
        standardizer = (
            np.asarray(pipe["standardizer"]["mean"], dtype=np.float64),
            np.asarray(pipe["standardizer"]["std"], dtype=np.float64),
        )

    q = doc.get("quantization")
    if q is not None:
        # dequantize: float64 weights live exactly on the code x scale grid
        weights = [
            np.asarray(c, dtype=np.int32).astype(np.float64) * float(s)
            for c, s in zip(q["weight_codes"], q["weight_scales"])
        ]
        biases = [
            np.asarray(c, dtype=np.int32).astype(np.float64) * float(s)
            for c, s in zip(q["bias_codes"], q["bias_scales"])
        ]
        return LoadedModel(
            weights,
            biases,
            act_scales=[float(s) for s in q["activation_scales"]],
            qmax=2 ** (int(q["bit_width"]) - 1) - 1,
            standardizer=standardizer,
        )

    layers = doc["layers"]
    return LoadedModel(
        [np.asarray(l["weights"], dtype=np.float64) for l in layers],
        [np.asarray(l["bias"], dtype=np.float64) for l in layers],
        standardizer=standardizer,
    )
