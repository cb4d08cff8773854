"""The two compression procedures under audit, plus size accounting.

Magnitude pruning: a polynomial-decay sparsity schedule masks the
smallest-magnitude weights per layer during fine-tuning; masked weights stay
exactly zero afterwards.  Simulated quantization: symmetric per-tensor
integer codes for weights and biases, fake-quantized hidden activations with
ranges calibrated on one pass over training data, and optional fine-tuning
with straight-through gradients.

Size accounting is parameter bytes only (elements x element width, plus one
4-byte scale per quantized tensor) — deliberately independent of any
serialization format.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .nnet import (
    AdamState,
    MlpModel,
    TrainConfig,
    _fake_quant,
    _forward_pass,
    load_checkpoint,
    loss_and_grads,
    model_from_checkpoint,
    save_model,
)

__all__ = [
    "PruneSchedule",
    "QuantSpec",
    "SizeReport",
    "QuantizedModel",
    "sparsity_at",
    "prune",
    "quantize",
    "quantize_tensor",
    "size_report",
    "forward_quantized",
    "predict_quantized_labels",
    "save_pruned",
    "save_quantized",
    "load_quantized",
    "load_any_model",
    "predict_from_checkpoint",
]


@dataclass(frozen=True)
class PruneSchedule:
    """Polynomial decay from initial to final sparsity over optimizer steps."""

    initial_sparsity: float
    final_sparsity: float
    begin_step: int = 0
    end_step: int = 100
    power: float = 3.0

    def __post_init__(self):
        if not (0.0 <= self.initial_sparsity < 1.0 and 0.0 <= self.final_sparsity < 1.0):
            raise ValueError("sparsities must lie in [0, 1)")
        if self.final_sparsity < self.initial_sparsity:
            raise ValueError("final sparsity must be >= initial sparsity")
        if self.end_step <= self.begin_step:
            raise ValueError("end_step must exceed begin_step")


@dataclass(frozen=True)
class QuantSpec:
    """Symmetric per-tensor integer quantization settings."""

    bit_width: int = 8
    fine_tune_epochs: int = 0

    def __post_init__(self):
        if self.bit_width not in (4, 8, 16):
            raise ValueError("bit_width must be one of 4, 8, 16")
        if self.fine_tune_epochs < 0:
            raise ValueError("fine_tune_epochs must be >= 0")

    @property
    def qmax(self) -> int:
        return 2 ** (self.bit_width - 1) - 1


@dataclass(frozen=True)
class SizeReport:
    parameter_bytes: int
    nonzero_parameters: int
    total_parameters: int
    sparsity: float


@dataclass
class QuantizedModel:
    """Integer codes plus per-tensor scales; ``model`` holds the dequantized weights.

    ``activation_scales`` fake-quantize each hidden layer's ReLU output at
    inference, mirroring the fine-tuning forward pass.
    """

    model: MlpModel
    weight_codes: list
    weight_scales: list
    bias_codes: list
    bias_scales: list
    activation_scales: list
    bit_width: int

    @property
    def qmax(self) -> int:
        return 2 ** (self.bit_width - 1) - 1


def sparsity_at(schedule: PruneSchedule, step: int) -> float:
    """Scheduled sparsity at optimizer step ``step``; clamps outside [begin, end]."""
    if step < 0:
        raise ValueError("step must be >= 0")
    span = schedule.end_step - schedule.begin_step
    frac = min(max((step - schedule.begin_step) / span, 0.0), 1.0)
    s_i, s_f = schedule.initial_sparsity, schedule.final_sparsity
    return s_f + (s_i - s_f) * (1.0 - frac) ** schedule.power


def _zeros_wanted(target: float, size: int) -> int:
    return math.floor(target * size + 0.5)


def _update_masks(weights, masks, target: float) -> None:
    """Grow each layer's mask so zeros reach the target count.

    Only currently-kept weights are candidates, so masks are monotone: a
    weight once pruned never returns.  Ties in |w| break by index order.
    """
    for w, mask in zip(weights, masks):
        want = _zeros_wanted(target, w.size)
        have = int(w.size - mask.sum())
        add = want - have
        if add <= 0:
            continue
        kept = np.flatnonzero(mask.ravel())
        order = np.argsort(np.abs(w.ravel()[kept]), kind="stable")
        mask.ravel()[kept[order[:add]]] = False


def _apply_masks(model: MlpModel, masks) -> None:
    for w, mask in zip(model.weights, masks):
        w[~mask] = 0.0


def prune(model: MlpModel, schedule: PruneSchedule, cfg: TrainConfig, data):
    """Magnitude-prune weight matrices while fine-tuning; returns (model, masks).

    The mask is recomputed from the schedule at every optimizer step and
    re-applied after each Adam update, so pruned weights stay exactly zero.
    A final update pins every layer to the schedule's final sparsity within
    one weight.  Biases are never pruned.
    """
    for w in model.weights:
        if w.size - _zeros_wanted(schedule.final_sparsity, w.size) < 1:
            raise ValueError(
                f"final sparsity {schedule.final_sparsity} leaves a {w.shape} layer "
                "with no nonzero weights"
            )
    out = model.copy()
    masks = [np.ones(w.shape, dtype=bool) for w in out.weights]
    X = np.asarray(data.feature_matrix, dtype=np.float64)
    y = np.asarray(data.labels, dtype=np.float64)
    rng = np.random.default_rng(cfg.seed)
    state = AdamState.for_model(out)
    has_dropout = any(r > 0 for r in out.dropout_rates)
    n = X.shape[0]
    step = 0
    for _ in range(cfg.epochs):
        order = rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            _update_masks(out.weights, masks, sparsity_at(schedule, step))
            _apply_masks(out, masks)
            idx = order[start : start + cfg.batch_size]
            loss, grads = loss_and_grads(out, X[idx], y[idx], rng=rng if has_dropout else None)
            if not np.isfinite(loss):
                raise RuntimeError(f"non-finite loss {loss!r} during pruning at step {step}")
            state.update(out, grads, cfg)
            _apply_masks(out, masks)
            step += 1
    _update_masks(out.weights, masks, schedule.final_sparsity)
    _apply_masks(out, masks)
    return out, masks


def quantize_tensor(w: np.ndarray, qmax: int):
    """Symmetric per-tensor codes and scale: scale = max|w| / qmax.

    An all-zero tensor takes scale 1 so codes are all zero.  Round-trip
    error is bounded by scale/2 per element and is exactly 0 at 0 and at
    the extreme |w|.
    """
    peak = float(np.max(np.abs(w))) if w.size else 0.0
    scale = peak / qmax if peak > 0.0 else 1.0
    codes = np.clip(np.rint(w / scale), -qmax, qmax).astype(np.int32)
    return codes, scale


def _snap_model(model: MlpModel, qmax: int) -> MlpModel:
    """Copy with every weight and bias tensor snapped to its integer grid."""
    out = model.copy()
    for i in range(len(out.weights)):
        codes, scale = quantize_tensor(out.weights[i], qmax)
        out.weights[i] = codes.astype(np.float64) * scale
        codes, scale = quantize_tensor(out.biases[i], qmax)
        out.biases[i] = codes.astype(np.float64) * scale
    return out


def _calibrate_activations(model: MlpModel, X: np.ndarray, qmax: int):
    """Per-hidden-layer activation scales from one pass over the data."""
    zs, acts, _, _ = _forward_pass(model, X, training=False, rng=None)
    scales = []
    for h in acts[1:]:  # acts[0] is the input
        peak = float(np.max(np.abs(h))) if h.size else 0.0
        scales.append(peak / qmax if peak > 0.0 else 1.0)
    return scales


def quantize(model: MlpModel, spec: QuantSpec, cfg: TrainConfig, data) -> QuantizedModel:
    """Simulate low-bit inference; returns the quantized model with scales.

    Weights and biases get symmetric per-tensor codes; hidden activations
    are fake-quantized with ranges frozen after one calibration pass over
    ``data``.  Fine-tuning (if requested) runs the quantized forward but
    applies gradients to shadow float weights — the straight-through
    estimator — then re-quantizes.
    """
    X = np.asarray(data.feature_matrix, dtype=np.float64)
    y = np.asarray(data.labels, dtype=np.float64)
    qmax = spec.qmax
    act_scales = _calibrate_activations(_snap_model(model, qmax), X, qmax)

    shadow = model.copy()
    if spec.fine_tune_epochs > 0:
        ft_cfg = replace(cfg, epochs=spec.fine_tune_epochs)
        rng = np.random.default_rng(ft_cfg.seed)
        state = AdamState.for_model(shadow)
        has_dropout = any(r > 0 for r in shadow.dropout_rates)
        n = X.shape[0]
        for _ in range(ft_cfg.epochs):
            order = rng.permutation(n)
            for start in range(0, n, ft_cfg.batch_size):
                idx = order[start : start + ft_cfg.batch_size]
                loss, grads = loss_and_grads(
                    _snap_model(shadow, qmax),
                    X[idx],
                    y[idx],
                    rng=rng if has_dropout else None,
                    act_scales=act_scales,
                    act_qmax=qmax,
                )
                if not np.isfinite(loss):
                    raise RuntimeError(f"non-finite loss {loss!r} during quantization fine-tune")
                state.update(shadow, grads, ft_cfg)

    weight_codes, weight_scales, bias_codes, bias_scales = [], [], [], []
    deq = shadow.copy()
    for i in range(len(shadow.weights)):
        codes, scale = quantize_tensor(shadow.weights[i], qmax)
        weight_codes.append(codes)
        weight_scales.append(scale)
        deq.weights[i] = codes.astype(np.float64) * scale
        codes, scale = quantize_tensor(shadow.biases[i], qmax)
        bias_codes.append(codes)
        bias_scales.append(scale)
        deq.biases[i] = codes.astype(np.float64) * scale
    return QuantizedModel(
        model=deq,
        weight_codes=weight_codes,
        weight_scales=weight_scales,
        bias_codes=bias_codes,
        bias_scales=bias_scales,
        activation_scales=act_scales,
        bit_width=spec.bit_width,
    )


def forward_quantized(qm: QuantizedModel, X) -> np.ndarray:
    """Inference with dequantized parameters and fake-quantized activations."""
    _, _, _, p = _forward_pass(
        qm.model, X, training=False, rng=None,
        act_scales=qm.activation_scales, act_qmax=qm.qmax,
    )
    return p


def predict_quantized_labels(qm: QuantizedModel, X, threshold: float = 0.5) -> np.ndarray:
    if not (0.0 < threshold < 1.0):
        raise ValueError("threshold must lie in (0, 1)")
    return (forward_quantized(qm, X) >= threshold).astype(np.int64)


def size_report(model) -> SizeReport:
    """Parameter-byte accounting for a float or quantized model.

    Float parameters cost 4 bytes each; quantized tensors cost
    ceil(elements x bits / 8) plus one 4-byte scale per tensor.  Masks are
    not parameters and are excluded, which is why pruning alone leaves
    ``parameter_bytes`` unchanged.
    """
    if isinstance(model, QuantizedModel):
        tensors = model.weight_codes + model.bias_codes
        bits = model.bit_width
        total_bytes = sum(math.ceil(t.size * bits / 8) + 4 for t in tensors)
        flat = np.concatenate([t.ravel() for t in tensors])
    elif isinstance(model, MlpModel):
        tensors = model.weights + model.biases
        total_bytes = sum(4 * t.size for t in tensors)
        flat = np.concatenate([t.ravel() for t in tensors])
    else:
        raise TypeError(f"cannot size {type(model).__name__}")
    total = int(flat.size)
    nonzero = int(np.count_nonzero(flat))
    return SizeReport(
        parameter_bytes=int(total_bytes),
        nonzero_parameters=nonzero,
        total_parameters=total,
        sparsity=(total - nonzero) / total,
    )


# --- compressed checkpoints ---------------------------------------------------

def save_pruned(model: MlpModel, masks, schedule: PruneSchedule, path, seed: int | None = None) -> None:
    """Checkpoint a pruned model: base container plus masks and provenance."""
    save_model(
        model,
        path,
        seed=seed,
        extra={
            "masks": [m.astype(int).tolist() for m in masks],
            "compression": {
                "method": "pruned",
                "schedule": {
                    "initial_sparsity": schedule.initial_sparsity,
                    "final_sparsity": schedule.final_sparsity,
                    "begin_step": schedule.begin_step,
                    "end_step": schedule.end_step,
                    "power": schedule.power,
                },
                "seed": seed,
            },
        },
    )


def save_quantized(qm: QuantizedModel, path, seed: int | None = None) -> None:
    """Checkpoint a quantized model: integer codes, scales, and provenance."""
    save_model(
        qm.model,
        path,
        seed=seed,
        extra={
            "quantization": {
                "bit_width": qm.bit_width,
                "weight_codes": [c.tolist() for c in qm.weight_codes],
                "weight_scales": [float(s) for s in qm.weight_scales],
                "bias_codes": [c.tolist() for c in qm.bias_codes],
                "bias_scales": [float(s) for s in qm.bias_scales],
                "activation_scales": [float(s) for s in qm.activation_scales],
            },
            "compression": {
                "method": "quantized",
                "spec": {"bit_width": qm.bit_width},
                "seed": seed,
            },
        },
    )


def _quantized_from_doc(doc: dict) -> QuantizedModel:
    q = doc["quantization"]
    weight_codes = [np.asarray(c, dtype=np.int32) for c in q["weight_codes"]]
    bias_codes = [np.asarray(c, dtype=np.int32) for c in q["bias_codes"]]
    weight_scales = [float(s) for s in q["weight_scales"]]
    bias_scales = [float(s) for s in q["bias_scales"]]
    model = MlpModel(
        weights=[c.astype(np.float64) * s for c, s in zip(weight_codes, weight_scales)],
        biases=[c.astype(np.float64) * s for c, s in zip(bias_codes, bias_scales)],
        dropout_rates=tuple(doc.get("dropout_rates", ())),
    )
    return QuantizedModel(
        model=model,
        weight_codes=weight_codes,
        weight_scales=weight_scales,
        bias_codes=bias_codes,
        bias_scales=bias_scales,
        activation_scales=[float(s) for s in q["activation_scales"]],
        bit_width=int(q["bit_width"]),
    )


def load_quantized(path) -> QuantizedModel:
    doc = load_checkpoint(path)
    if "quantization" not in doc:
        raise ValueError(f"{path}: checkpoint has no quantization record")
    return _quantized_from_doc(doc)


def load_any_model(path):
    """Load a checkpoint as QuantizedModel or MlpModel, whichever it holds."""
    doc = load_checkpoint(path)
    if "quantization" in doc:
        return _quantized_from_doc(doc)
    return model_from_checkpoint(doc)


def predict_from_checkpoint(path, X, threshold: float = 0.5) -> np.ndarray:
    """Hard labels from any saved model; quantized checkpoints replay their
    fake-quantized forward pass so predictions match the original run."""
    loaded = load_any_model(path)
    if isinstance(loaded, QuantizedModel):
        return predict_quantized_labels(loaded, X, threshold)
    from .nnet import predict_labels

    return predict_labels(loaded, X, threshold)
