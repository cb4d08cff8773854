"""Train a small classifier, then prune and quantize it.

Run from the repository root:

    python3 demos/train_and_compress.py
"""

import tempfile
from pathlib import Path

import numpy as np

from faithgate.compress import (
    PruneSchedule,
    QuantSpec,
    predict_from_checkpoint,
    predict_quantized_labels,
    prune,
    quantize,
    save_pruned,
    save_quantized,
    size_report,
)
from faithgate.datatab import (
    Schema,
    SplitSpec,
    apply_standardizer,
    fit_standardizer,
    load_csv,
    stratified_split,
)
from faithgate.nnet import TrainConfig, init_model, predict_labels, train
from faithgate.synth import write_csv

workdir = Path(tempfile.mkdtemp(prefix="faithgate-demo-"))

# Synthesize a credit-style dataset and load it through the CSV pipeline.
csv_path = workdir / "credit.csv"
write_csv(csv_path, n_rows=1500, seed=42)
schema = Schema(
    label="default",
    features=[
        "age", "income", "employment_years", "credit_lines",
        "late_payments", "debt_ratio", "utilization",
    ],
)
ds = load_csv(csv_path, schema)
print(f"loaded {ds.feature_matrix.shape[0]} rows, {ds.feature_matrix.shape[1]} features")

# Stratified split keeps the class mix identical across train/val/test.
train_ds, val_ds, test_ds = stratified_split(ds, SplitSpec(fractions=(0.7, 0.15, 0.15), seed=7))
scaler = fit_standardizer(train_ds)
train_std = apply_standardizer(scaler, train_ds)
test_X = scaler.transform(test_ds.feature_matrix)
print(f"split sizes: train={train_ds.n_rows} val={val_ds.n_rows} test={test_ds.n_rows}")

# Train the float baseline: 7 -> 16 -> 8 -> 1 with ReLU hidden layers.
cfg = TrainConfig(epochs=8, batch_size=32, seed=1)
model0 = init_model(7, [16, 8], dropout_rates=[0.1, 0.0], seed=1)
baseline, history = train(model0, train_std, cfg)
acc = float((predict_labels(baseline, test_X) == test_ds.labels).mean())
print(f"baseline: loss {history[0]:.4f} -> {history[-1]:.4f}, test accuracy {acc:.3f}")

# Prune 80% of each weight matrix, ramping sparsity while fine-tuning.
sched = PruneSchedule(initial_sparsity=0.5, final_sparsity=0.8, begin_step=0, end_step=60)
pruned, masks = prune(baseline, sched, TrainConfig(epochs=2, batch_size=32, seed=2), train_std)
rep = size_report(pruned)
acc_p = float((predict_labels(pruned, test_X) == test_ds.labels).mean())
w_sparsity = [1 - np.count_nonzero(w) / w.size for w in pruned.weights]
print(f"pruned:   weight sparsity {[f'{s:.2f}' for s in w_sparsity]}, "
      f"overall {rep.sparsity:.3f} (biases stay dense), test accuracy {acc_p:.3f}")
print("          (bytes unchanged: pruning stores zeros, not a smaller tensor)")

# Quantize weights and activations to 8 bits with a short fine-tune.
qm = quantize(baseline, QuantSpec(bit_width=8, fine_tune_epochs=1),
              TrainConfig(epochs=1, batch_size=32, seed=3), train_std)
rep_f, rep_q = size_report(baseline), size_report(qm)
acc_q = float((predict_quantized_labels(qm, test_X) == test_ds.labels).mean())
print(f"quantized: test accuracy {acc_q:.3f}, "
      f"{rep_f.parameter_bytes} -> {rep_q.parameter_bytes} parameter bytes "
      f"({rep_q.parameter_bytes / rep_f.parameter_bytes:.1%})")

# Checkpoints round-trip through JSON; prediction dispatches on the method tag.
pruned_path = workdir / "pruned.json"
quant_path = workdir / "quantized.json"
save_pruned(pruned, masks, sched, pruned_path, seed=2)
save_quantized(qm, quant_path, seed=3)
for path in (pruned_path, quant_path):
    preds = predict_from_checkpoint(path, test_X)
    agree = float((preds == predict_labels(baseline, test_X)).mean())
    print(f"{path.name}: agrees with baseline on {agree:.1%} of test rows")

print(f"\nartifacts in {workdir}")
