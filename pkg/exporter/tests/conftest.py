"""Shared fixtures: a small raw dataset plus trained/pruned/quantized checkpoints.

The checkpoints are produced by the training-side package (faithgate), which
the exporter itself never imports; here it plays the role of the external
system whose artifacts we re-score.
"""

import csv

import numpy as np
import pytest
from faithgate.compress import PruneSchedule, QuantSpec, prune, quantize, save_pruned, save_quantized
from faithgate.nnet import TrainConfig, init_model, save_model, train


class _Data:
    def __init__(self, X, y):
        self.feature_matrix = X
        self.labels = y


def _make_table(n, seed):
    """Numeric features, one demographic column, and a correlated 0/1 label."""
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, 5))
    y = (X[:, 0] - 0.7 * X[:, 2] + 0.4 * rng.normal(size=n) > 0).astype(np.int64)
    sex = np.where(rng.random(n) < 0.5, "f", "m")
    return X, y, sex


def _write_data_csv(path, X, y, sex):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow([f"f{k}" for k in range(X.shape[1])] + ["sex", "label"])
        for i in range(X.shape[0]):
            w.writerow([repr(float(v)) for v in X[i]] + [sex[i], int(y[i])])


@pytest.fixture()
def write_data_csv():
    return _write_data_csv


@pytest.fixture(scope="session")
def workspace(tmp_path_factory):
    """Dict of paths: data CSV, matching raw arrays, and three checkpoints."""
    root = tmp_path_factory.mktemp("exporter")
    X, y, sex = _make_table(300, seed=5)
    data_path = root / "holdout.csv"
    _write_data_csv(data_path, X, y, sex)

    train_X, train_y, _ = _make_table(500, seed=6)
    data = _Data(train_X, train_y)
    cfg = TrainConfig(epochs=4, batch_size=32, seed=7)
    baseline, _ = train(init_model(5, [10, 6], seed=7), data, cfg)

    base_path = root / "baseline.json"
    save_model(baseline, base_path, seed=7)

    sched = PruneSchedule(0.5, 0.8, begin_step=0, end_step=20)
    pruned, masks = prune(baseline, sched, TrainConfig(epochs=2, batch_size=32, seed=8), data)
    pruned_path = root / "pruned.json"
    save_pruned(pruned, masks, sched, pruned_path, seed=8)

    qm = quantize(baseline, QuantSpec(bit_width=8, fine_tune_epochs=1),
                  TrainConfig(epochs=1, batch_size=32, seed=9), data)
    quant_path = root / "quantized.json"
    save_quantized(qm, quant_path, seed=9)

    return {
        "root": root,
        "data": data_path,
        "X": X,
        "y": y,
        "sex": sex,
        "baseline": base_path,
        "pruned": pruned_path,
        "quantized": quant_path,
    }
