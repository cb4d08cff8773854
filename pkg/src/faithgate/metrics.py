"""Confusion-matrix metrics, validation-vs-test error scores, and run aggregation.

The same confusion machinery serves two purposes: scored against true labels
it measures performance, scored against the baseline model's predictions it
measures agreement between a compressed model and its original.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .stat_test import _as_binary

__all__ = [
    "ConfusionCounts",
    "ClassificationMetrics",
    "RunAggregate",
    "PredictabilityStats",
    "confusion",
    "classification_metrics",
    "rmse",
    "mape",
    "aggregate",
    "predictability_stats",
]


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    tn: int
    fp: int
    fn: int

    def __post_init__(self):
        if min(self.tp, self.tn, self.fp, self.fn) < 0:
            raise ValueError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn


@dataclass(frozen=True)
class ClassificationMetrics:
    """Accuracy/precision/recall/F1 with zero-denominator flags.

    A metric whose denominator is zero is reported as 0.0 and its name is
    listed in ``undefined`` so degenerate runs stay visible in aggregates
    instead of crashing mid-experiment.
    """

    accuracy: float
    precision: float
    recall: float
    f1: float
    undefined: tuple[str, ...] = ()


@dataclass(frozen=True)
class RunAggregate:
    mean: float
    sample_std: float
    n_runs: int


@dataclass(frozen=True)
class PredictabilityStats:
    rmse: float
    mape: float


def confusion(reference, predicted) -> ConfusionCounts:
    """Tally TP/TN/FP/FN of ``predicted`` against ``reference`` (positive class is 1)."""
    ref = _as_binary(reference, "reference")
    pred = _as_binary(predicted, "predicted")
    if ref.shape != pred.shape:
        raise ValueError(f"length mismatch: reference has {ref.size}, predicted has {pred.size}")
    if ref.size == 0:
        raise ValueError("cannot compute confusion counts of empty vectors")
    tp = int(np.sum((ref == 1) & (pred == 1)))
    tn = int(np.sum((ref == 0) & (pred == 0)))
    fp = int(np.sum((ref == 0) & (pred == 1)))
    fn = int(np.sum((ref == 1) & (pred == 0)))
    return ConfusionCounts(tp=tp, tn=tn, fp=fp, fn=fn)


def classification_metrics(c: ConfusionCounts) -> ClassificationMetrics:
    """Derive accuracy, precision, recall and F1 from confusion counts."""
    if c.total == 0:
        raise ValueError("confusion counts are empty")
    undefined = []
    accuracy = (c.tp + c.tn) / c.total
    if c.tp + c.fp > 0:
        precision = c.tp / (c.tp + c.fp)
    else:
        precision = 0.0
        undefined.append("precision")
    if c.tp + c.fn > 0:
        recall = c.tp / (c.tp + c.fn)
    else:
        recall = 0.0
        undefined.append("recall")
    if precision + recall > 0:
        f1 = 2.0 * precision * recall / (precision + recall)
    else:
        f1 = 0.0
        undefined.append("f1")
    return ClassificationMetrics(
        accuracy=accuracy,
        precision=precision,
        recall=recall,
        f1=f1,
        undefined=tuple(undefined),
    )


def rmse(forecast, actual) -> float:
    """Root-mean-squared error between paired value sequences."""
    f, a = _as_paired(forecast, actual)
    return float(np.sqrt(np.mean((f - a) ** 2)))


def mape(forecast, actual) -> float:
    """Mean absolute percentage error, returned as a fraction.

    Raises ValueError when any actual value is zero: relative error is
    meaningless there and near-zero actuals make the score misleading, so
    callers must handle that case explicitly.
    """
    f, a = _as_paired(forecast, actual)
    if np.any(a == 0.0):
        raise ValueError("mape is undefined when any actual value is zero")
    return float(np.mean(np.abs(a - f) / np.abs(a)))


def predictability_stats(forecast, actual) -> PredictabilityStats:
    return PredictabilityStats(rmse=rmse(forecast, actual), mape=mape(forecast, actual))


def aggregate(values) -> RunAggregate:
    """Mean and sample standard deviation (n-1 denominator) of per-run values."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError("aggregate expects a one-dimensional sequence")
    if arr.size < 2:
        raise ValueError(f"sample standard deviation needs at least 2 runs, got {arr.size}")
    if not np.isfinite(arr).all():
        raise ValueError("aggregate values must be finite")
    mean = float(arr.mean())
    sample_std = float(math.sqrt(np.sum((arr - mean) ** 2) / (arr.size - 1)))
    return RunAggregate(mean=mean, sample_std=sample_std, n_runs=int(arr.size))


def _as_paired(forecast, actual) -> tuple[np.ndarray, np.ndarray]:
    f = np.asarray(forecast, dtype=np.float64)
    a = np.asarray(actual, dtype=np.float64)
    if f.ndim != 1 or a.ndim != 1:
        raise ValueError("forecast and actual must be one-dimensional")
    if f.shape != a.shape:
        raise ValueError(f"length mismatch: forecast has {f.size}, actual has {a.size}")
    if f.size == 0:
        raise ValueError("forecast and actual must be non-empty")
    return f, a
