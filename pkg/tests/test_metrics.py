"""Tests for confusion-derived metrics, error scores, and run aggregation."""

import math

import numpy as np
import pytest

from faithgate.metrics import (
    ConfusionCounts,
    aggregate,
    classification_metrics,
    confusion,
    mape,
    predictability_stats,
    rmse,
)


def test_confusion_counts_by_hand():
    ref = [1, 1, 1, 1, 0, 0, 0, 1, 0, 0]
    pred = [1, 1, 0, 1, 0, 1, 0, 1, 0, 1]
    c = confusion(ref, pred)
    assert (c.tp, c.tn, c.fp, c.fn) == (4, 3, 2, 1)
    assert c.total == 10


def test_confusion_validation():
    with pytest.raises(ValueError, match="length mismatch"):
        confusion([0, 1], [0])
    with pytest.raises(ValueError, match="empty"):
        confusion([], [])
    with pytest.raises(ValueError):
        confusion([0, 1], [0, 2])
    with pytest.raises(ValueError):
        ConfusionCounts(tp=-1, tn=0, fp=0, fn=0)


def test_metric_values_by_hand():
    m = classification_metrics(ConfusionCounts(tp=6, tn=3, fp=2, fn=1))
    assert m.accuracy == 9 / 12
    assert m.precision == 6 / 8
    assert m.recall == 6 / 7
    np.testing.assert_allclose(m.f1, 2 * (6 / 8) * (6 / 7) / (6 / 8 + 6 / 7))
    assert m.undefined == ()


def test_perfect_agreement_is_all_ones():
    v = np.array([1, 0, 1, 1, 0])
    m = classification_metrics(confusion(v, v))
    assert (m.accuracy, m.precision, m.recall, m.f1) == (1.0, 1.0, 1.0, 1.0)


def test_zero_denominators_are_flagged_not_fatal():
    # no predicted positives -> precision undefined
    m = classification_metrics(confusion([1, 0, 1], [0, 0, 0]))
    assert m.precision == 0.0 and "precision" in m.undefined
    # no actual positives -> recall undefined
    m = classification_metrics(confusion([0, 0, 0], [1, 0, 1]))
    assert m.recall == 0.0 and "recall" in m.undefined
    # neither -> f1 undefined too
    m = classification_metrics(confusion([0, 0], [0, 0]))
    assert m.undefined == ("precision", "recall", "f1")
    assert m.accuracy == 1.0


def test_f1_bounded_by_max_of_precision_recall():
    rng = np.random.default_rng(3)
    for _ in range(50):
        n = int(rng.integers(4, 60))
        ref = rng.integers(0, 2, n)
        pred = rng.integers(0, 2, n)
        m = classification_metrics(confusion(ref, pred))
        if not m.undefined:
            assert m.f1 <= max(m.precision, m.recall) + 1e-12


def test_empty_counts_rejected():
    with pytest.raises(ValueError):
        classification_metrics(ConfusionCounts(0, 0, 0, 0))


# --- rmse / mape ----------------------------------------------------------------


def test_rmse_by_hand():
    assert rmse([1.0, 2.0], [3.0, 2.0]) == math.sqrt(2.0)
    assert rmse([0.5], [0.5]) == 0.0


def test_rmse_symmetry_and_scale():
    rng = np.random.default_rng(4)
    for _ in range(20):
        a = rng.normal(size=8)
        b = rng.normal(size=8)
        assert rmse(a, b) == rmse(b, a)
        np.testing.assert_allclose(rmse(3.0 * a, 3.0 * b), 3.0 * rmse(a, b), rtol=1e-12)


def test_mape_by_hand_and_asymmetry():
    np.testing.assert_allclose(mape([1.1], [1.0]), 0.1, rtol=1e-12)
    # swapping roles changes the denominator, so MAPE is not symmetric
    assert mape([1.1], [1.0]) != mape([1.0], [1.1])


def test_mape_rejects_zero_actuals():
    with pytest.raises(ValueError, match="zero"):
        mape([1.0, 2.0], [3.0, 0.0])


def test_paired_input_validation():
    with pytest.raises(ValueError):
        rmse([1.0], [1.0, 2.0])
    with pytest.raises(ValueError):
        rmse([], [])
    with pytest.raises(ValueError):
        rmse([[1.0]], [[1.0]])


def test_predictability_stats_bundle():
    s = predictability_stats([0.8, 0.9], [0.82, 0.88])
    np.testing.assert_allclose(s.rmse, rmse([0.8, 0.9], [0.82, 0.88]))
    np.testing.assert_allclose(s.mape, mape([0.8, 0.9], [0.82, 0.88]))


# --- aggregation ------------------------------------------------------------------


def test_aggregate_mean_and_sample_std():
    agg = aggregate([0.8, 0.9])
    assert agg.mean == pytest.approx(0.85)
    assert agg.sample_std == pytest.approx(math.sqrt(0.005))
    assert agg.n_runs == 2


def test_aggregate_matches_numpy_ddof1():
    rng = np.random.default_rng(5)
    vals = rng.normal(0.7, 0.05, size=10)
    agg = aggregate(vals)
    np.testing.assert_allclose(agg.mean, vals.mean(), rtol=1e-15)
    np.testing.assert_allclose(agg.sample_std, vals.std(ddof=1), rtol=1e-12)


def test_aggregate_needs_two_finite_runs():
    with pytest.raises(ValueError, match="at least 2"):
        aggregate([0.5])
    with pytest.raises(ValueError, match="finite"):
        aggregate([0.5, float("nan")])
    with pytest.raises(ValueError):
        aggregate([[0.5, 0.6]])
