"""Tests for contingency tables, the chi-squared test, and its gamma kernel."""

import numpy as np
import pytest
from scipy import special, stats

from faithgate.stat_test import (
    ChiSquareResult,
    ContingencyTable,
    DegenerateTableError,
    chi_square,
    class_distribution_table,
    reg_upper_gamma,
)


def _random_table(rng, max_count=10_000):
    r = int(rng.integers(2, 5))
    c = int(rng.integers(2, 5))
    while True:
        obs = rng.integers(0, max_count + 1, size=(r, c))
        if obs.sum(axis=0).all() and obs.sum(axis=1).all():
            return obs


# --- table construction -------------------------------------------------------


def test_class_distribution_table_counts():
    base = np.array([1, 1, 1, 0, 0])
    comp = np.array([1, 0, 0, 0, 0])
    t = class_distribution_table(base, comp)
    assert t.observed.tolist() == [[2, 4], [3, 1]]
    # each model classifies every instance exactly once
    assert t.observed.sum(axis=0).tolist() == [5, 5]
    assert t.row_labels == ("class0", "class1")
    assert t.col_labels == ("baseline", "compressed")


def test_class_distribution_table_disjoint_predictions():
    t = class_distribution_table([0] * 10, [1] * 10)
    assert t.observed.tolist() == [[10, 0], [0, 10]]


def test_class_distribution_table_rejects_bad_input():
    with pytest.raises(ValueError, match="differ in length"):
        class_distribution_table([0, 1], [0, 1, 1])
    with pytest.raises(ValueError, match="empty"):
        class_distribution_table([], [])
    with pytest.raises(ValueError, match="only 0 and 1"):
        class_distribution_table([0, 2], [0, 1])


def test_contingency_table_validation():
    with pytest.raises(ValueError, match="at least 2x2"):
        ContingencyTable(np.array([[1, 2]]))
    with pytest.raises(ValueError, match="non-negative"):
        ContingencyTable(np.array([[1, -2], [3, 4]]))
    with pytest.raises(ValueError, match="label count"):
        ContingencyTable(np.array([[1, 2], [3, 4]]), row_labels=("a",))
    t = ContingencyTable(np.array([[1, 2], [3, 4]]))
    assert t.shape == (2, 2)
    assert t.total == 10
    assert t.row_labels == ("row0", "row1")


# --- chi-squared values -------------------------------------------------------


def test_2x2_with_moderate_shift():
    """Known-good corrected values for a 2x2 with a visible column shift."""
    res = chi_square(ContingencyTable(np.array([[367, 392], [238, 213]])))
    assert res.dof == 1
    assert res.correction_applied
    np.testing.assert_allclose(res.statistic, 2.036055143160127, rtol=0, atol=1e-12)
    np.testing.assert_allclose(res.p_value, 0.15360755581453533, rtol=0, atol=1e-12)


def test_2x2_with_small_shift():
    res = chi_square(ContingencyTable(np.array([[1272, 1307], [1426, 1391]])))
    np.testing.assert_allclose(res.statistic, 0.8586013874935083, rtol=0, atol=1e-12)
    np.testing.assert_allclose(res.p_value, 0.35413037950368575, rtol=0, atol=1e-12)


def test_stacked_4x2_never_corrected():
    obs = np.array([[367, 392], [238, 213], [1272, 1307], [1426, 1391]])
    res = chi_square(ContingencyTable(obs))
    assert res.dof == 3
    assert not res.correction_applied
    np.testing.assert_allclose(res.statistic, 3.119111309274995, rtol=0, atol=1e-12)
    np.testing.assert_allclose(res.p_value, 0.3736226464015616, rtol=0, atol=1e-12)


def test_identical_columns_give_zero_statistic():
    base = np.array([1, 0, 1, 1, 0, 0, 1])
    res = chi_square(class_distribution_table(base, base))
    assert res.statistic == 0.0
    assert res.p_value == 1.0


@pytest.mark.parametrize(
    "critical,dof,alpha",
    [
        (3.841, 1, 0.05),
        (6.635, 1, 0.01),
        (5.991, 2, 0.05),
        (7.815, 3, 0.05),
        (11.345, 3, 0.01),
    ],
)
def test_published_critical_values(critical, dof, alpha):
    """Rounded textbook critical values recover their nominal tail area."""
    p = reg_upper_gamma(dof / 2.0, critical / 2.0)
    assert abs(p - alpha) < 5e-4


def test_matches_reference_implementation_on_random_tables():
    rng = np.random.default_rng(42)
    for _ in range(60):
        obs = _random_table(rng)
        res = chi_square(ContingencyTable(obs))
        ref = stats.chi2_contingency(obs, correction=True)
        np.testing.assert_allclose(res.statistic, ref.statistic, rtol=0, atol=1e-9)
        np.testing.assert_allclose(res.p_value, ref.pvalue, rtol=0, atol=1e-9)
        assert res.dof == ref.dof


# --- structural properties ----------------------------------------------------


def test_expected_preserves_margins():
    rng = np.random.default_rng(7)
    for _ in range(25):
        obs = _random_table(rng)
        res = chi_square(ContingencyTable(obs))
        np.testing.assert_allclose(res.expected.sum(axis=0), obs.sum(axis=0), rtol=1e-12)
        np.testing.assert_allclose(res.expected.sum(axis=1), obs.sum(axis=1), rtol=1e-12)
        np.testing.assert_allclose(res.expected.sum(), obs.sum(), rtol=1e-12)


def test_permutation_invariance():
    rng = np.random.default_rng(8)
    for _ in range(25):
        obs = _random_table(rng)
        res = chi_square(ContingencyTable(obs))
        shuffled = obs[rng.permutation(obs.shape[0])][:, rng.permutation(obs.shape[1])]
        res2 = chi_square(ContingencyTable(shuffled))
        np.testing.assert_allclose(res2.statistic, res.statistic, rtol=1e-12)
        np.testing.assert_allclose(res2.p_value, res.p_value, rtol=1e-12)


def test_uncorrected_statistic_scales_with_counts():
    rng = np.random.default_rng(9)
    for _ in range(10):
        obs = _random_table(rng, max_count=500)
        base = chi_square(ContingencyTable(obs), yates_for_2x2=False)
        for k in (2, 5):
            scaled = chi_square(ContingencyTable(obs * k), yates_for_2x2=False)
            np.testing.assert_allclose(scaled.statistic, k * base.statistic, rtol=1e-9)
            assert scaled.p_value <= base.p_value + 1e-12


def test_yates_applies_only_to_2x2():
    obs22 = np.array([[12, 18], [30, 20]])
    assert chi_square(ContingencyTable(obs22)).correction_applied
    assert not chi_square(ContingencyTable(obs22), yates_for_2x2=False).correction_applied
    obs23 = np.array([[12, 18, 5], [30, 20, 9]])
    assert not chi_square(ContingencyTable(obs23)).correction_applied


def test_yates_never_increases_statistic():
    rng = np.random.default_rng(10)
    for _ in range(25):
        obs = rng.integers(1, 300, size=(2, 2))
        corrected = chi_square(ContingencyTable(obs), yates_for_2x2=True)
        raw = chi_square(ContingencyTable(obs), yates_for_2x2=False)
        assert corrected.statistic <= raw.statistic + 1e-12


def test_p_values_stay_in_unit_interval():
    rng = np.random.default_rng(11)
    for _ in range(40):
        res = chi_square(ContingencyTable(_random_table(rng)))
        assert 0.0 <= res.p_value <= 1.0
        assert res.statistic >= 0.0


def test_null_rate_is_near_nominal():
    """Independent same-rate prediction pairs reject H0 about 5% of the time."""
    rng = np.random.default_rng(20240817)
    n, rate, sims = 10_000, 0.35, 2000
    hits = 0
    for _ in range(sims):
        a = int(rng.binomial(n, rate))
        b = int(rng.binomial(n, rate))
        table = ContingencyTable(np.array([[n - a, n - b], [a, b]]))
        if chi_square(table).p_value <= 0.05:
            hits += 1
    assert 0.03 <= hits / sims <= 0.07


# --- degenerate input ---------------------------------------------------------


def test_zero_expected_cell_is_named():
    with pytest.raises(DegenerateTableError) as exc:
        chi_square(ContingencyTable(np.array([[0, 0], [5, 7]])))
    assert "row0" in str(exc.value)


def test_all_zero_table_rejected():
    with pytest.raises(DegenerateTableError):
        chi_square(ContingencyTable(np.zeros((2, 2), dtype=int)))


def test_degenerate_error_is_a_value_error():
    assert issubclass(DegenerateTableError, ValueError)


# --- gamma kernel -------------------------------------------------------------


def test_gamma_kernel_against_reference():
    xs = np.concatenate([[0.0], np.logspace(-6, 2, 60)])
    for a in (0.5, 1.0, 1.5, 2.5, 5.0, 10.0, 25.0):
        for x in xs:
            ours = reg_upper_gamma(a, float(x))
            ref = float(special.gammaincc(a, x))
            np.testing.assert_allclose(ours, ref, rtol=1e-12, atol=1e-14)


def test_gamma_kernel_monotone_in_x():
    xs = np.linspace(0.0, 60.0, 400)
    for a in (0.5, 1.0, 3.0, 8.0):
        vals = [reg_upper_gamma(a, float(x)) for x in xs]
        assert all(v2 <= v1 + 1e-15 for v1, v2 in zip(vals, vals[1:]))
        assert all(0.0 <= v <= 1.0 for v in vals)


def test_gamma_kernel_validation():
    for a, x in [(0.0, 1.0), (-1.0, 1.0), (1.0, -0.5), (float("nan"), 1.0), (1.0, float("inf"))]:
        with pytest.raises(ValueError):
            reg_upper_gamma(a, x)


def test_result_dataclass_fields():
    res = chi_square(ContingencyTable(np.array([[10, 12], [14, 9]])))
    assert isinstance(res, ChiSquareResult)
    assert res.expected.shape == (2, 2)
