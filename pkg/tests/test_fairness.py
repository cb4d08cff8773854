"""Tests for per-group rates, the equalized-odds bias score, and subgroup tests."""

import itertools

import numpy as np
import pytest

from faithgate.fairness import (
    GroupRates,
    UndefinedRateError,
    bias_report,
    equalized_odds_bias,
    group_rates,
    subgroup_agreement,
)
from faithgate.stat_test import class_distribution_table


def _rates(pairs):
    return [
        GroupRates(group_label=f"g{i}", sensitivity=s, specificity=sp, support=10)
        for i, (s, sp) in enumerate(pairs)
    ]


def test_group_rates_by_hand():
    #          group a            group b
    y = np.array([1, 1, 0, 0, 1, 0, 0, 0])
    p = np.array([1, 0, 0, 1, 1, 1, 0, 0])
    member = np.array(["a", "a", "a", "a", "b", "b", "b", "b"])
    rates = group_rates(y, p, member)
    assert [r.group_label for r in rates] == ["a", "b"]
    a, b = rates
    assert a.sensitivity == 0.5  # tp=1, fn=1
    assert a.specificity == 0.5  # tn=1, fp=1
    assert a.support == 4
    assert b.sensitivity == 1.0
    assert b.specificity == 2 / 3
    assert b.defined


def test_group_rates_order_override():
    y = np.array([1, 0, 1, 0])
    p = np.array([1, 0, 1, 0])
    member = np.array(["x", "x", "y", "y"])
    rates = group_rates(y, p, member, group_order=["y", "x"])
    assert [r.group_label for r in rates] == ["y", "x"]


def test_missing_label_class_gives_none_rate():
    y = np.array([1, 1, 1, 0])
    p = np.array([1, 0, 1, 0])
    member = np.array(["a", "a", "a", "b"])
    a, b = group_rates(y, p, member)
    assert a.specificity is None and a.sensitivity == 2 / 3
    assert b.sensitivity is None and b.specificity == 1.0
    assert not a.defined and not b.defined


def test_empty_group_rejected():
    with pytest.raises(ValueError, match="no rows"):
        group_rates([1, 0], [1, 0], ["a", "a"], group_order=["a", "b"])
    with pytest.raises(ValueError, match="aligned"):
        group_rates([1, 0], [1, 0], ["a"])


# --- bias score ------------------------------------------------------------------


def test_bias_two_groups_by_hand():
    rates = _rates([(0.9, 0.8), (0.7, 0.5)])
    np.testing.assert_allclose(equalized_odds_bias(rates), abs(0.8 - 0.5) + abs(0.9 - 0.7))


def test_bias_three_groups_by_hand():
    rates = _rates([(1.0, 1.0), (0.5, 0.75), (0.25, 1.0)])
    sens = abs(1.0 - 0.5) + abs(1.0 - 0.25) + abs(0.5 - 0.25)
    spec = abs(1.0 - 0.75) + abs(1.0 - 1.0) + abs(0.75 - 1.0)
    np.testing.assert_allclose(equalized_odds_bias(rates), sens + spec)


def test_bias_zero_for_identical_groups():
    rates = _rates([(0.62, 0.81)] * 4)
    assert equalized_odds_bias(rates) == 0.0


def test_bias_matches_pairwise_oracle():
    rng = np.random.default_rng(12)
    for _ in range(30):
        k = int(rng.integers(2, 6))
        rates = _rates([(float(rng.random()), float(rng.random())) for _ in range(k)])
        # two sigma terms: all specificity gaps, then all sensitivity gaps
        want = sum(
            abs(x.specificity - y.specificity) for x, y in itertools.combinations(rates, 2)
        ) + sum(abs(x.sensitivity - y.sensitivity) for x, y in itertools.combinations(rates, 2))
        assert equalized_odds_bias(rates) == want


def test_bias_upper_bound_and_permutation_invariance():
    rng = np.random.default_rng(13)
    for _ in range(30):
        k = int(rng.integers(2, 6))
        rates = _rates([(float(rng.random()), float(rng.random())) for _ in range(k)])
        score = equalized_odds_bias(rates)
        assert 0.0 <= score <= k * (k - 1)  # each pair contributes at most 2
        shuffled = [rates[i] for i in rng.permutation(k)]
        np.testing.assert_allclose(equalized_odds_bias(shuffled), score, rtol=1e-12)


def test_bias_rejects_undefined_or_lone_groups():
    with pytest.raises(ValueError, match="at least 2"):
        equalized_odds_bias(_rates([(0.5, 0.5)]))
    broken = _rates([(0.5, 0.5), (0.5, 0.5)])
    broken[1] = GroupRates("g1", sensitivity=None, specificity=0.5, support=3)
    with pytest.raises(UndefinedRateError, match="g1"):
        equalized_odds_bias(broken)


def test_bias_report_excludes_with_warning():
    y = np.array([1, 1, 1, 0])  # group b has no positives
    p = np.array([1, 0, 1, 0])
    member = np.array(["a", "a", "a", "b"])
    with pytest.warns(UserWarning, match="excluded"):
        rep = bias_report("demo", y, p, member)
    assert rep.excluded and rep.bias is None
    assert len(rep.group_rates) == 2


def test_bias_report_happy_path():
    y = np.array([1, 0, 1, 0, 1, 0, 1, 0])
    p = np.array([1, 0, 0, 0, 1, 1, 1, 0])
    member = np.array(["a"] * 4 + ["b"] * 4)
    rep = bias_report("demo", y, p, member)
    assert not rep.excluded
    np.testing.assert_allclose(rep.bias, equalized_odds_bias(list(rep.group_rates)))


# --- subgroup agreement ------------------------------------------------------------


def test_subgroup_tables_stack_in_group_order():
    base = np.array([1, 0, 1, 0, 1, 1, 0, 0])
    comp = np.array([1, 1, 1, 0, 0, 1, 0, 1])
    member = np.array(["a", "a", "a", "a", "b", "b", "b", "b"])
    res = subgroup_agreement(base, comp, member)

    ta = class_distribution_table(base[:4], comp[:4])
    tb = class_distribution_table(base[4:], comp[4:])
    assert res.per_group_tables["a"].observed.tolist() == ta.observed.tolist()
    assert res.per_group_tables["b"].observed.tolist() == tb.observed.tolist()
    assert res.combined_table.observed.tolist() == np.vstack(
        [ta.observed, tb.observed]
    ).tolist()
    assert res.combined_table.row_labels == ("a:class0", "a:class1", "b:class0", "b:class1")


def test_combined_margins_are_group_sums():
    rng = np.random.default_rng(14)
    base = rng.integers(0, 2, 120)
    comp = rng.integers(0, 2, 120)
    member = np.array(["g1"] * 40 + ["g2"] * 40 + ["g3"] * 40)
    res = subgroup_agreement(base, comp, member)
    stacked_cols = sum(t.observed.sum(axis=0) for t in res.per_group_tables.values())
    np.testing.assert_array_equal(res.combined_table.observed.sum(axis=0), stacked_cols)
    assert res.combined.dof == 2 * 3 - 1


def test_yates_applies_per_group_but_not_combined():
    rng = np.random.default_rng(15)
    base = rng.integers(0, 2, 100)
    comp = rng.integers(0, 2, 100)
    member = np.array(["a"] * 50 + ["b"] * 50)
    res = subgroup_agreement(base, comp, member)
    assert all(r.correction_applied for r in res.per_group.values())
    assert not res.combined.correction_applied
    res_raw = subgroup_agreement(base, comp, member, yates_for_2x2=False)
    assert not any(r.correction_applied for r in res_raw.per_group.values())


def test_subgroup_agreement_validation():
    with pytest.raises(ValueError, match="at least 2 groups"):
        subgroup_agreement([1, 0], [1, 0], ["a", "a"])
    with pytest.raises(ValueError, match="aligned"):
        subgroup_agreement([1, 0], [1, 0], ["a"])
    with pytest.raises(ValueError, match="no rows"):
        subgroup_agreement([1, 0], [1, 0], ["a", "a"], group_order=["a", "b"])


def test_identical_predictions_are_quiet_everywhere():
    rng = np.random.default_rng(16)
    base = rng.integers(0, 2, 200)
    member = np.array(["a"] * 120 + ["b"] * 80)
    res = subgroup_agreement(base, base.copy(), member)
    assert res.combined.statistic == 0.0 and res.combined.p_value == 1.0
    for r in res.per_group.values():
        assert r.statistic == 0.0 and r.p_value == 1.0
