"""Per-subgroup rates, the pairwise equalized-odds bias score, and
subgroup-level agreement significance tests.

The bias score sums, over every unordered pair of demographic groups, the
absolute gap in specificity plus the absolute gap in sensitivity.  Zero means
the model treats all groups identically on both rates; larger is more biased.

Subgroup agreement builds one class-by-model contingency table per group plus
a stacked combined table, and chi-squared tests each.  Both views matter: a
combined test can wash out a shift confined to one group, and a single group's
test cannot see coordinated shifts across groups.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .metrics import confusion
from .stat_test import (
    ChiSquareResult,
    ContingencyTable,
    chi_square,
    class_distribution_table,
    _as_binary,
)

__all__ = [
    "GroupRates",
    "BiasReport",
    "SubgroupAgreementResult",
    "UndefinedRateError",
    "group_rates",
    "equalized_odds_bias",
    "bias_report",
    "subgroup_agreement",
]


class UndefinedRateError(ValueError):
    """A group is missing a label class, so its rate cannot be computed."""


@dataclass(frozen=True)
class GroupRates:
    """Sensitivity (TPR) and specificity (TNR) within one demographic group.

    A rate is None when the group lacks the corresponding label class.
    """

    group_label: str
    sensitivity: float | None
    specificity: float | None
    support: int

    @property
    def defined(self) -> bool:
        return self.sensitivity is not None and self.specificity is not None


@dataclass(frozen=True)
class BiasReport:
    demographic: str
    group_rates: tuple[GroupRates, ...]
    bias: float | None
    excluded: bool = False


@dataclass(frozen=True)
class SubgroupAgreementResult:
    per_group: dict[str, ChiSquareResult]
    combined: ChiSquareResult
    per_group_tables: dict[str, ContingencyTable]
    combined_table: ContingencyTable


def group_rates(labels, preds, membership, group_order=None) -> list[GroupRates]:
    """Sensitivity and specificity of ``preds`` vs ``labels`` within each group.

    ``membership`` assigns every row a group label; ``group_order`` fixes the
    output order (default: first appearance).  Groups missing a label class
    get that rate as None rather than a fabricated 0 or 1.
    """
    y = _as_binary(labels, "labels")
    p = _as_binary(preds, "preds")
    member = np.asarray(membership)
    if not (y.shape == p.shape == member.shape):
        raise ValueError("labels, preds and membership must be aligned")
    order = list(group_order) if group_order is not None else _first_appearance(member)
    out = []
    for g in order:
        mask = member == g
        support = int(mask.sum())
        if support == 0:
            raise ValueError(f"group {g!r} has no rows")
        c = confusion(y[mask], p[mask])
        sens = c.tp / (c.tp + c.fn) if (c.tp + c.fn) > 0 else None
        spec = c.tn / (c.tn + c.fp) if (c.tn + c.fp) > 0 else None
        out.append(GroupRates(group_label=str(g), sensitivity=sens, specificity=spec, support=support))
    return out


def equalized_odds_bias(rates) -> float:
    """Pairwise equalized-odds bias over a list of GroupRates.

    Sums |specificity_i - specificity_j| and |sensitivity_i - sensitivity_j|
    over all unordered group pairs.  Requires at least two groups with both
    rates defined.
    """
    rates = list(rates)
    if len(rates) < 2:
        raise ValueError("bias needs at least 2 groups")
    for r in rates:
        if not r.defined:
            raise UndefinedRateError(
                f"group {r.group_label!r} has an undefined rate "
                f"(sensitivity={r.sensitivity}, specificity={r.specificity})"
            )
    k = len(rates)
    spec_sum = 0.0
    sens_sum = 0.0
    for i in range(k):
        for j in range(i + 1, k):
            spec_sum += abs(rates[j].specificity - rates[i].specificity)
            sens_sum += abs(rates[i].sensitivity - rates[j].sensitivity)
    return spec_sum + sens_sum


def bias_report(demographic: str, labels, preds, membership, group_order=None) -> BiasReport:
    """Bias score for one demographic, excluding it when any rate is undefined.

    Exclusion (with a warning) is deliberate: imputing a rate for a group
    that has no positives or no negatives would fabricate a fairness signal.
    """
    rates = group_rates(labels, preds, membership, group_order=group_order)
    if all(r.defined for r in rates) and len(rates) >= 2:
        return BiasReport(demographic=demographic, group_rates=tuple(rates), bias=equalized_odds_bias(rates))
    bad = [r.group_label for r in rates if not r.defined]
    warnings.warn(
        f"demographic {demographic!r} excluded from bias scoring: "
        f"groups {bad} are missing a label class",
        stacklevel=2,
    )
    return BiasReport(demographic=demographic, group_rates=tuple(rates), bias=None, excluded=True)


def subgroup_agreement(
    baseline_preds,
    compressed_preds,
    membership,
    group_order=None,
    yates_for_2x2: bool = True,
    class_labels: tuple[str, str] = ("class0", "class1"),
) -> SubgroupAgreementResult:
    """Per-group and combined class-distribution tests of two prediction vectors.

    Each group's rows yield a 2x2 class-by-model table; the combined table
    stacks those 2x2 blocks vertically (group order x class order) into a
    2k x 2 table with (2k - 1) degrees of freedom.  Yates correction applies
    only to the 2x2 per-group tables, never to the stacked one.
    """
    base = _as_binary(baseline_preds, "baseline_preds")
    comp = _as_binary(compressed_preds, "compressed_preds")
    member = np.asarray(membership)
    if not (base.shape == comp.shape == member.shape):
        raise ValueError("prediction vectors and membership must be aligned")
    order = list(group_order) if group_order is not None else _first_appearance(member)
    if len(order) < 2:
        raise ValueError("subgroup agreement needs at least 2 groups")

    per_group_tables: dict[str, ContingencyTable] = {}
    per_group: dict[str, ChiSquareResult] = {}
    blocks = []
    row_labels = []
    for g in order:
        mask = member == g
        if not mask.any():
            raise ValueError(f"group {g!r} has no rows")
        table = class_distribution_table(base[mask], comp[mask], class_labels=class_labels)
        per_group_tables[str(g)] = table
        per_group[str(g)] = chi_square(table, yates_for_2x2=yates_for_2x2)
        blocks.append(table.observed)
        row_labels.extend(f"{g}:{cls}" for cls in class_labels)

    combined_table = ContingencyTable(
        np.vstack(blocks),
        row_labels=tuple(row_labels),
        col_labels=("baseline", "compressed"),
    )
    combined = chi_square(combined_table, yates_for_2x2=yates_for_2x2)
    return SubgroupAgreementResult(
        per_group=per_group,
        combined=combined,
        per_group_tables=per_group_tables,
        combined_table=combined_table,
    )


def _first_appearance(member: np.ndarray) -> list:
    seen: dict = {}
    for v in member.tolist():
        if v not in seen:
            seen[v] = None
    return list(seen)
