"""Show how a pooled agreement test can hide a shift inside one subgroup.

Run from the repository root:

    python3 demos/subgroup_masking.py
"""

import numpy as np

from faithgate.fairness import subgroup_agreement
from faithgate.stat_test import chi_square, class_distribution_table

# Group A is small (200 rows) and the compressed model flips 22 of its
# negatives to positive.  Group B is ten times larger and perfectly faithful.
base_a = np.array([1] * 100 + [0] * 100)
comp_a = np.array([1] * 122 + [0] * 78)
base_b = np.array([1] * 1000 + [0] * 1000)

baseline = np.concatenate([base_a, base_b])
compressed = np.concatenate([comp_a, base_b])
membership = np.array(["A"] * 200 + ["B"] * 2000, dtype=object)

# Pooled over everyone, the disagreement drowns in group B's bulk:
pooled = chi_square(class_distribution_table(baseline, compressed))
print(f"pooled 2x2 test:      p = {pooled.p_value:.4f}")

# Per-group tests plus the stacked combined table tell the real story.
res = subgroup_agreement(baseline, compressed, membership)
for label, r in res.per_group.items():
    flag = "  <-- significant shift" if r.p_value <= 0.05 else ""
    print(f"group {label} (n={res.per_group_tables[label].observed.sum()}):"
          f"  p = {r.p_value:.4f}{flag}")
print(f"combined stacked test: p = {res.combined.p_value:.4f} (dof {res.combined.dof})")

print("""
The combined statistic sums per-group evidence but also spends more degrees
of freedom, and the per-group Yates correction does not carry over, so a
shift confined to one small group can clear the combined test while failing
its own.  Reports therefore always show both granularities side by side.""")

# The stacked table itself, for the curious: rows are group:class pairs.
print("combined table rows:", res.combined_table.row_labels)
print(res.combined_table.observed)
