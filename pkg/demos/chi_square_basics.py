"""Walk through the chi-square independence test on prediction tables.

Run from the repository root:

    python3 demos/chi_square_basics.py
"""

import numpy as np

from faithgate.stat_test import (
    ContingencyTable,
    DegenerateTableError,
    chi_square,
    class_distribution_table,
    reg_upper_gamma,
)

# A compressed model and its baseline predict the positive class at slightly
# different rates on the same 605 rows.  Do the label distributions differ
# more than chance would explain?
baseline = np.array([1] * 367 + [0] * 238)
compressed = np.array([1] * 392 + [0] * 213)

table = class_distribution_table(baseline, compressed)
print("observed table (rows = class, cols = model):")
print(table.observed)

res = chi_square(table)
print(f"\nstatistic        {res.statistic:.6f}")
print(f"dof              {res.dof}")
print(f"p-value          {res.p_value:.6f}")
print(f"Yates applied    {res.correction_applied}")

# The continuity correction only ever applies to 2x2 tables.  Turn it off to
# see the raw Pearson statistic (always at least as large):
raw = chi_square(table, yates_for_2x2=False)
print(f"\nwithout Yates    statistic {raw.statistic:.6f}, p {raw.p_value:.6f}")

# Larger tables work the same way; build one by hand.  Expected counts come
# from the margins, and the degrees of freedom are (rows-1) x (cols-1).
stacked = ContingencyTable(
    np.array([[367, 392], [238, 213], [1272, 1307], [1426, 1391]]),
    row_labels=["a:1", "a:0", "b:1", "b:0"],
    col_labels=["baseline", "compressed"],
)
res4 = chi_square(stacked)
print(f"\n4x2 table: statistic {res4.statistic:.6f}, dof {res4.dof}, p {res4.p_value:.6f}")

# p-values come from the regularized upper incomplete gamma function; the
# textbook critical values fall out of it directly.
print(f"\nP(chi2_1 >= 3.841) = {reg_upper_gamma(0.5, 3.841 / 2):.4f}  (should be ~0.05)")
print(f"P(chi2_3 >= 11.345) = {reg_upper_gamma(1.5, 11.345 / 2):.4f}  (should be ~0.01)")

# A table with an all-zero margin has undefined expected counts, and the test
# refuses it by name rather than dividing by zero.
try:
    chi_square(ContingencyTable(np.array([[0, 0], [5, 7]])))
except DegenerateTableError as exc:
    print(f"\ndegenerate table rejected: {exc}")
