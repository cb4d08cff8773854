"""Synthetic credit-default dataset used by the bundled demo experiment.

Five thousand rows of plausible credit features, two categorical demographic
columns, and a Bernoulli label drawn from a logistic score.  A mild group
effect is injected on purpose so bias numbers are nonzero and subgroup tests
have something to find.  Fully deterministic given the seed.
"""

from __future__ import annotations

import csv

import numpy as np

__all__ = ["COLUMNS", "DEFAULT_SEED", "generate_rows", "write_csv"]

COLUMNS = (
    "age",
    "income",
    "employment_years",
    "credit_lines",
    "late_payments",
    "debt_ratio",
    "utilization",
    "sex",
    "region",
    "default",
)

DEFAULT_SEED = 20240817
_REGIONS = ("north", "south", "east", "west")
_REGION_P = (0.3, 0.3, 0.25, 0.15)


def generate_rows(n_rows: int = 5000, seed: int = DEFAULT_SEED) -> list:
    """Rows of COLUMNS-ordered values; label via a logistic score + noise."""
    rng = np.random.default_rng(seed)
    age = rng.integers(21, 76, size=n_rows)
    log_income = rng.normal(10.6, 0.5, size=n_rows)
    income = np.clip(np.exp(log_income), 9_000, 420_000)
    employment = np.minimum(rng.integers(0, 41, size=n_rows), age - 18)
    credit_lines = rng.integers(1, 13, size=n_rows)
    late = np.minimum(rng.poisson(0.8, size=n_rows), 8)
    debt_ratio = rng.beta(2.0, 5.0, size=n_rows)
    utilization = rng.beta(2.0, 3.5, size=n_rows)
    sex = rng.choice(("female", "male"), size=n_rows)
    region = rng.choice(_REGIONS, size=n_rows, p=_REGION_P)

    z = (
        -1.15
        + 2.2 * utilization
        + 1.6 * debt_ratio
        + 0.35 * late
        - 0.9 * (log_income - 10.6) / 0.5
        - 0.03 * employment
        - 0.05 * (credit_lines - 6)
        + 0.012 * (40 - age)
        + 0.25 * (sex == "female")
        + 0.10 * np.isin(region, ("north", "east"))
    )
    p = 1.0 / (1.0 + np.exp(-z))
    label = (rng.random(n_rows) < p).astype(int)

    rows = []
    for i in range(n_rows):
        rows.append(
            [
                int(age[i]),
                int(round(income[i])),
                int(employment[i]),
                int(credit_lines[i]),
                int(late[i]),
                f"{debt_ratio[i]:.3f}",
                f"{utilization[i]:.3f}",
                str(sex[i]),
                str(region[i]),
                int(label[i]),
            ]
        )
    return rows


def write_csv(path, n_rows: int = 5000, seed: int = DEFAULT_SEED) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(COLUMNS)
        w.writerows(generate_rows(n_rows, seed))
