"""Shared fixtures plus a terminal summary for the acceptance suite."""

from pathlib import Path
from textwrap import dedent

import pytest

from faithgate.audit import load_experiment_config, run_experiment
from faithgate.synth import write_csv

REPO = Path(__file__).resolve().parents[1]

_TINY_TOML = dedent(
    """\
    [dataset]
    csv = "credit.csv"
    label = "default"
    features = ["age", "income", "employment_years", "credit_lines", "late_payments", "debt_ratio", "utilization"]

    [[subgroups]]
    name = "sex"
    column = "sex"

    [split]
    fractions = [0.7, 0.15, 0.15]

    [model]
    hidden = [8]
    dropout = [0.0]

    [train]
    epochs = 4
    batch_size = 32

    [prune]
    initial_sparsity = 0.5
    final_sparsity = 0.8
    begin_step = 0
    end_step = 20
    fine_tune_epochs = 2

    [quantize]
    bit_width = 8
    fine_tune_epochs = 1

    [experiment]
    runs = 2
    base_seed = 11
    """
)


@pytest.fixture(scope="session")
def repo_root() -> Path:
    return REPO


@pytest.fixture(scope="session")
def experiment_config_path() -> Path:
    return REPO / "configs" / "experiment.toml"


@pytest.fixture(scope="session")
def tiny_config(tmp_path_factory) -> Path:
    """A small self-contained experiment config (600 rows, 2 runs)."""
    root = tmp_path_factory.mktemp("tinyexp")
    write_csv(root / "credit.csv", n_rows=600, seed=99)
    path = root / "exp.toml"
    path.write_text(_TINY_TOML, encoding="utf-8")
    return path


@pytest.fixture(scope="session")
def tiny_experiment_doc(tiny_config):
    return run_experiment(load_experiment_config(tiny_config))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Print one PASS/FAIL line per acceptance-suite test."""
    statuses = {}
    for outcome in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(outcome, []):
            nodeid = getattr(rep, "nodeid", "")
            if "test_acceptance.py" in nodeid and "::" in nodeid:
                prev = statuses.get(nodeid)
                if prev is None or prev == "passed":
                    statuses[nodeid] = outcome
    if not statuses:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for nodeid in sorted(statuses):
        name = nodeid.split("::")[-1]
        verdict = "PASS" if statuses[nodeid] == "passed" else "FAIL"
        terminalreporter.write_line(f"{verdict}  {name}")
