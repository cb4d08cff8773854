"""Rendering of audit report documents: sorted-key JSON, Markdown tables,
and flat CSVs for plotting.

Everything renders from the report dict alone, never from live objects, so
a rendered table is always recomputable from the JSON file.  Formatting
conventions: 3 decimals for metrics and bias, 4 for sample stds and RMSE,
1-decimal percent for MAPE.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

__all__ = [
    "render_markdown",
    "write_report_files",
    "write_plot_csvs",
    "report_json_bytes",
]

_PLOT_FILES = (
    "accuracy_by_run.csv",
    "agreement_by_run.csv",
    "bias_by_demographic.csv",
    "p_value_counts.csv",
)


def _plain(obj):
    """Recursively convert numpy scalars/arrays so json can serialize the doc."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    return obj


def report_json_bytes(doc: dict) -> bytes:
    """Canonical byte serialization: sorted keys, 2-space indent, trailing newline."""
    return (json.dumps(_plain(doc), sort_keys=True, indent=2) + "\n").encode("utf-8")


def _f3(v) -> str:
    return "—" if v is None else f"{v:.3f}"


def _f4(v) -> str:
    return "—" if v is None else f"{v:.4f}"


def _pct1(v) -> str:
    return "—" if v is None else f"{v * 100:.1f}%"


def _mean_std(entry) -> str:
    """Aggregate cell: mean to 3 decimals, sample std to 4 in parentheses."""
    if entry is None or entry.get("mean") is None:
        return "—"
    if entry.get("std") is None:
        return f"{entry['mean']:.3f} (—)"
    return f"{entry['mean']:.3f} ({entry['std']:.4f})"


def _counts(entry) -> str:
    return f"{entry['significant']} of {entry['total']}"


def _table(header, rows) -> list:
    out = ["| " + " | ".join(header) + " |", "|" + "---|" * len(header)]
    out += ["| " + " | ".join(str(c) for c in row) + " |" for row in rows]
    out.append("")
    return out


def _split_title(tag: str) -> str:
    return {"val": "Validation split", "test": "Test split"}.get(tag, tag)


def render_markdown(doc: dict) -> str:
    """Deterministic Markdown for an experiment report or a prediction audit."""
    if doc.get("kind") == "prediction-audit":
        return _render_audit_fragment(doc)
    return _render_experiment(doc)


def _render_experiment(doc: dict) -> str:
    agg = doc["aggregates"]
    variants = list(doc["variants"])
    split_tags = list(doc["split_tags"])
    demographics = list(doc["demographics"])
    yates = "on" if doc.get("yates", True) else "off"
    lines = [
        "# Faithfulness audit report",
        "",
        f"- dataset: `{doc['dataset']['path']}` — {doc['dataset']['rows']} rows"
        f" ({doc['dataset']['dropped']} dropped)",
        f"- runs: {doc['n_runs']} · base seed {doc['config'].get('experiment', {}).get('base_seed', '?')}",
        f"- verdict rule: NotFaithful iff chi-squared p ≤ {doc['threshold']:g}"
        f" (Yates correction on 2×2 tables: {yates})",
        "",
        "## Performance vs. ground truth",
        "",
        "Mean over runs; sample standard deviation in parentheses.",
        "",
    ]
    for tag in split_tags:
        rows = [
            [
                name,
                _mean_std(agg["performance"][name][tag]["accuracy"]),
                _mean_std(agg["performance"][name][tag]["precision"]),
                _mean_std(agg["performance"][name][tag]["recall"]),
                _mean_std(agg["performance"][name][tag]["f1"]),
            ]
            for name in ("baseline", *variants)
        ]
        lines += [f"### {_split_title(tag)}", ""]
        lines += _table(["Model", "Accuracy", "Precision", "Recall", "F1"], rows)

    lines += ["## Agreement with baseline", ""]
    for tag in split_tags:
        rows = [
            [
                name,
                _mean_std(agg["agreement"][name][tag]["accuracy"]),
                _mean_std(agg["agreement"][name][tag]["precision"]),
                _mean_std(agg["agreement"][name][tag]["recall"]),
                _mean_std(agg["agreement"][name][tag]["f1"]),
                _counts(agg["significance_counts"][name][tag]["overall"]) + " runs p ≤ threshold",
            ]
            for name in variants
        ]
        lines += [f"### {_split_title(tag)}", ""]
        lines += _table(["Model", "Accuracy", "Precision", "Recall", "F1", "Distribution shift"], rows)

    lines += ["## Bias by demographic", ""]
    if not demographics:
        lines += ["No demographic subgroups configured; bias section omitted.", ""]
    else:
        for tag in split_tags:
            rows = []
            excluded_notes = []
            for demo in demographics:
                row = [demo]
                for name in ("baseline", *variants):
                    entry = agg["bias"][name][tag][demo]
                    row.append(_mean_std(entry))
                    if entry.get("excluded_runs"):
                        excluded_notes.append(
                            f"{demo}/{name}: {entry['excluded_runs']} run(s) excluded"
                        )
                rows.append(row)
            lines += [f"### {_split_title(tag)}", ""]
            lines += _table(["Demographic", "baseline", *variants], rows)
            if excluded_notes:
                lines += [f"Excluded from the mean: {'; '.join(sorted(excluded_notes))}.", ""]

        lines += ["## Subgroup agreement significance", ""]
        for tag in split_tags:
            rows = []
            for name in variants:
                for demo in demographics:
                    scope = agg["significance_counts"][name][tag][demo]
                    rows.append([name, demo, "combined", _counts(scope["combined"])])
                    for label in sorted(scope["groups"]):
                        rows.append([name, demo, label, _counts(scope["groups"][label])])
            lines += [f"### {_split_title(tag)}", ""]
            lines += _table(["Model", "Demographic", "Scope", "Runs p ≤ threshold"], rows)

    lines += ["## Model size", ""]
    rows = []
    for name in ("baseline", *variants):
        s = agg["sizes"][name]
        rows.append(
            [
                name,
                f"{s['parameter_bytes']['mean']:.0f}",
                f"{s['nonzero_parameters']['mean']:.1f}",
                _f3(s["sparsity"]["mean"]),
            ]
        )
    lines += _table(["Model", "Parameter bytes", "Nonzero parameters", "Sparsity"], rows)

    if "predictability" in doc:
        pred = doc["predictability"]
        lines += [
            "## Predictability (validation vs. test)",
            "",
            "Verdict matches count runs where the validation-split verdict equalled"
            " the test-split verdict; RMSE/MAPE compare run-level accuracies.",
            "",
        ]
        rows = []
        for name in ("baseline", *variants):
            acc = pred["accuracy"][name]
            if name in pred["verdicts"]:
                v = pred["verdicts"][name]
                matches = f"{v['verdict_matches']} of {v['total']}"
            else:
                matches = "—"
            rows.append([name, matches, _f4(acc["rmse"]), _pct1(acc["mape"])])
        lines += _table(["Model", "Verdict matches", "Accuracy RMSE", "Accuracy MAPE"], rows)

    notes = doc.get("notes", [])
    if notes:
        lines += ["## Notes", ""]
        lines += [f"- {n}" for n in sorted(set(notes))]
        lines.append("")
    return "\n".join(lines)


def _render_audit_fragment(doc: dict) -> str:
    variants = list(doc["variants"])
    yates = "on" if doc.get("yates", True) else "off"
    lines = [
        "# Prediction audit",
        "",
        f"- verdict rule: NotFaithful iff chi-squared p ≤ {doc['threshold']:g}"
        f" (Yates correction on 2×2 tables: {yates})",
        "",
    ]
    for tag in ("val", "test"):
        if tag not in doc["splits"]:
            continue
        block = doc["splits"][tag]
        lines += [f"## {_split_title(tag)}", "", "### Agreement with baseline", ""]
        rows = [
            [
                name,
                _f3(block["agreement"][name]["accuracy"]),
                _f3(block["agreement"][name]["precision"]),
                _f3(block["agreement"][name]["recall"]),
                _f3(block["agreement"][name]["f1"]),
                _f4(block["agreement"][name]["chi2"]["p_value"]),
                block["agreement"][name]["verdict"],
            ]
            for name in variants
        ]
        lines += _table(["Model", "Accuracy", "Precision", "Recall", "F1", "p", "Verdict"], rows)

        demographics = sorted(block["bias"].get("baseline", {}))
        if demographics:
            lines += ["### Bias by demographic", ""]
            rows = []
            for demo in demographics:
                row = [demo]
                for name in ("baseline", *variants):
                    entry = block["bias"][name][demo]
                    row.append("excluded" if entry["excluded"] else _f3(entry["bias"]))
                rows.append(row)
            lines += _table(["Demographic", "baseline", *variants], rows)

            lines += ["### Subgroup agreement tests", ""]
            rows = []
            for name in variants:
                for demo in demographics:
                    t = block["subgroup_tests"][name][demo]
                    rows.append(
                        [name, demo, "combined", _f4(t["combined"]["p_value"]), t["combined"]["verdict"]]
                    )
                    for label in sorted(t["groups"]):
                        g = t["groups"][label]
                        rows.append([name, demo, label, _f4(g["p_value"]), g["verdict"]])
            lines += _table(["Model", "Demographic", "Scope", "p", "Verdict"], rows)

    if "predictability" in doc:
        lines += ["## Validation vs. test verdicts", ""]
        rows = [
            [
                name,
                _f4(doc["predictability"][name]["val_p"]),
                doc["predictability"][name]["val_verdict"],
                _f4(doc["predictability"][name]["test_p"]),
                doc["predictability"][name]["test_verdict"],
                "yes" if doc["predictability"][name]["match"] else "no",
            ]
            for name in variants
        ]
        lines += _table(["Model", "Val p", "Val verdict", "Test p", "Test verdict", "Match"], rows)

    notes = doc.get("notes", [])
    if notes:
        lines += ["## Notes", ""]
        lines += [f"- {n}" for n in sorted(set(notes))]
        lines.append("")
    return "\n".join(lines)


# --- plot CSVs ---------------------------------------------------------------

def write_plot_csvs(doc: dict, out_dir) -> list:
    """Four flat CSVs: accuracy by run, agreement by run, bias by demographic,
    and significant-p counts.  Row order is fixed, so files are deterministic."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    variants = list(doc["variants"])
    split_tags = list(doc["split_tags"])
    demographics = list(doc["demographics"])
    runs = doc["runs"]
    paths = []

    def _write(name, header, rows):
        path = out_dir / name
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            w.writerows(rows)
        paths.append(path)

    rows = []
    for r in runs:
        for name in ("baseline", *variants):
            for tag in split_tags:
                rows.append([r["run"], name, tag, repr(r["splits"][tag]["performance"][name]["accuracy"])])
    _write("accuracy_by_run.csv", ["run", "variant", "split", "accuracy"], rows)

    rows = []
    for r in runs:
        for name in variants:
            for tag in split_tags:
                a = r["splits"][tag]["agreement"][name]
                rows.append(
                    [r["run"], name, tag, repr(a["accuracy"]), repr(a["chi2"]["p_value"]), a["verdict"]]
                )
    _write(
        "agreement_by_run.csv",
        ["run", "variant", "split", "agreement_accuracy", "p_value", "verdict"],
        rows,
    )

    rows = []
    for r in runs:
        for name in ("baseline", *variants):
            for tag in split_tags:
                for demo in demographics:
                    b = r["splits"][tag]["bias"][name][demo]
                    rows.append(
                        [
                            r["run"],
                            name,
                            tag,
                            demo,
                            "" if b["bias"] is None else repr(b["bias"]),
                            int(b["excluded"]),
                        ]
                    )
    _write(
        "bias_by_demographic.csv",
        ["run", "variant", "split", "demographic", "bias", "excluded"],
        rows,
    )

    counts = doc["aggregates"]["significance_counts"]
    rows = []
    for name in variants:
        for tag in split_tags:
            scope = counts[name][tag]
            rows.append([name, tag, "overall", scope["overall"]["significant"], scope["overall"]["total"]])
            for demo in demographics:
                d = scope[demo]
                rows.append([name, tag, f"{demo}:combined", d["combined"]["significant"], d["combined"]["total"]])
                for label in sorted(d["groups"]):
                    g = d["groups"][label]
                    rows.append([name, tag, f"{demo}:{label}", g["significant"], g["total"]])
    _write("p_value_counts.csv", ["variant", "split", "scope", "significant", "total"], rows)
    return paths


def write_report_files(doc: dict, out_dir) -> list:
    """Write report.json (canonical bytes), report.md, and the plot CSVs."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    json_path = out_dir / "report.json"
    with open(json_path, "wb") as fh:
        fh.write(report_json_bytes(doc))
    paths.append(json_path)
    md_path = out_dir / "report.md"
    with open(md_path, "w", encoding="utf-8") as fh:
        fh.write(render_markdown(_plain(doc)))
    paths.append(md_path)
    if doc.get("kind") == "experiment":
        paths.extend(write_plot_csvs(_plain(doc), out_dir))
    return paths
