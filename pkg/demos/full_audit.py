"""Run the replicated compression audit end to end and inspect the report.

Uses a trimmed copy of the bundled protocol (3 runs instead of 10) so the
demo finishes in a few seconds.  Run from the repository root:

    python3 demos/full_audit.py
"""

import tempfile
from pathlib import Path

from faithgate.audit import load_experiment_config, run_experiment
from faithgate.report import render_markdown, write_report_files

workdir = Path(tempfile.mkdtemp(prefix="faithgate-audit-"))
cfg = load_experiment_config(Path("configs/experiment.toml"), runs=3)
print(f"dataset: {cfg.csv_path}")
print(f"runs: {cfg.runs}, variants: pruned + quantized, threshold: {cfg.threshold}")

# Each run re-splits with a fresh seed, trains the float baseline, prunes and
# quantizes it, then applies the full metric battery on val and test.
doc = run_experiment(cfg)
print(f"\ncompleted {doc['n_runs']} runs on {doc['dataset']['rows']} rows")
for note in doc["notes"]:
    print(f"note: {note}")

agg = doc["aggregates"]
print("\ntest accuracy, mean (std) over runs:")
for name in ("baseline", "pruned", "quantized"):
    e = agg["performance"][name]["test"]["accuracy"]
    print(f"  {name:<10} {e['mean']:.3f} ({e['std']:.4f})")

print("\nagreement with baseline on test split:")
for name in ("pruned", "quantized"):
    e = agg["agreement"][name]["test"]["accuracy"]
    c = agg["significance_counts"][name]["test"]["overall"]
    print(f"  {name:<10} {e['mean']:.3f} ({e['std']:.4f}), "
          f"flagged NotFaithful in {c['significant']}/{c['total']} runs")

print("\nvalidation verdict predicts test verdict:")
for name, block in doc["predictability"]["verdicts"].items():
    print(f"  {name:<10} {block['verdict_matches']}/{block['total']} runs match")

# Reports: canonical JSON (byte-stable across reruns), markdown summary, and
# per-run CSVs ready for plotting.
paths = write_report_files(doc, workdir)
print("\nwrote:")
for p in paths:
    print(f"  {p}")

md = render_markdown(doc)
print("\nmarkdown preview:")
print("\n".join(md.splitlines()[:16]))
