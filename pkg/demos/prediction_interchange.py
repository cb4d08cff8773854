"""Audit predictions produced outside this library via the interchange CSV.

Any system that can dump row-level predictions to CSV can be audited without
rerunning training here.  Run from the repository root:

    python3 demos/prediction_interchange.py
"""

import tempfile
from pathlib import Path

import numpy as np

from faithgate.audit import (
    PredictionSet,
    audit_predictions,
    read_prediction_set,
    write_prediction_set,
)

workdir = Path(tempfile.mkdtemp(prefix="faithgate-interchange-"))
rng = np.random.default_rng(5)

# Pretend these came from some other serving stack: a baseline, a distilled
# variant that mostly agrees, and an int8 variant that drifts on one segment.
n = 1200
y = rng.integers(0, 2, n)
baseline = np.where(rng.random(n) < 0.85, y, 1 - y)
distilled = np.where(rng.random(n) < 0.97, baseline, 1 - baseline)
int8 = baseline.copy()
segment = np.array((["urban", "rural"] * n)[:n], dtype=object)
drift = (segment == "rural") & (rng.random(n) < 0.3)
int8[drift] = 1

ps = PredictionSet(
    row_ids=np.arange(n),
    split=np.array(["val"] * 400 + ["test"] * 800, dtype=object),
    y_true=y,
    pred_baseline=baseline,
    variants={"distilled": distilled, "int8": int8},
    subgroups={"segment": segment},
)

# The CSV is one row per prediction with a fixed header; anything that writes
# this shape can feed the auditor.
csv_path = workdir / "predictions.csv"
write_prediction_set(ps, csv_path)
print(f"wrote {csv_path}")
with open(csv_path, encoding="utf-8") as fh:
    for line in [next(fh) for _ in range(4)]:
        print(f"  {line.rstrip()}")

# Round-trip and audit.  Malformed rows would be rejected with row-numbered
# error messages instead of silently skewing the tables.
loaded = read_prediction_set(csv_path)
doc = audit_predictions(loaded, threshold=0.05)

for tag in ("val", "test"):
    print(f"\n{tag} split:")
    for name in doc["variants"]:
        a = doc["splits"][tag]["agreement"][name]
        print(f"  {name:<10} agreement {a['accuracy']:.3f}, p = {a['chi2']['p_value']:.4f}"
              f" -> {a['verdict']}")
        seg = doc["splits"][tag]["subgroup_tests"][name]["segment"]
        worst = min(seg["groups"].items(), key=lambda kv: kv[1]["p_value"])
        print(f"             worst segment: {worst[0]} (p = {worst[1]['p_value']:.4f},"
              f" {worst[1]['verdict']})")

print("\nvalidation verdict vs test verdict:")
for name, block in doc["predictability"].items():
    print(f"  {name:<10} val={block['val_verdict']:<12} test={block['test_verdict']:<12}"
          f" match={block['match']}")

print("\nSame audit from the command line:")
print(f"  faithgate audit --preds {csv_path} --out {workdir}")
