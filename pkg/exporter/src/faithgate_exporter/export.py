"""Score a dataset with saved models and emit the prediction-set CSV.

The output follows the audit interchange schema exactly:

    row_id,split,y_true,pred_baseline,pred_<variant>...,<subgroup columns>

one row per dataset instance, row_ids numbered 0..n-1 in file order.  All
models must share one feature schema; when checkpoints embed a training-time
standardizer it is applied once (and must be identical across models).
Probabilities, when requested, go to a sidecar file rather than extra
columns, because the audit reader treats every unrecognized column as a
demographic subgroup.
"""

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .models import LoadedModel, load_model


@dataclass(frozen=True)
class ExportJob:
    """One batch-scoring request.

    ``variants`` maps variant name -> checkpoint path; ``subgroup_columns``
    are copied through to the output verbatim.  ``threshold`` is the label
    cutoff (probability >= threshold reads as class 1).
    """

    baseline_path: str
    data_path: str
    label_column: str
    variants: dict = field(default_factory=dict)
    subgroup_columns: tuple = ()
    split_tag: str = "test"
    threshold: float = 0.5

    def __post_init__(self):
        if self.split_tag not in ("val", "test"):
            raise ValueError(f"split tag must be val or test, got {self.split_tag!r}")
        if not (0.0 < self.threshold < 1.0):
            raise ValueError("threshold must lie in (0, 1)")
        for name in self.variants:
            if not name or name.strip() != name:
                raise ValueError(f"bad variant name {name!r}")


def _read_dataset(job: ExportJob):
    """Parse the data CSV into (features, labels, subgroup columns).

    Every column that is neither the label nor a listed subgroup is a
    numeric feature, taken in header order.
    """
    with open(job.data_path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ValueError(f"{job.data_path}: empty file") from None
        rows = [row for row in reader if row]

    for col in (job.label_column, *job.subgroup_columns):
        if col not in header:
            raise ValueError(f"{job.data_path}: column {col!r} not in header {header}")
    label_j = header.index(job.label_column)
    sub_js = {col: header.index(col) for col in job.subgroup_columns}
    feature_js = [
        j for j, h in enumerate(header)
        if j != label_j and j not in sub_js.values()
    ]
    if not feature_js:
        raise ValueError(f"{job.data_path}: no feature columns left")
    if not rows:
        raise ValueError(f"{job.data_path}: no data rows")

    X = np.empty((len(rows), len(feature_js)), dtype=np.float64)
    y = np.empty(len(rows), dtype=np.int64)
    subs = {col: [] for col in job.subgroup_columns}
    for i, row in enumerate(rows):
        lineno = i + 2
        if len(row) != len(header):
            raise ValueError(f"{job.data_path} line {lineno}: expected {len(header)} cells, got {len(row)}")
        for k, j in enumerate(feature_js):
            try:
                X[i, k] = float(row[j])
            except ValueError:
                raise ValueError(
                    f"{job.data_path} line {lineno}: column {header[j]!r} is not numeric "
                    f"(got {row[j]!r}); list it with the subgroup columns if it is demographic"
                ) from None
        cell = row[label_j].strip()
        if cell not in ("0", "1"):
            raise ValueError(f"{job.data_path} line {lineno}: label must be literal 0 or 1, got {cell!r}")
        y[i] = int(cell)
        for col, j in sub_js.items():
            subs[col].append(row[j].strip())
    return X, y, subs


def _load_models(job: ExportJob):
    baseline = load_model(job.baseline_path)
    variants = [(name, load_model(path)) for name, path in job.variants.items()]
    widths = {m.n_features for _, m in variants} | {baseline.n_features}
    if len(widths) > 1:
        raise ValueError(f"models disagree on feature width: {sorted(widths)}")
    scalers = [
        (name, m.standardizer)
        for name, m in [("baseline", baseline), *variants]
        if m.standardizer is not None
    ]
    for name, (mean, std) in scalers[1:]:
        if not (np.array_equal(mean, scalers[0][1][0]) and np.array_equal(std, scalers[0][1][1])):
            raise ValueError(
                f"models disagree on the embedded standardizer ({scalers[0][0]} vs {name})"
            )
    scaler = scalers[0][1] if scalers else None
    return baseline, variants, scaler


def export(job: ExportJob) -> str:
    """Run the job and return the interchange CSV as text.

    Deterministic: fixed models and data always produce identical output.
    """
    baseline, variants, scaler = _load_models(job)
    X, y, subs = _read_dataset(job)
    if X.shape[1] != baseline.n_features:
        raise ValueError(
            f"{job.data_path}: {X.shape[1]} feature columns but models expect {baseline.n_features}"
        )
    if scaler is not None:
        X = (X - scaler[0]) / scaler[1]

    base_pred = baseline.predict_labels(X, job.threshold)
    variant_preds = [(name, m.predict_labels(X, job.threshold)) for name, m in variants]

    buf = io.StringIO()
    w = csv.writer(buf)
    header = ["row_id", "split", "y_true", "pred_baseline"]
    header += [f"pred_{name}" for name, _ in variant_preds]
    header += list(job.subgroup_columns)
    w.writerow(header)
    for i in range(X.shape[0]):
        row = [i, job.split_tag, int(y[i]), int(base_pred[i])]
        row += [int(p[i]) for _, p in variant_preds]
        row += [subs[col][i] for col in job.subgroup_columns]
        w.writerow(row)
    return buf.getvalue()


def export_probabilities(job: ExportJob) -> str:
    """Companion CSV of raw probabilities (row_id, prob_baseline, prob_<v>...)."""
    baseline, variants, scaler = _load_models(job)
    X, _, _ = _read_dataset(job)
    if X.shape[1] != baseline.n_features:
        raise ValueError(
            f"{job.data_path}: {X.shape[1]} feature columns but models expect {baseline.n_features}"
        )
    if scaler is not None:
        X = (X - scaler[0]) / scaler[1]
    cols = [("baseline", baseline.predict_proba(X))]
    cols += [(name, m.predict_proba(X)) for name, m in variants]
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(["row_id"] + [f"prob_{name}" for name, _ in cols])
    for i in range(X.shape[0]):
        w.writerow([i] + [repr(float(p[i])) for _, p in cols])
    return buf.getvalue()


def export_to_file(job: ExportJob, out_path, probabilities: bool = False):
    """Write the CSV (and optional ``<out>.probs.csv`` sidecar); returns paths."""
    text = export(job)
    with open(out_path, "w", newline="", encoding="utf-8") as fh:
        fh.write(text)
    written = [str(out_path)]
    if probabilities:
        side = f"{out_path}.probs.csv"
        with open(side, "w", newline="", encoding="utf-8") as fh:
            fh.write(export_probabilities(job))
        written.append(side)
    return written
