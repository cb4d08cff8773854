"""Experiment harness: N-iteration split/train/compress/predict loop,
agreement and bias evaluation, chi-squared faithfulness verdicts,
validation-vs-test predictability, and aggregation into a report document.

The report is a plain schema-versioned dict (serialized as sorted-key JSON)
so every downstream rendering is recomputable from the file alone.  All
randomness derives from ``base_seed + run_index``, which makes repeated runs
of the same config byte-identical.
"""

from __future__ import annotations

import csv
import logging
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .compress import (
    PruneSchedule,
    QuantSpec,
    predict_quantized_labels,
    prune,
    quantize,
    size_report,
)
from .datatab import (
    Schema,
    SplitSpec,
    SubgroupSpec,
    apply_standardizer,
    derive_subgroups,
    fit_standardizer,
    load_csv,
    parse_schema,
    parse_subgroup_specs,
    read_toml,
    stratified_split,
)
from .fairness import bias_report, subgroup_agreement
from .metrics import (
    classification_metrics,
    confusion,
    mape,
    rmse,
)
from .nnet import TrainConfig, init_model, predict_labels, train
from .stat_test import chi_square, class_distribution_table, _as_binary

__all__ = [
    "FaithfulnessVerdict",
    "PredictabilityOutcome",
    "PredictionSet",
    "ExperimentConfig",
    "verdict_from_p",
    "predictability_score",
    "write_prediction_set",
    "read_prediction_set",
    "audit_predictions",
    "load_experiment_config",
    "run_experiment",
    "REPORT_FORMAT",
    "REPORT_VERSION",
    "SPLIT_TAGS",
]

log = logging.getLogger("faithgate")

REPORT_FORMAT = "faithgate-report"
REPORT_VERSION = 1
SPLIT_TAGS = ("val", "test")

FAITHFUL = "Faithful"
NOT_FAITHFUL = "NotFaithful"


@dataclass(frozen=True)
class FaithfulnessVerdict:
    """NotFaithful iff p_value <= threshold (boundary inclusive)."""

    p_value: float
    threshold: float = 0.05
    verdict: str = field(init=False)

    def __post_init__(self):
        if not (0.0 <= self.p_value <= 1.0):
            raise ValueError(f"p_value {self.p_value!r} outside [0, 1]")
        if not (0.0 < self.threshold < 1.0):
            raise ValueError("threshold must lie in (0, 1)")
        v = NOT_FAITHFUL if self.p_value <= self.threshold else FAITHFUL
        object.__setattr__(self, "verdict", v)


def verdict_from_p(p_value: float, threshold: float = 0.05) -> FaithfulnessVerdict:
    return FaithfulnessVerdict(p_value=p_value, threshold=threshold)


@dataclass(frozen=True)
class PredictabilityOutcome:
    """Did the validation-split verdict predict the test-split verdict?"""

    val_verdict: FaithfulnessVerdict
    test_verdict: FaithfulnessVerdict

    @property
    def match(self) -> bool:
        return self.val_verdict.verdict == self.test_verdict.verdict


def predictability_score(outcomes) -> tuple:
    """(correct, total) verdict matches over a non-empty outcome list."""
    outcomes = list(outcomes)
    if not outcomes:
        raise ValueError("no outcomes to score")
    return sum(1 for o in outcomes if o.match), len(outcomes)


# --- prediction interchange ---------------------------------------------------

@dataclass
class PredictionSet:
    """One run's predictions: ids, split tags, truth, baseline, variants, subgroups."""

    row_ids: np.ndarray
    split: np.ndarray
    y_true: np.ndarray
    pred_baseline: np.ndarray
    variants: dict
    subgroups: dict = field(default_factory=dict)

    def __post_init__(self):
        self.row_ids = np.asarray(self.row_ids, dtype=np.int64)
        self.split = np.asarray(self.split, dtype=object)
        self.y_true = _as_binary(self.y_true, "y_true")
        self.pred_baseline = _as_binary(self.pred_baseline, "pred_baseline")
        n = self.row_ids.shape[0]
        for name, arr in (("split", self.split), ("y_true", self.y_true), ("pred_baseline", self.pred_baseline)):
            if arr.shape[0] != n:
                raise ValueError(f"column {name} misaligned")
        bad = [str(s) for s in np.unique(self.split) if s not in SPLIT_TAGS]
        if bad:
            raise ValueError(f"split tags must be one of {SPLIT_TAGS}, got {bad}")
        self.variants = {k: _as_binary(v, f"pred_{k}") for k, v in self.variants.items()}
        for k, v in self.variants.items():
            if v.shape[0] != n:
                raise ValueError(f"variant column {k} misaligned")
        self.subgroups = {k: np.asarray(v, dtype=object) for k, v in self.subgroups.items()}
        for k, v in self.subgroups.items():
            if v.shape[0] != n:
                raise ValueError(f"subgroup column {k} misaligned")
        for tag in SPLIT_TAGS:
            ids = self.row_ids[self.split == tag]
            if len(np.unique(ids)) != len(ids):
                raise ValueError(f"duplicate row_id within split {tag!r}")

    @property
    def variant_names(self) -> tuple:
        return tuple(self.variants)

    def rows_for(self, tag: str) -> np.ndarray:
        return np.flatnonzero(self.split == tag)


def write_prediction_set(ps: PredictionSet, path) -> None:
    """Emit the interchange CSV: row_id,split,y_true,pred_baseline,pred_<v>...,<subgroup>..."""
    header = ["row_id", "split", "y_true", "pred_baseline"]
    header += [f"pred_{name}" for name in ps.variants]
    header += list(ps.subgroups)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for i in range(ps.row_ids.shape[0]):
            row = [int(ps.row_ids[i]), str(ps.split[i]), int(ps.y_true[i]), int(ps.pred_baseline[i])]
            row += [int(v[i]) for v in ps.variants.values()]
            row += [str(g[i]) for g in ps.subgroups.values()]
            w.writerow(row)


def read_prediction_set(path) -> PredictionSet:
    """Parse and validate an interchange CSV; schema violations are enumerated per row."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ValueError(f"{path}: empty file") from None
        rows = list(reader)

    fixed = ["row_id", "split", "y_true", "pred_baseline"]
    if header[: len(fixed)] != fixed:
        raise ValueError(f"{path}: header must start with {','.join(fixed)}, got {header[:4]}")
    variant_cols = [(j, h[len("pred_"):]) for j, h in enumerate(header) if h.startswith("pred_") and j >= 4]
    subgroup_cols = [(j, h) for j, h in enumerate(header) if j >= 4 and not h.startswith("pred_")]

    errors = []
    row_ids, split, y_true, base = [], [], [], []
    variants = {name: [] for _, name in variant_cols}
    subgroups = {name: [] for _, name in subgroup_cols}

    def binary(cell, what, rid, lineno):
        if cell not in ("0", "1"):
            errors.append(f"row_id {rid} (line {lineno}): {what} must be literal 0 or 1, got {cell!r}")
            return 0
        return int(cell)

    for i, row in enumerate(rows):
        lineno = i + 2
        if len(row) != len(header):
            errors.append(f"line {lineno}: expected {len(header)} cells, got {len(row)}")
            continue
        rid_cell = row[0].strip()
        try:
            rid = int(rid_cell)
        except ValueError:
            errors.append(f"line {lineno}: row_id {rid_cell!r} is not an integer")
            continue
        tag = row[1].strip()
        if tag not in SPLIT_TAGS:
            errors.append(f"row_id {rid} (line {lineno}): split tag must be val or test, got {tag!r}")
            continue
        row_ids.append(rid)
        split.append(tag)
        y_true.append(binary(row[2].strip(), "y_true", rid, lineno))
        base.append(binary(row[3].strip(), "pred_baseline", rid, lineno))
        for j, name in variant_cols:
            variants[name].append(binary(row[j].strip(), f"pred_{name}", rid, lineno))
        for j, name in subgroup_cols:
            subgroups[name].append(row[j].strip())

    for tag in SPLIT_TAGS:
        seen = {}
        for rid, t in zip(row_ids, split):
            if t == tag:
                if rid in seen:
                    errors.append(f"row_id {rid} duplicated within split {tag!r}")
                seen[rid] = True
    if errors:
        shown = "\n".join(errors[:50])
        more = f"\n... and {len(errors) - 50} more" if len(errors) > 50 else ""
        raise ValueError(f"{path}: invalid prediction set:\n{shown}{more}")
    if not row_ids:
        raise ValueError(f"{path}: no data rows")
    return PredictionSet(
        row_ids=np.asarray(row_ids),
        split=np.asarray(split, dtype=object),
        y_true=np.asarray(y_true),
        pred_baseline=np.asarray(base),
        variants={k: np.asarray(v) for k, v in variants.items()},
        subgroups={k: np.asarray(v, dtype=object) for k, v in subgroups.items()},
    )


# --- evaluation blocks ---------------------------------------------------------

def _metrics_doc(reference, predicted) -> dict:
    m = classification_metrics(confusion(reference, predicted))
    return {
        "accuracy": m.accuracy,
        "precision": m.precision,
        "recall": m.recall,
        "f1": m.f1,
        "undefined": list(m.undefined),
    }


def _chi2_doc(result, observed=None) -> dict:
    doc = {
        "statistic": result.statistic,
        "dof": result.dof,
        "p_value": result.p_value,
        "correction_applied": result.correction_applied,
    }
    if observed is not None:
        doc["observed"] = observed.tolist()
    return doc


def _agreement_doc(base, variant_preds, threshold, yates) -> dict:
    table = class_distribution_table(base, variant_preds)
    res = chi_square(table, yates_for_2x2=yates)
    v = verdict_from_p(res.p_value, threshold)
    doc = _metrics_doc(base, variant_preds)
    doc["chi2"] = _chi2_doc(res, table.observed)
    doc["verdict"] = v.verdict
    return doc


def _bias_doc(demographic, y, preds, groups, order, notes, context) -> dict:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        rep = bias_report(demographic, y, preds, groups, group_order=order)
    if rep.excluded:
        notes.append(f"{context}: demographic {demographic!r} excluded from bias (group missing a label class)")
    return {
        "bias": rep.bias,
        "excluded": rep.excluded,
        "groups": {
            r.group_label: {
                "sensitivity": r.sensitivity,
                "specificity": r.specificity,
                "support": r.support,
            }
            for r in rep.group_rates
        },
    }


def _subgroup_doc(base, variant_preds, groups, order, threshold, yates) -> dict:
    res = subgroup_agreement(base, variant_preds, groups, group_order=order, yates_for_2x2=yates)
    combined = _chi2_doc(res.combined, res.combined_table.observed)
    combined["verdict"] = verdict_from_p(res.combined.p_value, threshold).verdict
    per_group = {}
    for label, r in res.per_group.items():
        d = _chi2_doc(r, res.per_group_tables[label].observed)
        d["verdict"] = verdict_from_p(r.p_value, threshold).verdict
        per_group[label] = d
    return {"combined": combined, "groups": per_group}


def _split_battery(y, base, variant_preds, memberships, threshold, yates, notes, context) -> dict:
    """Full metric battery for one split: performance, agreement, bias, subgroup tests."""
    out = {
        "performance": {"baseline": _metrics_doc(y, base)},
        "agreement": {},
        "bias": {"baseline": {}},
        "subgroup_tests": {},
    }
    for demo, (groups, order) in memberships.items():
        out["bias"]["baseline"][demo] = _bias_doc(
            demo, y, base, groups, order, notes, f"{context} baseline"
        )
    for name, preds in variant_preds.items():
        out["performance"][name] = _metrics_doc(y, preds)
        out["agreement"][name] = _agreement_doc(base, preds, threshold, yates)
        out["bias"][name] = {}
        out["subgroup_tests"][name] = {}
        for demo, (groups, order) in memberships.items():
            out["bias"][name][demo] = _bias_doc(
                demo, y, preds, groups, order, notes, f"{context} {name}"
            )
            out["subgroup_tests"][name][demo] = _subgroup_doc(
                base, preds, groups, order, threshold, yates
            )
    return out


def audit_predictions(ps: PredictionSet, threshold: float = 0.05, yates: bool = True) -> dict:
    """The run_experiment metric battery applied to an existing PredictionSet.

    Covers agreement, performance, bias, and subgroup tests per split, plus
    predictability outcomes when both split tags are present.  Training and
    size accounting are out of scope here.
    """
    notes: list = []
    splits = {}
    for tag in SPLIT_TAGS:
        idx = ps.rows_for(tag)
        if idx.size == 0:
            continue
        memberships = {}
        for demo, col in ps.subgroups.items():
            groups = col[idx]
            order = list(dict.fromkeys(groups.tolist()))
            if len(order) < 2:
                notes.append(f"split {tag}: demographic {demo!r} has a single group; skipped")
                continue
            memberships[demo] = (groups, order)
        variant_preds = {name: arr[idx] for name, arr in ps.variants.items()}
        splits[tag] = _split_battery(
            ps.y_true[idx],
            ps.pred_baseline[idx],
            variant_preds,
            memberships,
            threshold,
            yates,
            notes,
            f"split {tag}",
        )
    doc = {
        "format": REPORT_FORMAT,
        "version": REPORT_VERSION,
        "kind": "prediction-audit",
        "threshold": threshold,
        "yates": yates,
        "variants": list(ps.variants),
        "splits": splits,
        "notes": notes,
    }
    if "val" in splits and "test" in splits:
        pred = {}
        for name in ps.variants:
            val_p = splits["val"]["agreement"][name]["chi2"]["p_value"]
            test_p = splits["test"]["agreement"][name]["chi2"]["p_value"]
            o = PredictabilityOutcome(
                verdict_from_p(val_p, threshold), verdict_from_p(test_p, threshold)
            )
            pred[name] = {
                "val_p": val_p,
                "test_p": test_p,
                "val_verdict": o.val_verdict.verdict,
                "test_verdict": o.test_verdict.verdict,
                "match": o.match,
            }
        doc["predictability"] = pred
    return doc


# --- experiment configuration ---------------------------------------------------

@dataclass(frozen=True)
class ExperimentConfig:
    """Everything run_experiment needs, resolved from one TOML file."""

    csv_path: str
    schema: Schema
    subgroup_specs: tuple
    fractions: tuple
    hidden: tuple
    dropout: tuple
    train: TrainConfig
    prune_schedule: PruneSchedule
    prune_epochs: int
    quant_spec: QuantSpec
    runs: int
    base_seed: int
    threshold: float = 0.05
    yates: bool = True
    raw: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.runs < 1:
            raise ValueError("runs must be >= 1")
        if not (0.0 < self.threshold < 1.0):
            raise ValueError("threshold must lie in (0, 1)")


def load_experiment_config(
    path,
    runs: int | None = None,
    base_seed: int | None = None,
    threshold: float | None = None,
    yates: bool | None = None,
) -> ExperimentConfig:
    """Parse the experiment TOML; keyword arguments override file values.

    Relative dataset paths resolve against the config file's directory.
    """
    raw = read_toml(path)
    base_dir = Path(path).resolve().parent
    ds = raw["dataset"]
    subgroup_specs = parse_subgroup_specs(raw.get("subgroups", []))
    listed = tuple(ds.get("subgroup_columns", ()))
    sources = tuple(dict.fromkeys([s.source_column for s in subgroup_specs] + list(listed)))
    schema = parse_schema({**ds, "subgroup_columns": sources})
    csv_path = Path(ds["csv"])
    if not csv_path.is_absolute():
        csv_path = (base_dir / csv_path).resolve()

    split = raw.get("split", {})
    fr = split.get("fractions", [0.7, 0.15, 0.15])
    if len(fr) == 2:
        fr = [fr[0], 0.0, fr[1]]
    model = raw.get("model", {})
    hidden = tuple(int(h) for h in model.get("hidden", [16, 8]))
    dropout = tuple(float(d) for d in model.get("dropout", [0.0] * len(hidden)))

    tr = raw.get("train", {})
    train_cfg = TrainConfig(
        learning_rate=float(tr.get("learning_rate", 1e-3)),
        beta1=float(tr.get("beta1", 0.9)),
        beta2=float(tr.get("beta2", 0.999)),
        epsilon=float(tr.get("epsilon", 1e-8)),
        epochs=int(tr.get("epochs", 10)),
        batch_size=int(tr.get("batch_size", 32)),
        seed=0,
    )
    pr = raw.get("prune", {})
    schedule = PruneSchedule(
        initial_sparsity=float(pr.get("initial_sparsity", 0.5)),
        final_sparsity=float(pr.get("final_sparsity", 0.8)),
        begin_step=int(pr.get("begin_step", 0)),
        end_step=int(pr.get("end_step", 100)),
        power=float(pr.get("power", 3.0)),
    )
    qz = raw.get("quantize", {})
    quant_spec = QuantSpec(
        bit_width=int(qz.get("bit_width", 8)),
        fine_tune_epochs=int(qz.get("fine_tune_epochs", 0)),
    )
    ex = raw.get("experiment", {})
    return ExperimentConfig(
        csv_path=str(csv_path),
        schema=schema,
        subgroup_specs=subgroup_specs,
        fractions=tuple(float(f) for f in fr),
        hidden=hidden,
        dropout=dropout,
        train=train_cfg,
        prune_schedule=schedule,
        prune_epochs=int(pr.get("fine_tune_epochs", 2)),
        quant_spec=quant_spec,
        runs=runs if runs is not None else int(ex.get("runs", 10)),
        base_seed=base_seed if base_seed is not None else int(ex.get("base_seed", 0)),
        threshold=threshold if threshold is not None else float(ex.get("threshold", 0.05)),
        yates=yates if yates is not None else bool(ex.get("yates", True)),
        raw=raw,
    )


# --- the experiment loop ----------------------------------------------------------

def _run_once(cfg: ExperimentConfig, ds, run_index: int, notes: list) -> dict:
    seed = cfg.base_seed + run_index
    stage = "split"
    try:
        train_ds, val_ds, test_ds = stratified_split(ds, SplitSpec(cfg.fractions, seed))
        stage = "standardize"
        std = fit_standardizer(train_ds)
        train_s = apply_standardizer(std, train_ds)
        eval_splits = {}
        if val_ds is not None:
            eval_splits["val"] = apply_standardizer(std, val_ds)
        eval_splits["test"] = apply_standardizer(std, test_ds)

        stage = "train"
        tcfg = replace(cfg.train, seed=seed)
        model0 = init_model(train_s.n_features, cfg.hidden, cfg.dropout, seed=seed)
        baseline, history = train(model0, train_s, tcfg)

        stage = "compress"
        pruned, masks = prune(
            baseline, cfg.prune_schedule, replace(tcfg, epochs=cfg.prune_epochs), train_s
        )
        qm = quantize(baseline, cfg.quant_spec, tcfg, train_s)

        stage = "predict"
        record = {
            "run": run_index,
            "seed": seed,
            "final_train_loss": history[-1] if history else None,
            "splits": {},
            "sizes": {
                "baseline": size_report(baseline).__dict__,
                "pruned": size_report(pruned).__dict__,
                "quantized": size_report(qm).__dict__,
            },
        }
        stage = "evaluate"
        for tag, split_ds in eval_splits.items():
            X = split_ds.feature_matrix
            base = predict_labels(baseline, X)
            variant_preds = {
                "pruned": predict_labels(pruned, X),
                "quantized": predict_quantized_labels(qm, X),
            }
            assignments = derive_subgroups(split_ds, cfg.subgroup_specs)
            memberships = {
                name: (a.groups, list(a.group_labels)) for name, a in assignments.items()
            }
            record["splits"][tag] = _split_battery(
                split_ds.labels,
                base,
                variant_preds,
                memberships,
                cfg.threshold,
                cfg.yates,
                notes,
                f"run {run_index} split {tag}",
            )
        return record
    except Exception as exc:
        raise RuntimeError(f"run {run_index} failed at stage {stage}: {exc}") from exc


def _agg_series(values) -> dict:
    """Mean/std/n for a run-level series; std is None when n < 2."""
    vals = [v for v in values if v is not None]
    if not vals:
        return {"mean": None, "std": None, "n": 0}
    if len(vals) == 1:
        return {"mean": float(vals[0]), "std": None, "n": 1}
    arr = np.asarray(vals, dtype=np.float64)
    mean = float(arr.mean())
    std = float(np.sqrt(np.sum((arr - mean) ** 2) / (len(vals) - 1)))
    return {"mean": mean, "std": std, "n": len(vals)}


def _aggregate(runs: list, variants, split_tags, demographics) -> dict:
    perf = {}
    agree = {}
    bias = {}
    counts = {}
    sizes = {}
    metric_names = ("accuracy", "precision", "recall", "f1")
    for name in ("baseline", *variants):
        perf[name] = {}
        for tag in split_tags:
            perf[name][tag] = {
                m: _agg_series(r["splits"][tag]["performance"][name][m] for r in runs)
                for m in metric_names
            }
        bias[name] = {}
        for tag in split_tags:
            bias[name][tag] = {}
            for demo in demographics:
                series = [r["splits"][tag]["bias"][name][demo]["bias"] for r in runs]
                entry = _agg_series(series)
                entry["excluded_runs"] = sum(1 for v in series if v is None)
                bias[name][tag][demo] = entry
        sizes[name] = {
            k: _agg_series(r["sizes"][name][k] for r in runs)
            for k in ("parameter_bytes", "nonzero_parameters", "sparsity")
        }
    for name in variants:
        agree[name] = {}
        counts[name] = {}
        for tag in split_tags:
            block = {
                m: _agg_series(r["splits"][tag]["agreement"][name][m] for r in runs)
                for m in metric_names
            }
            block["p_value"] = _agg_series(
                r["splits"][tag]["agreement"][name]["chi2"]["p_value"] for r in runs
            )
            agree[name][tag] = block
            scope = {
                "overall": {
                    "significant": sum(
                        1
                        for r in runs
                        if r["splits"][tag]["agreement"][name]["verdict"] == NOT_FAITHFUL
                    ),
                    "total": len(runs),
                }
            }
            for demo in demographics:
                tests = [r["splits"][tag]["subgroup_tests"][name][demo] for r in runs]
                demo_scope = {
                    "combined": {
                        "significant": sum(
                            1 for t in tests if t["combined"]["verdict"] == NOT_FAITHFUL
                        ),
                        "total": len(runs),
                    },
                    "groups": {},
                }
                group_labels = list(tests[0]["groups"]) if tests else []
                for label in group_labels:
                    demo_scope["groups"][label] = {
                        "significant": sum(
                            1 for t in tests if t["groups"][label]["verdict"] == NOT_FAITHFUL
                        ),
                        "total": len(runs),
                    }
                scope[demo] = demo_scope
            counts[name][tag] = scope
    return {
        "performance": perf,
        "agreement": agree,
        "bias": bias,
        "sizes": sizes,
        "significance_counts": counts,
    }


def _predictability(runs: list, variants, threshold: float, notes: list) -> dict:
    """Validation-vs-test verdict matching plus RMSE/MAPE of run-level accuracy."""
    out = {}
    for name in variants:
        outcomes = []
        detail = []
        for r in runs:
            val_p = r["splits"]["val"]["agreement"][name]["chi2"]["p_value"]
            test_p = r["splits"]["test"]["agreement"][name]["chi2"]["p_value"]
            o = PredictabilityOutcome(
                verdict_from_p(val_p, threshold), verdict_from_p(test_p, threshold)
            )
            outcomes.append(o)
            detail.append(
                {
                    "run": r["run"],
                    "val_p": val_p,
                    "test_p": test_p,
                    "val_verdict": o.val_verdict.verdict,
                    "test_verdict": o.test_verdict.verdict,
                    "match": o.match,
                }
            )
        correct, total = predictability_score(outcomes)
        out[name] = {"verdict_matches": correct, "total": total, "outcomes": detail}
    accuracy = {}
    for name in ("baseline", *variants):
        val_acc = [r["splits"]["val"]["performance"][name]["accuracy"] for r in runs]
        test_acc = [r["splits"]["test"]["performance"][name]["accuracy"] for r in runs]
        entry = {"rmse": rmse(val_acc, test_acc)}
        try:
            entry["mape"] = mape(val_acc, test_acc)
        except ValueError:
            entry["mape"] = None
            notes.append(f"predictability: MAPE undefined for {name} (zero test accuracy)")
        accuracy[name] = entry
    return {"verdicts": out, "accuracy": accuracy}


def run_experiment(cfg: ExperimentConfig) -> dict:
    """Run the full N-iteration protocol and assemble the report document.

    Iteration i reseeds everything with base_seed + i.  Any stage failure
    aborts with the run index and stage name; partial reports are never
    emitted.
    """
    ds = load_csv(cfg.csv_path, cfg.schema)
    log.info("loaded %d rows (%d dropped) from %s", ds.n_rows, ds.dropped_count, cfg.csv_path)
    variants = ("pruned", "quantized")
    notes: list = []
    runs = []
    for i in range(cfg.runs):
        runs.append(_run_once(cfg, ds, i, notes))
        log.info("run %d/%d complete", i + 1, cfg.runs)
    split_tags = [t for t in SPLIT_TAGS if t in runs[0]["splits"]]
    demographics = [s.name for s in cfg.subgroup_specs]
    aggregates = _aggregate(runs, variants, split_tags, demographics)
    doc = {
        "format": REPORT_FORMAT,
        "version": REPORT_VERSION,
        "kind": "experiment",
        "config": cfg.raw,
        "n_runs": cfg.runs,
        "threshold": cfg.threshold,
        "yates": cfg.yates,
        "variants": list(variants),
        "split_tags": split_tags,
        "demographics": demographics,
        "dataset": {
            "path": str(cfg.csv_path),
            "rows": ds.n_rows,
            "dropped": ds.dropped_count,
            "features": list(ds.feature_names),
        },
        "runs": runs,
        "aggregates": aggregates,
        "notes": notes,
    }
    if cfg.runs == 1:
        notes.append("n_runs=1: sample standard deviations undefined")
    if "val" in split_tags and "test" in split_tags:
        doc["predictability"] = _predictability(runs, variants, cfg.threshold, notes)
    else:
        notes.append("no validation split: predictability analysis skipped")
    return doc
