"""Command-line surface over the audit engine.

Subcommands: split, train, compress, predict, agree, bias, chi2, audit,
experiment.  Results go to stdout or to files under --out; diagnostics go to
stderr.  Exit codes: 0 success, 1 usage error, 2 data or statistics error.
The FAITHGATE_LOG environment variable (debug/info/warning/error) sets
verbosity.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .audit import (
    audit_predictions,
    load_experiment_config,
    read_prediction_set,
    run_experiment,
    write_prediction_set,
    PredictionSet,
    _agreement_doc,
    _bias_doc,
)
from .compress import (
    predict_from_checkpoint,
    prune,
    quantize,
    save_pruned,
    save_quantized,
)
from .datatab import (
    SplitSpec,
    Standardizer,
    apply_standardizer,
    derive_subgroups,
    fit_standardizer,
    load_csv,
    stratified_split,
)
from .nnet import init_model, load_checkpoint, model_from_checkpoint, predict_labels, save_model, train
from .report import _plain, render_markdown, write_report_files
from .stat_test import ContingencyTable, chi_square

log = logging.getLogger("faithgate")


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; the contract here is exit 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(1)


def _build_parser() -> _Parser:
    p = _Parser(prog="faithgate", description="Faithfulness audits for compressed binary classifiers.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    def common(sp, config=False, out=False, preds=False, seed=False):
        if config:
            sp.add_argument("--config", required=True, help="experiment TOML")
        if out:
            sp.add_argument("--out", required=True, help="output directory or file")
        if preds:
            sp.add_argument("--preds", required=True, help="prediction-set CSV")
        if seed:
            sp.add_argument("--seed", type=int, default=None, help="seed override")
        sp.add_argument("--threshold", type=float, default=None, help="significance threshold (default 0.05)")
        sp.add_argument("--no-yates", action="store_true", help="disable the 2x2 continuity correction")

    sp = sub.add_parser("split", help="write row-id lists for the configured split")
    common(sp, config=True, out=True, seed=True)

    sp = sub.add_parser("train", help="train the baseline model from config")
    common(sp, config=True, out=True, seed=True)

    sp = sub.add_parser("compress", help="produce pruned and quantized variants of a baseline")
    common(sp, config=True, out=True)
    sp.add_argument("--model", required=True, help="baseline checkpoint from `train`")

    sp = sub.add_parser("predict", help="emit a prediction-set CSV from saved models")
    common(sp, config=True, out=True)
    sp.add_argument("--baseline", required=True, help="baseline checkpoint")
    sp.add_argument("--variant", action="append", default=[], metavar="NAME=PATH",
                    help="compressed checkpoint, repeatable")

    sp = sub.add_parser("agree", help="agreement metrics and shift test from a prediction set")
    common(sp, preds=True)

    sp = sub.add_parser("bias", help="equalized-odds bias per demographic from a prediction set")
    common(sp, preds=True)

    sp = sub.add_parser("chi2", help="chi-squared test of a contingency table")
    sp.add_argument("--table", required=True, help="comma-separated counts, row major")
    sp.add_argument("--shape", required=True, help="RxC, e.g. 2x2")
    sp.add_argument("--threshold", type=float, default=None)
    sp.add_argument("--no-yates", action="store_true")

    sp = sub.add_parser("audit", help="full metric battery over a prediction set")
    common(sp, preds=True)
    sp.add_argument("--out", default=None, help="directory for report.json/report.md")

    sp = sub.add_parser("experiment", help="run the full pipeline from config")
    common(sp, config=True, out=True, seed=True)
    sp.add_argument("--runs", type=int, default=None, help="iteration count override")
    return p


def _threshold(args) -> float:
    t = 0.05 if args.threshold is None else args.threshold
    if not (0.0 < t < 1.0):
        raise ValueError(f"threshold must lie in (0, 1), got {t}")
    return t


def _pipeline_pieces(cfg, seed: int):
    """Load, split, and standardize per config; shared by split/train/compress/predict."""
    ds = load_csv(cfg.csv_path, cfg.schema)
    train_ds, val_ds, test_ds = stratified_split(ds, SplitSpec(cfg.fractions, seed))
    std = fit_standardizer(train_ds)
    return ds, train_ds, val_ds, test_ds, std


def _cmd_split(args) -> int:
    cfg = load_experiment_config(args.config, base_seed=args.seed)
    seed = cfg.base_seed
    _, train_ds, val_ds, test_ds, _ = _pipeline_pieces(cfg, seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    named = [("train", train_ds), ("val", val_ds), ("test", test_ds)]
    for name, split in named:
        if split is None:
            continue
        path = out / f"{name}_rows.csv"
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["row_id"])
            w.writerows([int(r)] for r in split.row_ids)
        log.info("%s: %d rows -> %s", name, split.n_rows, path)
    print(
        f"train={train_ds.n_rows} val={0 if val_ds is None else val_ds.n_rows} test={test_ds.n_rows}"
    )
    return 0


def _pipeline_extra(std: Standardizer, cfg, seed: int) -> dict:
    return {
        "pipeline": {
            "standardizer": {"mean": std.mean.tolist(), "std": std.std.tolist()},
            "fractions": list(cfg.fractions),
            "split_seed": seed,
        }
    }


def _cmd_train(args) -> int:
    cfg = load_experiment_config(args.config, base_seed=args.seed)
    seed = cfg.base_seed
    _, train_ds, _, _, std = _pipeline_pieces(cfg, seed)
    train_s = apply_standardizer(std, train_ds)
    model0 = init_model(train_s.n_features, cfg.hidden, cfg.dropout, seed=seed)
    model, history = train(model0, train_s, replace(cfg.train, seed=seed))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "baseline.json"
    save_model(model, path, seed=seed, extra=_pipeline_extra(std, cfg, seed))
    log.info("final training loss %.6f", history[-1] if history else float("nan"))
    print(str(path))
    return 0


def _restore_pipeline(doc: dict, cfg):
    pipe = doc.get("pipeline")
    if not pipe:
        raise ValueError("checkpoint has no pipeline record; train it with `faithgate train`")
    std = Standardizer(
        mean=np.asarray(pipe["standardizer"]["mean"], dtype=np.float64),
        std=np.asarray(pipe["standardizer"]["std"], dtype=np.float64),
    )
    seed = int(pipe["split_seed"])
    ds = load_csv(cfg.csv_path, cfg.schema)
    fractions = tuple(float(f) for f in pipe["fractions"])
    train_ds, val_ds, test_ds = stratified_split(ds, SplitSpec(fractions, seed))
    return std, seed, train_ds, val_ds, test_ds


def _cmd_compress(args) -> int:
    cfg = load_experiment_config(args.config)
    doc = load_checkpoint(args.model)
    baseline = model_from_checkpoint(doc)
    std, seed, train_ds, _, _ = _restore_pipeline(doc, cfg)
    train_s = apply_standardizer(std, train_ds)
    tcfg = replace(cfg.train, seed=seed)
    pruned, masks = prune(baseline, cfg.prune_schedule, replace(tcfg, epochs=cfg.prune_epochs), train_s)
    qm = quantize(baseline, cfg.quant_spec, tcfg, train_s)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    extra = _pipeline_extra(std, cfg, seed)["pipeline"]
    p_path, q_path = out / "pruned.json", out / "quantized.json"
    save_pruned(pruned, masks, cfg.prune_schedule, p_path, seed=seed)
    save_quantized(qm, q_path, seed=seed)
    # re-attach the pipeline block so downstream predict can restore splits
    for path in (p_path, q_path):
        with open(path, encoding="utf-8") as fh:
            d = json.load(fh)
        d["pipeline"] = extra
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(d, fh)
    print(f"{p_path}\n{q_path}")
    return 0


def _parse_variants(pairs) -> list:
    out = []
    for item in pairs:
        name, sep, path = item.partition("=")
        if not sep or not name or not path:
            raise ValueError(f"--variant expects NAME=PATH, got {item!r}")
        out.append((name, path))
    return out


def _cmd_predict(args) -> int:
    cfg = load_experiment_config(args.config)
    variants = _parse_variants(args.variant)
    doc = load_checkpoint(args.baseline)
    baseline = model_from_checkpoint(doc)
    std, _, _, val_ds, test_ds = _restore_pipeline(doc, cfg)

    ids, tags, y, base = [], [], [], []
    variant_cols = {name: [] for name, _ in variants}
    subgroup_cols: dict = {}
    for tag, split in (("val", val_ds), ("test", test_ds)):
        if split is None:
            continue
        split_s = apply_standardizer(std, split)
        X = split_s.feature_matrix
        ids.extend(int(r) for r in split.row_ids)
        tags.extend([tag] * split.n_rows)
        y.extend(int(v) for v in split.labels)
        base.extend(predict_labels(baseline, X).tolist())
        for name, path in variants:
            variant_cols[name].extend(predict_from_checkpoint(path, X).tolist())
        assignments = derive_subgroups(split, cfg.subgroup_specs)
        for demo, a in assignments.items():
            subgroup_cols.setdefault(demo, []).extend(str(g) for g in a.groups)
    ps = PredictionSet(
        row_ids=np.asarray(ids),
        split=np.asarray(tags, dtype=object),
        y_true=np.asarray(y),
        pred_baseline=np.asarray(base),
        variants={k: np.asarray(v) for k, v in variant_cols.items()},
        subgroups={k: np.asarray(v, dtype=object) for k, v in subgroup_cols.items()},
    )
    write_prediction_set(ps, args.out)
    print(args.out)
    return 0


def _cmd_agree(args) -> int:
    t = _threshold(args)
    yates = not args.no_yates
    ps = read_prediction_set(args.preds)
    out: dict = {"threshold": t, "yates": yates, "splits": {}}
    for tag in ("val", "test"):
        idx = ps.rows_for(tag)
        if idx.size == 0:
            continue
        out["splits"][tag] = {
            name: _agreement_doc(ps.pred_baseline[idx], arr[idx], t, yates)
            for name, arr in ps.variants.items()
        }
    print(json.dumps(_plain(out), sort_keys=True, indent=2))
    return 0


def _cmd_bias(args) -> int:
    ps = read_prediction_set(args.preds)
    out: dict = {"splits": {}}
    notes: list = []
    for tag in ("val", "test"):
        idx = ps.rows_for(tag)
        if idx.size == 0:
            continue
        block: dict = {}
        for name in ("baseline", *ps.variants):
            preds = ps.pred_baseline[idx] if name == "baseline" else ps.variants[name][idx]
            block[name] = {}
            for demo in sorted(ps.subgroups):
                groups = ps.subgroups[demo][idx]
                order = list(dict.fromkeys(groups.tolist()))
                block[name][demo] = _bias_doc(
                    demo, ps.y_true[idx], preds, groups, order, notes, f"split {tag} {name}"
                )
        out["splits"][tag] = block
    if notes:
        out["notes"] = notes
    print(json.dumps(_plain(out), sort_keys=True, indent=2))
    return 0


def _cmd_chi2(args) -> int:
    try:
        counts = [int(v) for v in args.table.split(",")]
        r_s, _, c_s = args.shape.lower().partition("x")
        r, c = int(r_s), int(c_s)
    except ValueError:
        raise ValueError(f"bad --table/--shape: {args.table!r} / {args.shape!r}") from None
    if r * c != len(counts):
        raise ValueError(f"shape {r}x{c} needs {r * c} counts, got {len(counts)}")
    table = ContingencyTable(np.asarray(counts, dtype=np.int64).reshape(r, c))
    res = chi_square(table, yates_for_2x2=not args.no_yates)
    print(f"statistic {res.statistic!r}")
    print(f"dof {res.dof}")
    print(f"p {res.p_value!r}")
    return 0


def _cmd_audit(args) -> int:
    t = _threshold(args)
    ps = read_prediction_set(args.preds)
    doc = audit_predictions(ps, threshold=t, yates=not args.no_yates)
    verdicts = []
    for tag in ("val", "test"):
        if tag not in doc["splits"]:
            continue
        block = doc["splits"][tag]
        for name in doc["variants"]:
            a = block["agreement"][name]
            print(f"{tag} {name}: {a['verdict']} (p={a['chi2']['p_value']:.4f})")
            verdicts.append(a["verdict"])
            for demo in sorted(block["subgroup_tests"].get(name, {})):
                s = block["subgroup_tests"][name][demo]
                verdicts.append(s["combined"]["verdict"])
                verdicts.extend(g["verdict"] for g in s["groups"].values())
    overall = "Faithful" if all(v == "Faithful" for v in verdicts) else "NotFaithful"
    print(f"overall: {overall}")
    if args.out:
        paths = write_report_files(doc, args.out)
        log.info("wrote %s", ", ".join(str(p) for p in paths))
    return 0


def _cmd_experiment(args) -> int:
    cfg = load_experiment_config(
        args.config,
        runs=args.runs,
        base_seed=args.seed,
        threshold=args.threshold,
        yates=False if args.no_yates else None,
    )
    doc = run_experiment(cfg)
    paths = write_report_files(doc, args.out)
    for p in paths:
        print(str(p))
    return 0


_COMMANDS = {
    "split": _cmd_split,
    "train": _cmd_train,
    "compress": _cmd_compress,
    "predict": _cmd_predict,
    "agree": _cmd_agree,
    "bias": _cmd_bias,
    "chi2": _cmd_chi2,
    "audit": _cmd_audit,
    "experiment": _cmd_experiment,
}


def main(argv=None) -> int:
    level = os.environ.get("FAITHGATE_LOG", "warning").upper()
    logging.basicConfig(stream=sys.stderr, level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 1
    try:
        return _COMMANDS[args.command](args)
    except BrokenPipeError:
        return 0
    except (ValueError, RuntimeError, OSError, KeyError) as exc:
        sys.stderr.write(f"faithgate {args.command}: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
