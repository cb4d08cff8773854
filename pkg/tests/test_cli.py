"""End-to-end tests for the command-line surface (in-process via main())."""

import json
import os
import re
import subprocess
import sys

import numpy as np
import pytest

from faithgate.cli import main


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory, tiny_config):
    """Run split -> train -> compress -> predict once and share the artifacts."""
    work = tmp_path_factory.mktemp("cli_chain")
    cfg = str(tiny_config)
    assert main(["split", "--config", cfg, "--out", str(work / "splits")]) == 0
    assert main(["train", "--config", cfg, "--out", str(work)]) == 0
    baseline = work / "baseline.json"
    assert main(["compress", "--config", cfg, "--model", str(baseline), "--out", str(work)]) == 0
    preds = work / "preds.csv"
    rc = main(
        [
            "predict",
            "--config",
            cfg,
            "--baseline",
            str(baseline),
            "--variant",
            f"pruned={work / 'pruned.json'}",
            "--variant",
            f"quantized={work / 'quantized.json'}",
            "--out",
            str(preds),
        ]
    )
    assert rc == 0
    return {"work": work, "cfg": cfg, "baseline": baseline, "preds": preds}


# --- chi2 ------------------------------------------------------------------------


def test_chi2_pinned_output(capsys):
    assert main(["chi2", "--table", "367,392,238,213", "--shape", "2x2"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out == [
        "statistic 2.036055143160127",
        "dof 1",
        "p 0.15360755581453533",
    ]


def test_chi2_without_correction(capsys):
    main(["chi2", "--table", "367,392,238,213", "--shape", "2x2"])
    corrected = float(capsys.readouterr().out.splitlines()[0].split()[1])
    main(["chi2", "--table", "367,392,238,213", "--shape", "2x2", "--no-yates"])
    raw = float(capsys.readouterr().out.splitlines()[0].split()[1])
    assert raw > corrected


def test_chi2_stacked_shape(capsys):
    rc = main(["chi2", "--table", "367,392,238,213,1272,1307,1426,1391", "--shape", "4x2"])
    assert rc == 0
    assert "dof 3" in capsys.readouterr().out


def test_chi2_input_errors(capsys):
    assert main(["chi2", "--table", "1,2,3", "--shape", "2x2"]) == 2
    assert "needs 4 counts" in capsys.readouterr().err
    assert main(["chi2", "--table", "a,b,c,d", "--shape", "2x2"]) == 2
    assert main(["chi2", "--table", "0,0,0,0", "--shape", "2x2"]) == 2


# --- exit codes --------------------------------------------------------------------


def test_unknown_subcommand_is_usage_error():
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 1


def test_missing_required_flag_is_usage_error():
    with pytest.raises(SystemExit) as exc:
        main(["chi2", "--table", "1,2,3,4"])
    assert exc.value.code == 1


def test_no_subcommand_prints_usage():
    assert main([]) == 1


def test_missing_input_file_is_data_error(capsys):
    assert main(["agree", "--preds", "/nonexistent/preds.csv"]) == 2
    assert "agree" in capsys.readouterr().err


def test_threshold_out_of_range(pipeline):
    rc = main(["audit", "--preds", str(pipeline["preds"]), "--threshold", "1.5"])
    assert rc == 2


# --- pipeline subcommands --------------------------------------------------------------


def test_split_writes_row_lists(pipeline, capsys):
    assert main(["split", "--config", pipeline["cfg"], "--out", str(pipeline["work"] / "splits")]) == 0
    assert capsys.readouterr().out.strip() == "train=420 val=90 test=90"
    rows = {}
    for name in ("train", "val", "test"):
        path = pipeline["work"] / "splits" / f"{name}_rows.csv"
        lines = path.read_text(encoding="utf-8").splitlines()
        assert lines[0] == "row_id"
        rows[name] = [int(v) for v in lines[1:]]
    all_ids = rows["train"] + rows["val"] + rows["test"]
    assert len(all_ids) == len(set(all_ids)) == 600


def test_train_checkpoint_carries_pipeline_block(pipeline):
    doc = json.loads(pipeline["baseline"].read_text(encoding="utf-8"))
    assert doc["format"] == "faithgate-model"
    pipe = doc["pipeline"]
    assert pipe["split_seed"] == 11
    assert pipe["fractions"] == [0.7, 0.15, 0.15]
    assert len(pipe["standardizer"]["mean"]) == 7


def test_compress_outputs_both_variants(pipeline):
    pruned = json.loads((pipeline["work"] / "pruned.json").read_text(encoding="utf-8"))
    quant = json.loads((pipeline["work"] / "quantized.json").read_text(encoding="utf-8"))
    assert pruned["compression"]["method"] == "pruned"
    assert quant["compression"]["method"] == "quantized"
    assert "masks" in pruned and "quantization" in quant
    # the pipeline block is re-attached so predict can restore the split
    assert "pipeline" in pruned and "pipeline" in quant


def test_predict_emits_interchange_header(pipeline):
    lines = pipeline["preds"].read_text(encoding="utf-8").splitlines()
    assert lines[0] == "row_id,split,y_true,pred_baseline,pred_pruned,pred_quantized,sex"
    assert len(lines) == 1 + 180  # 90 val + 90 test rows
    tags = {line.split(",")[1] for line in lines[1:]}
    assert tags == {"val", "test"}


def test_predict_rejects_malformed_variant(pipeline):
    rc = main(
        [
            "predict",
            "--config",
            pipeline["cfg"],
            "--baseline",
            str(pipeline["baseline"]),
            "--variant",
            "not-a-pair",
            "--out",
            str(pipeline["work"] / "x.csv"),
        ]
    )
    assert rc == 2


def test_agree_reports_both_splits(pipeline, capsys):
    assert main(["agree", "--preds", str(pipeline["preds"])]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["threshold"] == 0.05 and doc["yates"] is True
    for tag in ("val", "test"):
        for name in ("pruned", "quantized"):
            entry = doc["splits"][tag][name]
            assert 0.0 <= entry["accuracy"] <= 1.0
            assert entry["verdict"] in ("Faithful", "NotFaithful")
            assert "statistic" in entry["chi2"]


def test_bias_reports_groups(pipeline, capsys):
    assert main(["bias", "--preds", str(pipeline["preds"])]) == 0
    doc = json.loads(capsys.readouterr().out)
    entry = doc["splits"]["test"]["baseline"]["sex"]
    assert set(entry["groups"]) == {"female", "male"}
    assert entry["bias"] is None or 0.0 <= entry["bias"] <= 2.0


def test_audit_prints_verdict_lines(pipeline, tmp_path, capsys):
    out_dir = tmp_path / "report"
    assert main(["audit", "--preds", str(pipeline["preds"]), "--out", str(out_dir)]) == 0
    lines = capsys.readouterr().out.splitlines()
    verdict_re = re.compile(
        r"^(val|test) (pruned|quantized): (Faithful|NotFaithful) \(p=\d\.\d{4}\)$"
    )
    assert sum(1 for line in lines if verdict_re.match(line)) == 4
    assert lines[-1] in ("overall: Faithful", "overall: NotFaithful")
    assert (out_dir / "report.json").exists() and (out_dir / "report.md").exists()
    doc = json.loads((out_dir / "report.json").read_text(encoding="utf-8"))
    assert doc["kind"] == "prediction-audit"


def test_experiment_cli_writes_full_report(tiny_config, tmp_path, capsys):
    out_dir = tmp_path / "exp"
    assert main(["experiment", "--config", str(tiny_config), "--out", str(out_dir)]) == 0
    printed = [line.strip() for line in capsys.readouterr().out.splitlines() if line.strip()]
    assert len(printed) == 6
    for p in printed:
        assert os.path.exists(p), p
    doc = json.loads((out_dir / "report.json").read_text(encoding="utf-8"))
    assert doc["kind"] == "experiment" and doc["n_runs"] == 2


def test_experiment_cli_run_override(tiny_config, tmp_path):
    out_dir = tmp_path / "exp1"
    assert main(["experiment", "--config", str(tiny_config), "--out", str(out_dir), "--runs", "1"]) == 0
    doc = json.loads((out_dir / "report.json").read_text(encoding="utf-8"))
    assert doc["n_runs"] == 1


def test_log_env_var_enables_info_output(tiny_config, tmp_path):
    proc = subprocess.run(
        [
            sys.executable,
            "-m",
            "faithgate.cli",
            "split",
            "--config",
            str(tiny_config),
            "--out",
            str(tmp_path / "s"),
        ],
        capture_output=True,
        text=True,
        env={**os.environ, "FAITHGATE_LOG": "info"},
    )
    assert proc.returncode == 0
    assert "INFO faithgate" in proc.stderr
