"""Command-line behavior: the generate/train/select/iterate/evaluate chain,
flag overrides, validation-before-output, and byte-level determinism."""

from __future__ import annotations

import json
import subprocess
import sys

import pytest

from coreselect.cli import main

SMALL = {
    "seed": 7,
    "generate": {"n_per_class": 12, "batches": 2, "batch_per_class": 8,
                 "corruption_fraction": 0.1},
    "training": {"epochs": 10, "batch_size": 8},
    "fine_tuning": {"epochs": 4, "batch_size": 8},
}


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    """One shared generate+train so the per-command tests stay fast."""
    root = tmp_path_factory.mktemp("cli")
    config = root / "config.json"
    config.write_text(json.dumps(SMALL))
    assert main(["generate", "--config", str(config), "--out", str(root / "data")]) == 0
    assert main([
        "train", "--config", str(config),
        "--train", str(root / "data" / "train.jsonl"),
        "--out", str(root / "model"),
    ]) == 0
    return root


def test_generate_writes_datasets_and_resolved_config(workspace):
    data = workspace / "data"
    for name in ("train.jsonl", "test.jsonl", "batch_0.jsonl", "batch_1.jsonl",
                 "resolved_config.json"):
        assert (data / name).exists(), name
    resolved = json.loads((data / "resolved_config.json").read_text())
    assert resolved["seed"] == 7
    assert resolved["selection"]["budget_pct"] == 0.5  # defaults folded in


def test_train_writes_checkpoint_and_history(workspace):
    model_dir = workspace / "model"
    checkpoint = json.loads((model_dir / "checkpoint.json").read_text())
    assert checkpoint["format"] == "coreselect-checkpoint"
    history = (model_dir / "history.csv").read_text().strip().splitlines()
    assert history[0] == "epoch,loss"
    assert len(history) == 1 + SMALL["training"]["epochs"]


def test_evaluate_reports_three_metrics(workspace, tmp_path):
    assert main([
        "evaluate",
        "--checkpoint", str(workspace / "model" / "checkpoint.json"),
        "--test", str(workspace / "data" / "test.jsonl"),
        "--out", str(tmp_path),
    ]) == 0
    report = json.loads((tmp_path / "report.json").read_text())
    for key in ("accuracy", "macro_precision", "macro_recall", "confusion"):
        assert key in report
    assert 0.0 <= report["accuracy"] <= 1.0


def test_select_writes_rationale_for_every_selected_sample(workspace, tmp_path):
    config = workspace / "config.json"
    assert main([
        "select", "--config", str(config),
        "--checkpoint", str(workspace / "model" / "checkpoint.json"),
        "--batch", str(workspace / "data" / "batch_0.jsonl"),
        "--out", str(tmp_path), "--budget", "0.5",
    ]) == 0
    rows = [json.loads(line) for line in
            (tmp_path / "coreset.jsonl").read_text().strip().splitlines()]
    selected = [r for r in rows if r["selected"]]
    assert all(r["rationale"] for r in selected)
    assert 0 < len(selected) <= len(rows)
    resolved = json.loads((tmp_path / "resolved_config.json").read_text())
    assert resolved["selection"]["budget_pct"] == 0.5
    metrics_rows = (tmp_path / "metrics.csv").read_text().strip().splitlines()
    assert metrics_rows[0] == "id,label,correct,dtw,mse,slack"
    assert len(metrics_rows) == 1 + len(rows)


def test_metric_and_layer_flags_override_config(workspace, tmp_path):
    assert main([
        "select", "--config", str(workspace / "config.json"),
        "--checkpoint", str(workspace / "model" / "checkpoint.json"),
        "--batch", str(workspace / "data" / "batch_0.jsonl"),
        "--out", str(tmp_path), "--metrics", "dtw,slack", "--layer", "0",
    ]) == 0
    resolved = json.loads((tmp_path / "resolved_config.json").read_text())
    assert resolved["selection"]["metrics"] == ["dtw", "slack"]
    assert resolved["selection"]["layer"] == 0


def _iterate(workspace, out_dir):
    return main([
        "iterate", "--config", str(workspace / "config.json"),
        "--checkpoint", str(workspace / "model" / "checkpoint.json"),
        "--test", str(workspace / "data" / "test.jsonl"),
        "--batch", str(workspace / "data" / "batch_0.jsonl"),
        "--batch", str(workspace / "data" / "batch_1.jsonl"),
        "--out", str(out_dir),
    ])


def test_iterate_writes_run_directory(workspace, tmp_path):
    assert _iterate(workspace, tmp_path) == 0
    stream = json.loads((tmp_path / "stream.json").read_text())
    assert stream["iteration_count"] == 2
    for k in range(2):
        for name in ("coreset.jsonl", "metrics.csv", "report.json", "checkpoint.json"):
            assert (tmp_path / f"iteration_{k}" / name).exists()


def test_iterate_runs_are_byte_identical(workspace, tmp_path):
    first = tmp_path / "a"
    second = tmp_path / "b"
    assert _iterate(workspace, first) == 0
    assert _iterate(workspace, second) == 0
    for rel in ("stream.json", "iteration_0/coreset.jsonl", "iteration_0/metrics.csv",
                "iteration_1/coreset.jsonl", "iteration_1/metrics.csv"):
        assert (first / rel).read_bytes() == (second / rel).read_bytes(), rel


def test_invalid_config_key_fails_before_writing(tmp_path):
    config = tmp_path / "bad.json"
    config.write_text(json.dumps({"trainning": {"epochs": 2}}))
    out = tmp_path / "out"
    code = main(["generate", "--config", str(config), "--out", str(out)])
    assert code == 2
    assert not out.exists()


def test_wrong_value_type_reports_key_path(tmp_path, capsys):
    config = tmp_path / "bad.json"
    config.write_text(json.dumps({"selection": {"budget_pct": "half"}}))
    code = main(["generate", "--config", str(config), "--out", str(tmp_path / "out")])
    captured = capsys.readouterr()
    assert code == 2
    assert "selection.budget_pct" in captured.err
    assert captured.err.startswith("ConfigError:")


def test_missing_input_file_is_io_error(workspace, tmp_path, capsys):
    code = main([
        "evaluate", "--checkpoint", str(tmp_path / "missing.json"),
        "--test", str(workspace / "data" / "test.jsonl"),
        "--out", str(tmp_path / "out"),
    ])
    captured = capsys.readouterr()
    assert code == 1
    assert captured.err.startswith("IoError:")
    assert not (tmp_path / "out").exists()


def test_zero_learning_rate_rejected_at_config_layer(tmp_path):
    config = tmp_path / "bad.json"
    config.write_text(json.dumps({"training": {"learning_rate": 0.0}}))
    code = main(["generate", "--config", str(config), "--out", str(tmp_path / "out")])
    assert code == 2
    assert not (tmp_path / "out").exists()


def test_console_entry_point_help():
    proc = subprocess.run(
        [sys.executable, "-m", "coreselect", "--help"], capture_output=True, text=True
    )
    assert proc.returncode == 0
    for command in ("generate", "train", "select", "iterate", "evaluate", "paradigm"):
        assert command in proc.stdout


def test_paradigm_command_writes_report(tmp_path):
    config = tmp_path / "config.json"
    config.write_text(json.dumps({
        "seed": 3,
        "paradigm": {"n_seeds": 1, "n_per_class": 10, "incoming_per_class": 6,
                     "budget_grid": [0.5]},
        "training": {"epochs": 2, "batch_size": 8},
        "fine_tuning": {"epochs": 2, "batch_size": 8},
    }))
    out = tmp_path / "out"
    assert main(["paradigm", "p4", "--config", str(config), "--out", str(out)]) == 0
    report = json.loads((out / "p4_report.json").read_text())
    assert report["paradigm"] == "p4"
    assert (out / "p4_curve.csv").exists()
    assert (out / "resolved_config.json").exists()
