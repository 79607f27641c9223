"""End-to-end tests of the command-line interface and its file artifacts."""

import json
import math
import subprocess
import sys

import numpy as np
import pandas as pd
import pytest

from collapse_lab.cli import main


def run_cli(*argv) -> int:
    return main([str(a) for a in argv])


def test_console_script_is_wired():
    proc = subprocess.run(
        [sys.executable, "-m", "collapse_lab.cli", "--version"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert "collapse-lab" in proc.stdout


# --- eraser ----------------------------------------------------------------


def test_eraser_writes_all_artifacts(tmp_path):
    code = run_cli("eraser", "--events", 20000, "--seed", 5, "--out", tmp_path)
    assert code == 0
    events = (tmp_path / "eraser_events.csv").read_text().splitlines()
    assert events[0] == "x_mm,idler,t_signal_ns,t_idler_ns,setup"
    assert len(events) == 20001
    hist = (tmp_path / "eraser_histogram.csv").read_text().splitlines()
    assert hist[0] == "bin_lo,bin_hi,counts_d3,counts_d4"
    curves = (tmp_path / "eraser_curves.csv").read_text().splitlines()
    assert curves[0] == "x,pdf_d3,pdf_d4,pdf_unconditional"
    assert len(curves) == 513
    metrics = json.loads((tmp_path / "eraser_metrics.json").read_text())
    assert metrics["setup"] == "eraser"
    assert metrics["fringes"]["visibility_d3"] > 0.9
    assert metrics["no_signaling"]["p_value"] > 0.01


def test_eraser_repeat_runs_are_byte_identical(tmp_path):
    for sub in ("a", "b"):
        assert run_cli("eraser", "--events", 10000, "--seed", 42, "--out", tmp_path / sub) == 0
    for name in ("eraser_events.csv", "eraser_histogram.csv", "eraser_metrics.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_eraser_whichpath_setup(tmp_path):
    code = run_cli(
        "eraser", "--setup", "whichpath", "--events", 50000, "--seed", 6, "--out", tmp_path
    )
    assert code == 0
    metrics = json.loads((tmp_path / "eraser_metrics.json").read_text())
    assert metrics["setup"] == "whichpath"
    assert metrics["fringes"]["visibility_d3"] < 0.05
    assert metrics["no_signaling"]["p_value"] > 0.01


def test_eraser_json_table_format(tmp_path):
    code = run_cli(
        "eraser", "--events", 5000, "--seed", 1, "--format", "json", "--out", tmp_path
    )
    assert code == 0
    hist = json.loads((tmp_path / "eraser_histogram.json").read_text())
    assert isinstance(hist, list)
    assert set(hist[0]) == {"bin_lo", "bin_hi", "counts_d3", "counts_d4"}
    # Event streams stay CSV regardless of the table format.
    assert (tmp_path / "eraser_events.csv").exists()
    assert not (tmp_path / "eraser_events.json").exists()


def test_seed_env_var_fallback(tmp_path, monkeypatch):
    monkeypatch.setenv("COLLAPSE_LAB_SEED", "77")
    assert run_cli("eraser", "--events", 3000, "--out", tmp_path / "env") == 0
    monkeypatch.delenv("COLLAPSE_LAB_SEED")
    assert run_cli("eraser", "--events", 3000, "--seed", 77, "--out", tmp_path / "flag") == 0
    assert (
        (tmp_path / "env" / "eraser_events.csv").read_bytes()
        == (tmp_path / "flag" / "eraser_events.csv").read_bytes()
    )


def test_config_file_precedence(tmp_path):
    config = tmp_path / "run.json"
    config.write_text(json.dumps({"events": 4000, "beta": 4.0, "seed": 3}))
    code = run_cli("eraser", "--config", config, "--beta", 6.0, "--out", tmp_path)
    assert code == 0
    metrics = json.loads((tmp_path / "eraser_metrics.json").read_text())
    assert metrics["events"] == 4000  # from config
    assert metrics["params"]["beta"] == 6.0  # flag wins over config
    assert metrics["seed"] == 3


def test_scan_range_configurable_via_config_file(tmp_path):
    config = tmp_path / "range.json"
    config.write_text(json.dumps({"x_min": -5.0, "x_max": 5.0, "events": 2000}))
    assert run_cli("eraser", "--config", config, "--seed", 2, "--out", tmp_path) == 0
    metrics = json.loads((tmp_path / "eraser_metrics.json").read_text())
    assert metrics["params"]["x_min"] == -5.0
    hist = pd.read_csv(tmp_path / "eraser_histogram.csv")
    assert hist.bin_lo.iloc[0] == -5.0
    assert hist.bin_hi.iloc[-1] == 5.0


def test_no_temp_files_left_behind(tmp_path):
    assert run_cli("eraser", "--events", 2000, "--seed", 1, "--out", tmp_path) == 0
    leftovers = [p.name for p in tmp_path.iterdir() if p.name.startswith(".")]
    assert leftovers == []


def test_unknown_config_keys_fail(tmp_path, capsys):
    config = tmp_path / "bad.json"
    config.write_text(json.dumps({"event_count": 10}))
    assert run_cli("eraser", "--config", config, "--out", tmp_path) == 1
    assert "unknown config keys" in capsys.readouterr().err


@pytest.mark.parametrize(
    "argv",
    [
        ("eraser", "--events", 0),
        ("eraser", "--bins", 1),
        ("eraser", "--alpha", -1.0),
        ("eraser", "--window-ns", 0),
        ("chain", "--epsilon", 1.5),
        ("chain", "--trajectories", -1),
        ("decohere", "--theta", 0.0),
        ("decohere", "--target", 0.9),
    ],
)
def test_invalid_flags_fail_before_writing(tmp_path, argv, capsys):
    out_dir = tmp_path / "should_stay_empty"
    assert run_cli(*argv, "--out", out_dir) == 1
    assert "error:" in capsys.readouterr().err
    assert not out_dir.exists() or not any(out_dir.iterdir())


# --- chain -----------------------------------------------------------------


def test_chain_outcomes_table(tmp_path):
    assert run_cli("chain", "--seed", 1, "--out", tmp_path) == 0
    table = pd.read_csv(tmp_path / "chain_outcomes.csv")
    assert list(table.columns) == [
        "dynamics",
        "epsilon",
        "purity",
        "coherence",
        "visibility",
        "trace_distance_vs_linear",
    ]
    linear = table[table.dynamics == "linear"].iloc[0]
    collapse = table[table.dynamics == "collapse"].iloc[0]
    assert linear.purity == pytest.approx(1.0, abs=1e-10)
    assert collapse.purity == pytest.approx(0.5, abs=1e-10)
    assert collapse.trace_distance_vs_linear == pytest.approx(0.5, abs=1e-10)
    sweep = table[table.dynamics == "reset_sweep"]
    assert len(sweep) == 6
    np.testing.assert_allclose(
        sweep.coherence, 0.5 * sweep.epsilon**2, atol=1e-10
    )


def test_chain_with_zero_epsilon_hides_collapse(tmp_path):
    assert run_cli("chain", "--epsilon", 0.0, "--seed", 1, "--out", tmp_path) == 0
    table = pd.read_csv(tmp_path / "chain_outcomes.csv")
    linear = table[table.dynamics == "linear"].iloc[0]
    collapse = table[table.dynamics == "collapse"].iloc[0]
    for column in ("purity", "coherence", "visibility", "trace_distance_vs_linear"):
        assert linear[column] == pytest.approx(collapse[column], abs=1e-10)


def test_chain_trajectories(tmp_path):
    assert run_cli(
        "chain", "--trajectories", 10000, "--seed", 7, "--out", tmp_path
    ) == 0
    metrics = json.loads((tmp_path / "chain_metrics.json").read_text())
    frequency = metrics["trajectories"]["frequency_branch_a"]
    assert 0.485 <= frequency <= 0.515
    assert metrics["trajectories"]["distance_mean_vs_channel"] < 0.02
    table = pd.read_csv(tmp_path / "chain_outcomes.csv")
    assert "trajectory_mean" in set(table.dynamics)


# --- decohere ---------------------------------------------------------------


def test_decohere_sweep_and_report(tmp_path):
    assert run_cli("decohere", "--theta", 0.2, "--target", 1e-6, "--out", tmp_path) == 0
    sweep = pd.read_csv(tmp_path / "decoherence_sweep.csv")
    assert list(sweep.columns) == ["n", "theta", "coherence", "trace_distance_to_collapse"]
    assert len(sweep) == 652
    assert sweep.trace_distance_to_collapse.is_monotonic_decreasing
    report = json.loads((tmp_path / "fapp_report.json").read_text())
    assert report["minimal_n"] == 652


def test_decohere_full_tensor_cross_check(tmp_path):
    assert run_cli(
        "decohere", "--mode", "full-tensor", "--n", 8, "--theta", 0.2, "--out", tmp_path
    ) == 0
    report = json.loads((tmp_path / "fapp_report.json").read_text())
    assert report["cross_check"]["n"] == 8
    assert report["cross_check"]["max_abs_difference"] <= 1e-10
    assert report["cross_check"]["within_tolerance"] is True


def test_decohere_rejects_oversized_full_tensor(tmp_path, capsys):
    assert run_cli(
        "decohere", "--mode", "full-tensor", "--n", 13, "--out", tmp_path / "x"
    ) == 1
    assert "n <= 12" in capsys.readouterr().err


# --- check ------------------------------------------------------------------


def test_check_runs_every_criterion(tmp_path, capsys):
    code = run_cli("check", "--out", tmp_path)
    lines = capsys.readouterr().out.splitlines()
    pass_lines = [line for line in lines if line.startswith(("PASS", "FAIL"))]
    assert len(pass_lines) == 10
    assert code == 0
    assert all(line.startswith("PASS") for line in pass_lines)
    report = json.loads((tmp_path / "acceptance_report.json").read_text())
    assert report["passed"] is True
    assert len(report["criteria"]) == 10
