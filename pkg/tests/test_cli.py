import json

from plateau_mtm.cli import main

CONFIG = """
[target]
name = "pi4"

[sampler]
kind = "ap"

[run]
iterations = 60
repetitions = 2
seed = 4
metrics = ["act", "asjd"]
save_chains = true

[output]
directory = "{out}"
"""


def test_quantile_check_passes(capsys):
    assert main(["quantile-check"]) == 0
    out = capsys.readouterr().out
    assert "ok" in out and "FAIL" not in out


def test_run_missing_config_is_usage_error(capsys):
    assert main(["run", "missing.toml"]) == 2
    assert "not found" in capsys.readouterr().err


def test_unknown_subcommand_is_usage_error(capsys):
    assert main(["frobnicate"]) == 2


def test_unknown_study_is_usage_error(capsys):
    assert main(["reproduce", "bench-pi9"]) == 2


def test_run_and_diagnose_round_trip(tmp_path, capsys):
    out = tmp_path / "out"
    cfg_path = tmp_path / "cfg.toml"
    cfg_path.write_text(CONFIG.format(out=out))
    assert main(["run", str(cfg_path)]) == 0

    metrics = (out / "metrics.csv").read_bytes()
    summary = json.loads((out / "summary.json").read_text())
    assert summary["schema_version"] == 1
    assert summary["config"]["seed"] == 4

    recomputed = tmp_path / "recomputed.csv"
    chains = sorted(str(p) for p in (out / "chains").iterdir())
    assert main(["diagnose", *chains, "--out", str(recomputed)]) == 0
    assert recomputed.read_bytes() == metrics


def test_run_with_overrides(tmp_path):
    out = tmp_path / "base"
    cfg_path = tmp_path / "cfg.toml"
    cfg_path.write_text(CONFIG.format(out=out))
    override_out = tmp_path / "override"
    assert main(["run", str(cfg_path), "--seed", "9", "--reps", "1",
                 "--iters", "40", "--out", str(override_out)]) == 0
    summary = json.loads((override_out / "summary.json").read_text())
    assert summary["config"]["seed"] == 9
    assert summary["config"]["repetitions"] == 1
    assert summary["config"]["iterations"] == 40


def test_reproduce_study_flag_plumbing(tmp_path):
    out = tmp_path / "study"
    assert main(["reproduce", "hitting-varpi2", "--reps", "2", "--iters", "60",
                 "--seed", "7", "--out", str(out)]) == 0
    for label in ("ap", "ag2"):
        assert (out / label / "metrics.csv").exists()
        summary = json.loads((out / label / "summary.json").read_text())
        assert summary["config"]["seed"] == 7
        assert summary["config"]["repetitions"] == 2
    comparison = json.loads((out / "comparison.json").read_text())
    assert set(comparison["samplers"]) == {"ap", "ag2"}
