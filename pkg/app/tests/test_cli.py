"""Tests for the command-line application and run persistence"""

import csv
import json

import pytest

import app.commands.diagnostics as diagnostics_command
from app.main import main
from app.services.records import TRIAL_COLUMNS, replay
from app.utils.errors import CHECK_FAILED_EXIT_CODE, SchemaError


@pytest.fixture
def degree_one_run(tmp_path):
    """A tiny cns run whose count is exactly 2 per trial"""
    out = tmp_path / "run1"
    code = main(["cns", "--degrees", "1", "--trials", "50", "--seed", "7", "--threads", "1", "--out", str(out)])
    assert code == 0
    return out


def test_cns_run_writes_artifacts(tmp_path):
    """trials.csv, summary.json, config.txt and the plot are written"""
    out = tmp_path / "cns"
    assert main(["cns", "--degrees", "6,10", "--trials", "50", "--seed", "7", "--threads", "2",
                 "--out", str(out)]) == 0
    with open(out / "trials.csv", newline="") as handle:
        rows = list(csv.DictReader(handle))
    assert list(rows[0].keys()) == TRIAL_COLUMNS
    assert len(rows) == 100
    assert rows[0]["count_contained"] == "" and rows[0]["runtime_ms"] == ""
    summary = json.loads((out / "summary.json").read_text())
    assert summary["schema_version"] == "1"
    assert summary["config_hash"] == rows[0]["config_hash"]
    assert set(summary["cns"]) >= {"estimate", "se", "ci_low", "ci_high", "n_trials", "checks"}
    assert summary["config_hash"] in (out / "cns.svg").read_text()


def test_check_flag_turns_failures_into_exit_code(tmp_path, degree_one_run):
    """Degree 1 gives count / n^2 = 2, above the Pleijel bound"""
    summary = json.loads((degree_one_run / "summary.json").read_text())
    assert summary["cns"]["estimate"] == 2.0
    failed = {c["name"] for c in summary["cns"]["checks"] if not c["pass"]}
    assert "pleijel_upper_bound" in failed
    code = main(["cns", "--degrees", "1", "--trials", "50", "--check", "--out", str(tmp_path / "checked")])
    assert code == CHECK_FAILED_EXIT_CODE


def test_replay_is_byte_identical(degree_one_run, capsys):
    """Replaying a run reproduces summary.json exactly"""
    summary, identical = replay(str(degree_one_run))
    assert identical
    assert "integrity_warning" not in summary
    assert main(["replay", str(degree_one_run)]) == 0
    assert '"schema_version": "1"' in capsys.readouterr().out


def test_replay_detects_truncation(degree_one_run):
    """A trial table missing rows is a schema error"""
    path = degree_one_run / "trials.csv"
    lines = path.read_text().splitlines(keepends=True)
    path.write_text("".join(lines[:-5]))
    with pytest.raises(SchemaError):
        replay(str(degree_one_run))
    assert main(["replay", str(degree_one_run)]) == SchemaError.exit_code


def test_replay_flags_config_tamper(degree_one_run):
    """A config that no longer matches the recorded hash is flagged, not refused"""
    path = degree_one_run / "config.txt"
    path.write_text(path.read_text().replace("M = 1024", "M = 2048"))
    summary, identical = replay(str(degree_one_run))
    assert "integrity_warning" in summary
    assert not identical


def test_replay_detects_extras_tamper(degree_one_run):
    """Edited extras fail their digest"""
    path = degree_one_run / "extras.json"
    extras = json.loads(path.read_text())
    extras["n_records"] = 7
    extras["entries"]["bogus"] = {}
    path.write_text(json.dumps(extras))
    with pytest.raises(SchemaError):
        replay(str(degree_one_run))


def test_json_trial_format_replays(tmp_path):
    """--format json writes trials.json and replays identically"""
    out = tmp_path / "json"
    assert main(["cns", "--degrees", "1", "--trials", "50", "--format", "json", "--out", str(out)]) == 0
    assert (out / "trials.json").exists()
    assert replay(str(out))[1]


def test_universality_rerun_reproduces_trials(tmp_path):
    """Same master seed, same trials.csv bytes"""
    args = ["universality", "--n", "5", "--trials", "200", "--seed", "11"]
    assert main(args + ["--out", str(tmp_path / "a")]) == 0
    assert main(args + ["--out", str(tmp_path / "b"), "--threads", "3"]) == 0
    assert (tmp_path / "a" / "trials.csv").read_bytes() == (tmp_path / "b" / "trials.csv").read_bytes()
    summary = json.loads((tmp_path / "a" / "summary.json").read_text())
    assert summary["universality"]["checks"][0]["name"] == "zero_in_ci"


def test_config_file_with_overrides(tmp_path):
    """File values apply and flags win over them"""
    config = tmp_path / "run.conf"
    config.write_text("# small run\nexperiment = cns\ndegrees = 1\ntrials = 60\nseed = 3\n")
    out = tmp_path / "conf"
    assert main(["cns", "--config", str(config), "--trials", "50", "--out", str(out)]) == 0
    written = (out / "config.txt").read_text()
    assert "trials = 50" in written and "seed = 3" in written


def test_error_exit_codes(tmp_path):
    """Unknown command, bad oversample and unwritable output have distinct codes"""
    assert main(["frobnicate"]) == 8
    assert main(["cns", "--q", "3", "--out", str(tmp_path / "q")]) == 3
    blocker = tmp_path / "blocker"
    blocker.write_text("")
    assert main(["cns", "--degrees", "1", "--trials", "50", "--out", str(blocker / "sub")]) == 7
    assert main(["replay", str(tmp_path / "missing")]) == SchemaError.exit_code


def test_demo_basis_command(tmp_path, capsys):
    """Reports both exact supports"""
    out = tmp_path / "demo"
    assert main(["demo-basis", "--n", "5", "--trials", "1000", "--seed", "3", "--check", "--out", str(out)]) == 0
    printed = capsys.readouterr().out
    assert "[-1.0, 1.0]" in printed
    summary = json.loads((out / "summary.json").read_text())
    assert summary["demo-basis"]["details"]["rotated_support"][1] == 0.0


def test_clt_and_diagnostics_commands(tmp_path):
    """Non-trial experiments keep their results in extras and replay them"""
    clt = tmp_path / "clt"
    assert main(["clt", "--degrees", "1,8", "--samples", "1000", "--out", str(clt)]) == 0
    assert (clt / "clt.svg").exists()
    assert replay(str(clt))[1]

    diag = tmp_path / "diag"
    assert main(["diagnostics", "--which", "l4", "--degrees", "4,8", "--out", str(diag)]) == 0
    summary = json.loads((diag / "summary.json").read_text())
    assert summary["l4"]["details"]["degrees"] == [4, 8]


def test_rwm_command(tmp_path):
    """Planar campaign plus covariance and Gaussianity entries"""
    out = tmp_path / "rwm"
    assert main(["rwm", "--radii", "5,10", "--trials", "4", "--M", "64", "--samples", "200", "--out", str(out)]) == 0
    summary = json.loads((out / "summary.json").read_text())
    assert {"rwm", "rwm-covariance", "rwm-gaussianity"} <= set(summary)
    assert summary["rwm"]["details"]["radii"] == [5.0, 10.0]
    assert "covariance_isotropic" in {c["name"] for c in summary["rwm-covariance"]["checks"]}
    assert replay(str(out))[1]


def test_diagnostics_all_keeps_finished_entries(tmp_path, monkeypatch):
    """An invalid diagnostic in an `all` run is recorded as failed; the others are kept"""
    monkeypatch.setattr(diagnostics_command, "WHICH", ("l4", "semilocal"))
    out = tmp_path / "all"
    args = ["diagnostics", "--which", "all", "--degrees", "4,8", "--n", "20", "--centers", "100", "--out", str(out)]
    assert main(args) == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["l4"]["details"]["degrees"] == [4, 8]
    assert summary["semilocal"]["checks"] == [
        {"name": "semilocal_configured", "pass": False, "value": None, "threshold": None}
    ]
    assert summary["semilocal"]["details"]["exit_code"] == 3
    assert replay(str(out))[1]
    assert main(args[:-1] + [str(tmp_path / "checked"), "--check"]) == CHECK_FAILED_EXIT_CODE
    assert main(["diagnostics", "--which", "semilocal", "--n", "20", "--centers", "100",
                 "--out", str(tmp_path / "single")]) == 3


def test_semilocal_runs_beyond_patch_margin(tmp_path):
    """R/n above 0.1 is accepted for semi-locality"""
    out = tmp_path / "semi"
    assert main(["diagnostics", "--which", "semilocal", "--n", "40", "--radii", "10,20", "--threads", "2",
                 "--out", str(out)]) == 0
    reports = json.loads((out / "summary.json").read_text())["semilocal"]["details"]["reports"]
    assert [r["R"] for r in reports] == [10.0, 20.0]
    assert all(r["discrepancy"] < 4.0 for r in reports)
