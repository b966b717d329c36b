"""Tests for the command-line interface."""
import json
from pathlib import Path

from typer.testing import CliRunner

from ymgap.cli.main import EXIT_RUNTIME, EXIT_USAGE, app

runner = CliRunner()


def test_symbols_writes_reports(tmp_path: Path):
    result = runner.invoke(app, ["symbols", f"out={tmp_path}", "run_id=demo"])
    assert result.exit_code == 0, result.output
    assert (tmp_path / "demo.csv").exists()
    assert (tmp_path / "demo.json").exists()
    assert "z*z + 1/2" in result.output


def test_spectrum_prints_gaps(tmp_path: Path):
    args = ["spectrum", "algebra=su2", "L=1", "kmax=0", "D=2", "k_eigs=2", f"out={tmp_path}"]
    result = runner.invoke(app, args)
    assert result.exit_code == 0, result.output
    assert "lambda_1" in result.output
    assert "gap_first" in result.output


def test_missing_key_is_usage_error(tmp_path: Path):
    result = runner.invoke(app, ["spectrum", "algebra=su2", "L=1", f"out={tmp_path}"])
    assert result.exit_code == EXIT_USAGE
    assert "Missing required config key" in result.output


def test_malformed_token_is_usage_error():
    result = runner.invoke(app, ["evolve", "bogus"])
    assert result.exit_code == EXIT_USAGE


def test_runtime_failure(tmp_path: Path):
    args = ["converge", "algebra=su2", "L=1", "kmax=0", "k_eigs=1", "D_list=1", "subsets=0,1;2,3"]
    result = runner.invoke(app, args + [f"out={tmp_path}"])
    assert result.exit_code == EXIT_RUNTIME


def test_validate_command(tmp_path: Path):
    runner.invoke(app, ["symbols", f"out={tmp_path}", "run_id=demo"])
    report = tmp_path / "demo.json"
    assert runner.invoke(app, ["validate", str(report)]).exit_code == 0

    data = json.loads(report.read_text(encoding="utf-8"))
    data["version_hash"] = "not-a-hash"
    report.write_text(json.dumps(data), encoding="utf-8")
    result = runner.invoke(app, ["validate", str(report)])
    assert result.exit_code == EXIT_RUNTIME
    assert "Validation errors" in result.output
