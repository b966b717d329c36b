"""Tests for schema validation of configurations and reports."""
import json
from pathlib import Path

from ymgap.app.engine import run_experiment, write_reports
from ymgap.app.models import RunConfig, Subcommand
from ymgap.app.validator import validate_config, validate_report_file


def test_valid_config():
    is_valid, errors = validate_config(
        {"subcommand": "spectrum", "algebra": "su2", "L": 1.0, "kmax": 0, "D": 3, "k_eigs": 2}
    )
    assert is_valid, errors


def test_invalid_config_lists_every_error():
    is_valid, errors = validate_config(
        {"subcommand": "spectrum", "algebra": "so5", "L": 1.0, "kmax": 0, "D": -1, "k_eigs": 2}
    )
    assert not is_valid
    assert len(errors) == 2


def test_missing_schema(tmp_path: Path):
    is_valid, errors = validate_config({"subcommand": "symbols"}, tmp_path / "none.json")
    assert not is_valid
    assert "Failed to load schema" in errors[0]


def test_written_report_is_valid(tmp_path: Path):
    config = RunConfig(subcommand=Subcommand.SYMBOLS, out=tmp_path, run_id="demo")
    _, json_path = write_reports(config, run_experiment(config))
    is_valid, errors = validate_report_file(json_path)
    assert is_valid, errors


def test_report_with_mismatched_rows(tmp_path: Path):
    config = RunConfig(subcommand=Subcommand.SYMBOLS, out=tmp_path, run_id="demo")
    _, json_path = write_reports(config, run_experiment(config))
    data = json.loads(json_path.read_text(encoding="utf-8"))
    data["rows"][0].pop("symbol")
    json_path.write_text(json.dumps(data), encoding="utf-8")
    is_valid, errors = validate_report_file(json_path)
    assert not is_valid
    assert any("do not match columns" in error for error in errors)


def test_report_not_json(tmp_path: Path):
    broken = tmp_path / "broken.json"
    broken.write_text("{not json", encoding="utf-8")
    is_valid, errors = validate_report_file(broken)
    assert not is_valid
    assert errors[0].startswith("Invalid JSON")
