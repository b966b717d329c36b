"""Tests for the experiment engine and report files."""
import csv
import json
from pathlib import Path

import pytest

from ymgap import __version__
from ymgap.app.engine import (
    RunOutcome,
    format_symbol,
    render_csv,
    render_json,
    run_experiment,
    run_id_for,
    version_hash,
    write_reports,
)
from ymgap.app.models import AlgebraName, InitialData, RunConfig, Subcommand
from ymgap.app.symbols import PolySymbol


def test_symbols_demo():
    outcome = run_experiment(RunConfig(subcommand=Subcommand.SYMBOLS, D=3))
    assert outcome.passed
    assert [row["symbol"] for row in outcome.rows] == ["z*z + 1", "z*z + 1/2", "z*z"]
    assert outcome.rows[2]["diagonal"] == "1 2 3 4"


def test_format_symbol_with_several_modes():
    p = PolySymbol.monomial((1, 0), (0, 2), -0.5) + 3
    assert format_symbol(p) == "-1/2*z*0z1^2 + 3"
    assert format_symbol(PolySymbol.zero(2)) == "0"


def test_csv_is_deterministic(tmp_path: Path):
    config = RunConfig(subcommand=Subcommand.SYMBOLS, out=tmp_path)
    first = render_csv(config, run_experiment(config))
    second = render_csv(config, run_experiment(config))
    assert first == second
    assert f"# version_hash={version_hash()}" in first
    assert first.splitlines()[-4] == "ordering,symbol,diagonal"


def test_run_id_hashes_config():
    config = RunConfig(subcommand=Subcommand.SPECTRUM, D=3)
    assert run_id_for(config) == run_id_for(RunConfig(subcommand=Subcommand.SPECTRUM, D=3))
    assert run_id_for(config) != run_id_for(RunConfig(subcommand=Subcommand.SPECTRUM, D=4))
    assert run_id_for(config).startswith("spectrum-")
    assert run_id_for(RunConfig(subcommand=Subcommand.SPECTRUM, run_id="mine")) == "mine"


def test_version_hash():
    assert len(version_hash()) == 64
    assert version_hash(__version__) == version_hash()


def test_json_replaces_nan():
    config = RunConfig(subcommand=Subcommand.CONVERGE)
    outcome = RunOutcome(["D"], [{"D": 3}], None, {"last_rel_change": float("nan")})
    data = json.loads(render_json(config, outcome, "x"))
    assert data["summary"]["last_rel_change"] is None


def test_write_reports(tmp_path: Path):
    config = RunConfig(subcommand=Subcommand.SYMBOLS, out=tmp_path / "nested", run_id="demo")
    csv_path, json_path = write_reports(config, run_experiment(config))
    assert csv_path == tmp_path / "nested" / "demo.csv"
    data = json.loads(json_path.read_text(encoding="utf-8"))
    assert data["run_id"] == "demo" and data["passed"] is True
    assert "timings" in data and "timings" not in csv_path.read_text(encoding="utf-8")


def test_spectrum_outcome():
    config = RunConfig(subcommand=Subcommand.SPECTRUM, algebra=AlgebraName.SU2, kmax=0, D=2, k_eigs=2)
    outcome = run_experiment(config)
    assert outcome.passed
    assert outcome.summary["lambda_1"] == outcome.rows[0]["eigenvalue"]
    assert outcome.summary["basis_dim"] == 55


def test_converge_outcome_with_subsets():
    config = RunConfig(
        subcommand=Subcommand.CONVERGE,
        kmax=0,
        D=2,
        k_eigs=2,
        D_list=[1, 2],
        subsets=[[0, 1, 2], [0, 1, 2, 3, 4, 5]],
    )
    outcome = run_experiment(config)
    assert outcome.passed
    studies = {row["study"] for row in outcome.rows}
    assert studies == {"degree", "galerkin"}
    assert all(set(row) == set(outcome.columns) for row in outcome.rows)


def test_evolve_outcome_reports_plane_wave_error():
    config = RunConfig(
        subcommand=Subcommand.EVOLVE,
        algebra=AlgebraName.ABELIAN,
        N=8,
        dt=0.01,
        t_end=0.1,
        initial=InitialData.PLANE_WAVE,
    )
    outcome = run_experiment(config)
    assert outcome.columns == ["t", "energy", "constraint_residual"]
    assert outcome.summary["linf_error"] < 1e-8
    assert outcome.summary["energy_drift"] < 1e-6
    assert outcome.rows[-1]["t"] == pytest.approx(0.1)


def test_converge_csv_cells_are_plain_numbers():
    config = RunConfig(subcommand=Subcommand.CONVERGE, kmax=0, D=2, k_eigs=2, D_list=[1, 2, 3])
    text = render_csv(config, run_experiment(config))
    assert "np." not in text
    body = [line for line in text.splitlines() if not line.startswith("#")]
    rows = list(csv.DictReader(body))
    assert len(rows) == 6
    for row in rows:
        assert row.pop("study") == "degree"
        for value in row.values():
            if value:
                float(value)
    assert [row["rel_change"] == "" for row in rows] == [True, True, False, False, False, False]
