"""
Experiment engine.

Runs one configured experiment and writes its report files. The CSV report
is the canonical artifact and carries no timings, so identical config and
seed give byte-identical CSV output; the JSON report mirrors it and adds
timings.
"""
import csv
import hashlib
import io
import json
import logging
import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Callable, Dict, List, Optional, Tuple

from ymgap import __version__
from ymgap.app.dynamics import (
    TRAJECTORY_COLUMNS,
    evolve,
    max_field_error,
    plane_wave_state,
    random_state,
    relative_drift,
)
from ymgap.app.fock import enumerate_basis
from ymgap.app.models import InitialData, OrderingTag, RunConfig, Subcommand
from ymgap.app.quantize import quantize
from ymgap.app.spectra import (
    ResultTable,
    degree_convergence,
    galerkin_monotonicity,
    scaling_study,
    ym_ellipticity,
    ym_spectrum,
)
from ymgap.app.symbols import PolySymbol, convert_ordering
from ymgap.app.yangmills import make_algebra

logger = logging.getLogger(__name__)

NONNEGATIVE_SLACK = 1e-9


@dataclass
class RunOutcome:
    """
    Everything a subcommand produces.

    Attributes:
        columns: CSV column order
        rows: Table rows
        passed: Verdict of the experiment's own check, None if it has none
        summary: Headline figures for the console and the JSON report
        timings: Wall-clock seconds per stage (JSON only)
    """
    columns: List[str]
    rows: List[Dict[str, object]]
    passed: Optional[bool] = None
    summary: Dict[str, object] = field(default_factory=dict)
    timings: Dict[str, float] = field(default_factory=dict)

    @classmethod
    def from_table(cls, table: ResultTable, timings: Optional[Dict[str, float]] = None) -> "RunOutcome":
        return cls(table.columns, table.rows, table.passed, dict(table.summary), dict(timings or {}))


def version_hash(version: str = __version__) -> str:
    """sha256 of the code version string."""
    return hashlib.sha256(version.encode("utf-8")).hexdigest()


def run_id_for(config: RunConfig) -> str:
    """Explicit run_id, or subcommand plus a hash of the resolved config."""
    if config.run_id:
        return config.run_id
    data = config.to_flat_dict()
    data.pop("out", None)
    data.pop("run_id", None)
    digest = hashlib.sha256(json.dumps(data, sort_keys=True).encode("utf-8")).hexdigest()
    return f"{config.subcommand.value}-{digest[:12]}"


def run_spectrum(config: RunConfig) -> RunOutcome:
    report = ym_spectrum(config)
    values = report.eigenvalues
    summary = {
        "lambda_1": values[0],
        "lambda_2": values[1] if len(values) > 1 else None,
        "gap_bottom": report.gap_bottom,
        "gap_first": report.gap_first,
        "min_eigenvalue": min(values),
        "basis_dim": report.basis_dim,
    }
    rows = report.rows()
    return RunOutcome(
        columns=list(rows[0]),
        rows=rows,
        passed=min(values) >= -NONNEGATIVE_SLACK,
        summary=summary,
        timings=report.timings,
    )


def run_scaling(config: RunConfig) -> RunOutcome:
    start = time.perf_counter()
    table = scaling_study(config, config.L_list)
    return RunOutcome.from_table(table, {"total": time.perf_counter() - start})


def run_converge(config: RunConfig) -> RunOutcome:
    """Degree-cutoff convergence, plus Galerkin monotonicity when subsets are given."""
    start = time.perf_counter()
    degree = degree_convergence(config, config.D_list)
    rows = [{"study": "degree", **row} for row in degree.rows]
    columns = ["study"] + degree.columns
    summary = dict(degree.summary)
    passed = None
    if config.subsets:
        galerkin = galerkin_monotonicity(config, config.subsets)
        rows += [{"study": "galerkin", "D": config.D, **row} for row in galerkin.rows]
        columns += [c for c in galerkin.columns if c not in columns]
        summary.update(galerkin.summary)
        passed = galerkin.passed
    rows = [{column: row.get(column) for column in columns} for row in rows]
    return RunOutcome(columns, rows, passed, summary, {"total": time.perf_counter() - start})


def run_ellipticity(config: RunConfig) -> RunOutcome:
    start = time.perf_counter()
    table = ym_ellipticity(config)
    return RunOutcome.from_table(table, {"total": time.perf_counter() - start})


def run_evolve(config: RunConfig) -> RunOutcome:
    """RK4 trajectory with energy and constraint diagnostics."""
    algebra = make_algebra(config.algebra)
    if config.initial == InitialData.PLANE_WAVE:
        state = plane_wave_state(config.N, config.L, algebra, amplitude=config.amplitude)
    else:
        state = random_state(config.N, config.L, algebra, seed=config.seed, amplitude=config.amplitude)

    start = time.perf_counter()
    final, rows = evolve(state, config.dt, config.t_end, config.record_every)
    timings = {"evolve": time.perf_counter() - start}

    energies = [row["energy"] for row in rows]
    residuals = [row["constraint_residual"] for row in rows]
    summary: Dict[str, object] = {
        "energy_drift": relative_drift(energies),
        "constraint_initial": residuals[0],
        "constraint_final": residuals[-1],
        "constraint_max": max(residuals),
    }
    if config.initial == InitialData.PLANE_WAVE and algebra.is_abelian:
        exact = plane_wave_state(config.N, config.L, algebra, amplitude=config.amplitude, t=final.t)
        summary["linf_error"] = max_field_error(final, exact)
    return RunOutcome(list(TRAJECTORY_COLUMNS), rows, None, summary, timings)


def format_symbol(p: PolySymbol) -> str:
    """Readable single-line rendering, highest degree first."""
    if p.is_zero():
        return "0"
    single = p.n_modes == 1

    def power(name: str, j: int, e: int) -> str:
        base = name if single else f"{name}{j}"
        return base if e == 1 else f"{base}^{e}"

    parts = []
    ordered = sorted(p.terms.items(), key=lambda kv: (-(sum(kv[0][0]) + sum(kv[0][1])), kv[0]))
    for (beta, alpha), coeff in ordered:
        factors = [power("z*", j, e) for j, e in enumerate(beta) if e]
        factors += [power("z", j, e) for j, e in enumerate(alpha) if e]
        monomial = "".join(factors)
        text = str(Fraction(coeff).limit_denominator(10**6)) if not isinstance(coeff, complex) else repr(coeff)
        if monomial:
            parts.append(monomial if text == "1" else f"{text}*{monomial}")
        else:
            parts.append(text)
    return " + ".join(parts).replace("+ -", "- ")


def run_symbols(config: RunConfig) -> RunOutcome:
    """
    Ordering demo: the operator a a^dagger in all three orderings.

    Its anti-normal symbol is z*z; converting gives z*z + 1/2 (Weyl) and
    z*z + 1 (normal). Each is quantized in its own ordering on a one-mode
    basis and the diagonals must agree.
    """
    antinormal = PolySymbol.monomial((1,), (1,))
    basis = enumerate_basis(1, config.D)
    rows = []
    diagonals = []
    for tag in (OrderingTag.NORMAL, OrderingTag.WEYL, OrderingTag.ANTINORMAL):
        symbol = convert_ordering(antinormal, OrderingTag.ANTINORMAL, tag)
        diagonal = quantize(symbol, tag, basis).toarray().diagonal().real
        diagonals.append(diagonal)
        rows.append(
            {
                "ordering": tag.value,
                "symbol": format_symbol(symbol),
                "diagonal": " ".join(f"{value:g}" for value in diagonal),
            }
        )
    passed = all(max(abs(a - b) for a, b in zip(diagonals[0], d)) < 1e-12 for d in diagonals)
    return RunOutcome(["ordering", "symbol", "diagonal"], rows, passed, {"D": config.D})


RUNNERS: Dict[Subcommand, Callable[[RunConfig], RunOutcome]] = {
    Subcommand.SPECTRUM: run_spectrum,
    Subcommand.SCALING: run_scaling,
    Subcommand.CONVERGE: run_converge,
    Subcommand.ELLIPTICITY: run_ellipticity,
    Subcommand.EVOLVE: run_evolve,
    Subcommand.SYMBOLS: run_symbols,
}


def run_experiment(config: RunConfig) -> RunOutcome:
    """Dispatch a resolved config to its experiment."""
    logger.info("Running %s", config.subcommand.value)
    return RUNNERS[config.subcommand](config)


def _csv_value(value: object) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        # numpy float64 subclasses float but reprs as np.float64(...)
        return repr(float(value))
    return str(value)


def _json_value(value: object) -> object:
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, dict):
        return {k: _json_value(v) for k, v in value.items()}
    if isinstance(value, list):
        return [_json_value(v) for v in value]
    return value


def render_csv(config: RunConfig, outcome: RunOutcome) -> str:
    """
    CSV text: '#' header lines with the resolved config and version hash,
    then the table.
    """
    buffer = io.StringIO()
    for key, value in sorted(config.to_flat_dict().items()):
        buffer.write(f"# {key}={json.dumps(value)}\n")
    buffer.write(f"# version={__version__}\n")
    buffer.write(f"# version_hash={version_hash()}\n")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(outcome.columns)
    for row in outcome.rows:
        writer.writerow([_csv_value(row.get(column)) for column in outcome.columns])
    return buffer.getvalue()


def render_json(config: RunConfig, outcome: RunOutcome, run_id: str) -> str:
    document = {
        "run_id": run_id,
        "subcommand": config.subcommand.value,
        "config": config.to_flat_dict(),
        "version": __version__,
        "version_hash": version_hash(),
        "columns": outcome.columns,
        "rows": outcome.rows,
        "passed": outcome.passed,
        "summary": outcome.summary,
        "timings": outcome.timings,
    }
    return json.dumps(_json_value(document), indent=2, sort_keys=True) + "\n"


def write_reports(config: RunConfig, outcome: RunOutcome) -> Tuple[Path, Path]:
    """
    Write <out>/<run-id>.csv and <out>/<run-id>.json.

    Returns:
        Tuple of (csv_path, json_path)
    """
    run_id = run_id_for(config)
    out_dir = Path(config.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / f"{run_id}.csv"
    json_path = out_dir / f"{run_id}.json"
    csv_path.write_text(render_csv(config, outcome), encoding="utf-8")
    json_path.write_text(render_json(config, outcome, run_id), encoding="utf-8")
    logger.info("Wrote %s and %s", csv_path, json_path)
    return csv_path, json_path
