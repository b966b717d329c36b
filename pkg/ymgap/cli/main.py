"""
CLI interface for the Yang-Mills workbench.

Commands: spectrum, scaling, converge, ellipticity, evolve, symbols, validate

Every experiment command takes flat key=value tokens, optionally
config=FILE, writes <out>/<run-id>.csv and .json and exits 0 on success,
1 on a runtime failure or a failed check, 2 on a usage error.
"""
import logging
from pathlib import Path
from typing import List, Optional

import typer
from rich.console import Console
from rich.logging import RichHandler
from rich.table import Table

from ymgap.app.engine import RunOutcome, run_experiment, write_reports
from ymgap.app.loader import load_run_config
from ymgap.app.models import ConfigError, Subcommand, YmgapError
from ymgap.app.validator import REPORT_SCHEMA_PATH, validate_report_file

app = typer.Typer(help="Yang-Mills mass-gap numerical workbench - CLI")
console = Console()

EXIT_RUNTIME = 1
EXIT_USAGE = 2
MAX_TABLE_ROWS = 30

TOKENS_HELP = "key=value overrides; config=FILE reads a flat key=value file"


def _configure_logging(verbose: bool) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=Console(stderr=True), show_path=False)],
        force=True,
    )


def _format_cell(value: object) -> str:
    if value is None:
        return "-"
    if isinstance(value, float):
        return f"{value:.10g}"
    return str(value)


def _print_outcome(subcommand: Subcommand, outcome: RunOutcome) -> None:
    table = Table(title=f"{subcommand.value} ({len(outcome.rows)} rows)")
    for column in outcome.columns:
        table.add_column(column, style="cyan" if column in ("n", "t", "L", "D") else None)
    for row in outcome.rows[:MAX_TABLE_ROWS]:
        table.add_row(*(_format_cell(row.get(column)) for column in outcome.columns))
    console.print(table)
    if len(outcome.rows) > MAX_TABLE_ROWS:
        console.print(f"[dim]... {len(outcome.rows) - MAX_TABLE_ROWS} more rows in the CSV report[/dim]")

    for key, value in outcome.summary.items():
        console.print(f"[yellow]{key}:[/yellow] {_format_cell(value)}")
    if outcome.passed is True:
        console.print("[green]✓ Check passed[/green]")
    elif outcome.passed is False:
        console.print("[red]✗ Check failed[/red]")


def _run(subcommand: Subcommand, tokens: Optional[List[str]], verbose: bool) -> None:
    _configure_logging(verbose)
    try:
        config = load_run_config(subcommand, tokens or [])
    except ConfigError as e:
        console.print(f"[red]Error: {e}[/red]")
        raise typer.Exit(EXIT_USAGE)

    try:
        outcome = run_experiment(config)
        csv_path, json_path = write_reports(config, outcome)
    except (YmgapError, ValueError, OSError) as e:
        console.print(f"[red]Error: {e}[/red]")
        raise typer.Exit(EXIT_RUNTIME)

    _print_outcome(subcommand, outcome)
    console.print(f"[dim]Report: {csv_path}[/dim]")
    console.print(f"[dim]Report: {json_path}[/dim]")
    if outcome.passed is False:
        raise typer.Exit(EXIT_RUNTIME)


@app.command()
def spectrum(
    args: Optional[List[str]] = typer.Argument(None, help=TOKENS_HELP),
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Debug logging"),
):
    """Lowest eigenvalues of the quantized Yang-Mills energy."""
    _run(Subcommand.SPECTRUM, args, verbose)


@app.command()
def scaling(
    args: Optional[List[str]] = typer.Argument(None, help=TOKENS_HELP),
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Debug logging"),
):
    """Eigenvalues times L across box sizes L_list."""
    _run(Subcommand.SCALING, args, verbose)


@app.command()
def converge(
    args: Optional[List[str]] = typer.Argument(None, help=TOKENS_HELP),
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Debug logging"),
):
    """Convergence in the degree cutoff D_list, and Galerkin monotonicity over subsets."""
    _run(Subcommand.CONVERGE, args, verbose)


@app.command()
def ellipticity(
    args: Optional[List[str]] = typer.Argument(None, help=TOKENS_HELP),
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Debug logging"),
):
    """Largest C with the energy operator bounded below by C times the number operator."""
    _run(Subcommand.ELLIPTICITY, args, verbose)


@app.command()
def evolve(
    args: Optional[List[str]] = typer.Argument(None, help=TOKENS_HELP),
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Debug logging"),
):
    """Classical RK4 evolution with energy and Gauss-constraint diagnostics."""
    _run(Subcommand.EVOLVE, args, verbose)


@app.command()
def symbols(
    args: Optional[List[str]] = typer.Argument(None, help=TOKENS_HELP),
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Debug logging"),
):
    """One operator in normal, Weyl and anti-normal symbols."""
    _run(Subcommand.SYMBOLS, args, verbose)


@app.command()
def validate(
    report: Path = typer.Argument(..., help="JSON report written by a run"),
    schema: Path = typer.Option(REPORT_SCHEMA_PATH, "--schema", help="Path to the report schema"),
):
    """Validate a JSON report against the report schema."""
    is_valid, errors = validate_report_file(report, schema)
    if not is_valid:
        console.print("[red]Validation errors:[/red]")
        for error in errors:
            console.print(f"  [red]•[/red] {error}")
        raise typer.Exit(EXIT_RUNTIME)
    console.print(f"[green]✓ {report} is valid[/green]")


if __name__ == "__main__":
    app()
