"""Typer CLI entry point for the rowhammer simulator."""

import sys
from enum import StrEnum
from pathlib import Path

import typer
from loguru import logger

from rowhammer_sim.config import ScenarioConfig
from rowhammer_sim.errors import ConfigError, CorpusError

app = typer.Typer(name="rowhammer-sim", help="Deterministic rowhammer attack and countermeasure simulator")

EXIT_MISMATCH = 1
EXIT_USAGE = 2


class OutputFormat(StrEnum):
    TABLE = "table"
    RECORDS = "records"


@app.callback()
def main(verbose: bool = typer.Option(False, "--verbose", "-v", help="Debug-level logging")) -> None:
    logger.remove()
    logger.add(sys.stderr, level="DEBUG" if verbose else "INFO")


def _load(config_path: Path, seed: int | None) -> ScenarioConfig:
    try:
        cfg = ScenarioConfig.from_toml(config_path)
    except OSError as e:
        typer.echo(f"cannot read {config_path}: {e}", err=True)
        raise typer.Exit(EXIT_USAGE) from e
    except ConfigError as e:
        typer.echo(f"{config_path}: {e}", err=True)
        raise typer.Exit(EXIT_USAGE) from e
    if seed is not None:
        cfg = cfg.model_copy(update={"seed": seed})
    return cfg


def _emit_runs(reports: list, fmt: OutputFormat, out: Path | None) -> None:
    from rowhammer_sim.report.render import VOLATILE_FIELDS, records, run_table, show
    from rowhammer_sim.utils.records import save_records

    if fmt is OutputFormat.RECORDS:
        typer.echo(records(reports), nl=False)
    else:
        show(run_table(reports))
    if out is not None:
        save_records(reports, out, exclude=VOLATILE_FIELDS)


SeedOption = typer.Option(None, "--seed", help="Override the config seed")
OutOption = typer.Option(None, "--out", "-o", help="Write results to this path")
FormatOption = typer.Option(OutputFormat.TABLE, "--format", "-f", help="table or records")


@app.command()
def run(
    config_paths: list[Path] = typer.Argument(..., help="Scenario TOML configs"),
    seed: int | None = SeedOption,
    out: Path | None = OutOption,
    fmt: OutputFormat = FormatOption,
    jobs: int = typer.Option(1, "--jobs", "-j", min=1, help="Scenarios run in parallel"),
    cache_trace: Path | None = typer.Option(None, "--cache-trace", help="CSV of cache hits and misses (single config)"),
) -> None:
    """Run scenarios end to end; exits 1 unless every attack succeeds."""
    from rowhammer_sim.runner import cache_trace as trace_run
    from rowhammer_sim.runner import run_batch

    configs = [_load(p, seed) for p in config_paths]
    reports = run_batch(configs, parallelism=jobs, progress=len(configs) > 1)
    _emit_runs(reports, fmt, out)
    if cache_trace is not None:
        if len(configs) != 1:
            typer.echo("--cache-trace takes exactly one config", err=True)
            raise typer.Exit(EXIT_USAGE)
        trace_run(configs[0]).to_csv(cache_trace, index=False)
        logger.info(f"Saved cache trace to {cache_trace}")
    logger.info("Run complete.")
    if not all(r.succeeded for r in reports):
        raise typer.Exit(EXIT_MISMATCH)


@app.command()
def feasibility(
    config_path: Path = typer.Argument(..., help="Scenario TOML config"),
    seed: int | None = SeedOption,
) -> None:
    """Check a technique combination against the feasibility rules."""
    cfg = _load(config_path, seed)
    from rowhammer_sim.attack.pipeline import assess_feasibility
    from rowhammer_sim.report.render import feasibility_table, show

    verdict = assess_feasibility(cfg)
    show(feasibility_table(cfg.name, verdict))
    logger.info(f"Feasibility of {cfg.name}: {'feasible' if verdict.feasible else 'infeasible'}")
    if not verdict.feasible:
        raise typer.Exit(EXIT_MISMATCH)


def _replicated(report, table, fmt: OutputFormat, out: Path | None) -> None:
    from rowhammer_sim.report.render import show
    from rowhammer_sim.utils.records import dump_records

    if fmt is OutputFormat.RECORDS:
        typer.echo(dump_records(report.rows), nl=False)
    else:
        show(table)
    if out is not None:
        report.save(out)
    if not report.matched:
        raise typer.Exit(EXIT_MISMATCH)


@app.command()
def table1(
    corpus: Path | None = typer.Option(None, "--corpus", help="Alternative scenario corpus directory"),
    out: Path | None = OutOption,
    fmt: OutputFormat = FormatOption,
) -> None:
    """Replicate the primitive matrix of historical attacks."""
    from rowhammer_sim.replication import replicate_table1
    from rowhammer_sim.report.render import table1_table

    try:
        report = replicate_table1(corpus)
    except CorpusError as e:
        typer.echo(str(e), err=True)
        raise typer.Exit(EXIT_MISMATCH) from e
    logger.info("Table 1 replication complete.")
    _replicated(report, table1_table(report), fmt, out)


@app.command()
def table2(
    corpus: Path | None = typer.Option(None, "--corpus", help="Alternative scenario corpus directory"),
    out: Path | None = OutOption,
    fmt: OutputFormat = FormatOption,
) -> None:
    """Replicate the countermeasure matrix."""
    from rowhammer_sim.replication import replicate_table2
    from rowhammer_sim.report.render import table2_table

    try:
        report = replicate_table2(corpus)
    except CorpusError as e:
        typer.echo(str(e), err=True)
        raise typer.Exit(EXIT_MISMATCH) from e
    logger.info("Table 2 replication complete.")
    _replicated(report, table2_table(report), fmt, out)


@app.command()
def expressive(
    config_path: Path = typer.Argument(..., help="Scenario TOML config with expressive_targets"),
    seed: int | None = SeedOption,
    out: Path | None = OutOption,
    fmt: OutputFormat = FormatOption,
) -> None:
    """Flip the attacker's UID on disk one bit per loop."""
    cfg = _load(config_path, seed)
    from rowhammer_sim.runner import run_expressive

    report = run_expressive(cfg)
    _emit_runs([report], fmt, out)
    for loop in report.outcome.loops:
        logger.info(f"loop {loop.index}: disk UID {loop.disk_field}")
    logger.info("Expressive attack complete.")
    if not report.succeeded:
        raise typer.Exit(EXIT_MISMATCH)


@app.command()
def sweep(
    config_path: Path = typer.Argument(..., help="Scenario TOML config"),
    param: str = typer.Option(..., "--param", help="Dotted config parameter, e.g. attack.budget"),
    value_range: str = typer.Option(..., "--range", help="start:stop[:step], stop inclusive"),
    seed: int | None = SeedOption,
    out: Path | None = typer.Option(None, "--out", "-o", help="CSV output path"),
) -> None:
    """Re-run a scenario over a range of one parameter and emit CSV."""
    cfg = _load(config_path, seed)
    from rowhammer_sim.runner import parse_range
    from rowhammer_sim.runner import sweep as run_sweep

    try:
        values = parse_range(value_range)
        frame = run_sweep(cfg, param, values)
    except (ValueError, KeyError, IndexError, ConfigError) as e:
        typer.echo(f"sweep {param}: {e}", err=True)
        raise typer.Exit(EXIT_USAGE) from e
    if out is not None:
        frame.to_csv(out, index=False)
        logger.info(f"Saved sweep to {out}")
    else:
        typer.echo(frame.to_csv(index=False), nl=False)
    logger.info("Sweep complete.")


if __name__ == "__main__":
    app()
