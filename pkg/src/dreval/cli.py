"""Command line interface for dreval."""

import json
from collections.abc import Callable
from pathlib import Path
from typing import Any
from uuid import UUID, uuid4

import click
import yaml
from rich.console import Console
from rich.table import Table

from .app import DrevalApp
from .audit import AuditLog
from .config import Mode, load_config, read_config_data
from .errors import ConfigError, DrevalError
from .experiments import RunOutputs
from .logging import RunLogger, create_run_logger
from .report import load_outputs

AUDIT_FILE = "audit.jsonl"

app = DrevalApp()
console = Console()


def summary_table(outputs: RunOutputs) -> Table:
    """Rich rendering of a run's estimator summaries (or its first table)."""
    table = Table(title=f"dreval {outputs.mode} (seed {outputs.seed})")
    if outputs.summaries:
        for column in ("method", "bias", "rmse", "± 95%", "std", "n", "failed"):
            table.add_column(column, justify="left" if column == "method" else "right")
        for s in outputs.summaries:
            table.add_row(
                s.method,
                f"{s.bias:.4f}",
                f"{s.rmse:.4f}",
                f"{s.rmse_ci:.4f}",
                f"{s.std:.4f}",
                str(s.n_replicates),
                str(s.n_failed),
            )
        return table
    rows = next(
        (rows for name, rows in sorted(outputs.tables.items()) if name != "replicates"), []
    )
    if rows:
        for column in rows[0]:
            table.add_column(str(column))
        for row in rows:
            table.add_row(*(f"{v:.4f}" if isinstance(v, float) else str(v) for v in row.values()))
    return table


RUN_OPTIONS = [
    click.option("--config", "config_path", type=click.Path(path_type=Path), help="YAML or JSON config file"),
    click.option("--set", "overrides", multiple=True, metavar="KEY=VALUE", help="Override a config key (repeatable)"),
    click.option("--seed", type=int, help="Master seed"),
    click.option("--workers", type=int, help="Replicates run concurrently in this many processes"),
    click.option("--out", type=click.Path(path_type=Path), help="Output directory"),
    click.option("--replicates", type=int, help="Replicate count (defaults per mode)"),
]


def run_options(func: Callable) -> Callable:
    """Options shared by every protocol command."""
    for option in reversed(RUN_OPTIONS):
        func = option(func)
    return func


def _overrides(
    overrides: tuple[str, ...],
    seed: int | None,
    workers: int | None,
    out: Path | None,
    replicates: int | None,
) -> list[str]:
    flags = {"seed": seed, "workers": workers, "out": out, "replicates": replicates}
    extra = [
        f"{key}={json.dumps(str(value) if key == 'out' else value)}"
        for key, value in flags.items()
        if value is not None
    ]
    return [*overrides, *extra]


def _fail(
    ctx: click.Context,
    audit_log: AuditLog,
    run_id: UUID,
    stage: str,
    error: Exception,
    logger: RunLogger | None = None,
) -> None:
    exit_code = error.exit_code if isinstance(error, DrevalError) else 1
    message = str(error)
    click.echo(f"ERROR: {message}", err=True)
    if logger:
        logger.error(f"{stage} failed", error=error)
    audit_log.log_event(
        f"{stage}_error",
        run_id,
        message,
        details={"error_type": type(error).__name__, "exit_code": exit_code},
        stage=stage,
        event="error",
        level="error",
    )
    audit_log.save()
    ctx.exit(exit_code)


def _run_protocol(
    ctx: click.Context,
    mode: Mode,
    config_path: Path | None,
    overrides: tuple[str, ...],
    seed: int | None,
    workers: int | None,
    out: Path | None,
    replicates: int | None,
) -> None:
    root = ctx.obj
    run_id = uuid4()
    try:
        config = load_config(
            config_path, _overrides(overrides, seed, workers, out, replicates), mode
        )
    except (DrevalError, OSError) as e:
        fallback = AuditLog((out or Path("out")) / AUDIT_FILE)
        _fail(ctx, fallback, run_id, mode.value, e)
        return

    audit_log = AuditLog(config.out / AUDIT_FILE)
    logger = create_run_logger(
        run_id=run_id, log_level=root["log_level"], log_file=root["log_file"]
    )
    audit_log.log_event(
        "run_start",
        run_id,
        f"Starting {mode.value}",
        details={"seed": config.seed, "replicates": config.n_replicates},
        stage=mode.value,
        event="start",
    )
    try:
        outputs, manifest = app.run_and_report(config, logger)
    except (DrevalError, OSError) as e:
        _fail(ctx, audit_log, run_id, mode.value, e, logger)
        return

    console.print(summary_table(outputs))
    click.echo(f"[OUTPUT] {len(manifest.artifacts)} files written to {config.out}")
    audit_log.log_event(
        "run_success",
        run_id,
        f"{mode.value} completed",
        details={"config_hash": outputs.config_hash, "tables": sorted(outputs.tables)},
        stage=mode.value,
        event="success",
    )
    audit_log.save()


@click.group()
@click.version_option(package_name="dreval")
@click.option("--log-level", type=click.Choice(["DEBUG", "INFO", "WARNING", "ERROR"]), default="WARNING", help="Logging verbosity level")
@click.option("--log-file", type=click.Path(path_type=Path), help="Optional log file path")
@click.pass_context
def main(ctx: click.Context, log_level: str, log_file: Path | None) -> None:
    """dreval - doubly robust off-policy evaluation experiments."""
    ctx.ensure_object(dict)
    ctx.obj["log_level"] = log_level
    ctx.obj["log_file"] = log_file


@main.command()
@click.argument("config_path", type=click.Path(path_type=Path))
@click.option("--set", "overrides", multiple=True, metavar="KEY=VALUE", help="Override a config key (repeatable)")
@click.pass_context
def validate(ctx: click.Context, config_path: Path, overrides: tuple[str, ...]) -> None:
    """Validate an experiment config against its model and JSON schema."""
    run_id = uuid4()
    audit_log = AuditLog(config_path.parent / AUDIT_FILE)
    click.echo(f"[VALIDATE] Validating config: {config_path}")
    audit_log.log_event(
        "validation_start",
        run_id,
        f"Starting validation of {config_path}",
        stage="validation",
        event="start",
    )

    if not config_path.exists():
        _fail(ctx, audit_log, run_id, "validation", ConfigError(f"File not found: {config_path}"))
        return
    try:
        data = read_config_data(config_path, list(overrides))
    except ConfigError as e:
        _fail(ctx, audit_log, run_id, "validation", e)
        return

    result = app.validate(data)
    if result.ok:
        click.echo("PASS: Validation passed")
        audit_log.log_event(
            "validation_success",
            run_id,
            "Validation completed successfully",
            stage="validation",
            event="success",
        )
        audit_log.save()
        return

    click.echo("FAIL: Validation failed:")
    details = [f"{error.json_pointer}: {error.message}" for error in result.errors]
    for detail in details:
        click.echo(f"  {detail}")
    audit_log.log_event(
        "validation_failed",
        run_id,
        "Validation failed with schema errors",
        details={"error_count": len(details), "errors": details},
        stage="validation",
        event="failed",
        level="error",
    )
    audit_log.save()
    ctx.exit(2)


@main.command()
@click.option("--config", "config_path", type=click.Path(path_type=Path), help="YAML or JSON config file")
@click.option("--set", "overrides", multiple=True, metavar="KEY=VALUE", help="Override a config key (repeatable)")
@click.option("--seed", type=int, help="Master seed")
@click.option("--mode", type=click.Choice([m.value for m in Mode]), help="Logger to use (defaults to the config's mode)")
@click.option("--output", type=click.Path(path_type=Path), required=True, help="Log file to write")
@click.pass_context
def gen(
    ctx: click.Context,
    config_path: Path | None,
    overrides: tuple[str, ...],
    seed: int | None,
    mode: str | None,
    output: Path,
) -> None:
    """Generate an exploration log from the configured dataset."""
    run_id = uuid4()
    audit_log = AuditLog(output.parent / AUDIT_FILE)
    try:
        config = load_config(
            config_path,
            _overrides(overrides, seed, None, None, None),
            Mode(mode) if mode else None,
        )
        log = app.write_generated_log(config, output)
    except (DrevalError, OSError) as e:
        _fail(ctx, audit_log, run_id, "gen", e)
        return
    click.echo(f"[GEN] {len(log.events)} events (K={log.header.k}) written to {output}")
    audit_log.log_event(
        "gen_success",
        run_id,
        f"Generated {len(log.events)} events",
        details={"mode": config.mode.value, "seed": config.seed, "path": str(output)},
        stage="gen",
        event="success",
    )
    audit_log.save()


@main.command(name="eval")
@run_options
@click.pass_context
def eval_(ctx: click.Context, **options: Any) -> None:
    """Stationary evaluation: DM, IPS and DR against a classifier's true loss."""
    _run_protocol(ctx, Mode.EVAL, **options)


@main.command()
@run_options
@click.pass_context
def optimize(ctx: click.Context, **options: Any) -> None:
    """Policy optimization from IPS- and DR-imputed costs."""
    _run_protocol(ctx, Mode.OPTIMIZE, **options)


@main.command()
@run_options
@click.pass_context
def shift(ctx: click.Context, **options: Any) -> None:
    """Mean estimation under covariate shift for each subsample fraction."""
    _run_protocol(ctx, Mode.SHIFT, **options)


@main.command()
@run_options
@click.pass_context
def drns(ctx: click.Context, **options: Any) -> None:
    """Nonstationary evaluation: DM, RS, WC and DR-ns over the quantile grid."""
    _run_protocol(ctx, Mode.DRNS, **options)


@main.command()
@click.argument("run_path", type=click.Path(exists=True, path_type=Path))
@click.option("--out", type=click.Path(path_type=Path), help="Output directory (defaults to the run's)")
@click.option("--verify", is_flag=True, help="Only check the files listed in manifest.json")
@click.pass_context
def report(ctx: click.Context, run_path: Path, out: Path | None, verify: bool) -> None:
    """Rebuild CSV tables, manifest and summary from a saved run.json."""
    from .artifacts import RunManifest
    from .report import MANIFEST_FILE

    run_dir = run_path if run_path.is_dir() else run_path.parent
    out_dir = out or run_dir
    run_id = uuid4()
    audit_log = AuditLog(out_dir / AUDIT_FILE)

    if verify:
        try:
            result = RunManifest.load(run_dir / MANIFEST_FILE).verify_manifest_integrity()
        except (OSError, ValueError) as e:
            _fail(ctx, audit_log, run_id, "report", ConfigError(str(e)))
            return
        click.echo(yaml.safe_dump({k: v for k, v in result.items() if k != "details"}, sort_keys=True))
        if not result["integrity_ok"]:
            ctx.exit(1)
        return

    logger = create_run_logger(
        run_id=run_id, log_level=ctx.obj["log_level"], log_file=ctx.obj["log_file"]
    )
    try:
        outputs = load_outputs(run_path)
        manifest = app.report(outputs, out_dir, logger)
    except (DrevalError, OSError, ValueError) as e:
        _fail(ctx, audit_log, run_id, "report", e, logger)
        return
    console.print(summary_table(outputs))
    click.echo(f"[REPORT] {len(manifest.artifacts)} files written to {out_dir}")
    audit_log.log_event(
        "report_success",
        run_id,
        "Report written",
        details={"config_hash": outputs.config_hash},
        stage="report",
        event="success",
    )
    audit_log.save()

