#!/usr/bin/env python3
"""
PD-MPC Flood Control - Main Entry Point
"""

import copy
import functools
import logging
import sys
from pathlib import Path
from typing import Optional

import click

from src.analytics.penalty_sweep import parse_range, sweep_gene
from src.config.logging_config import set_verbose, setup_logging
from src.config.run_config import RunSettings, build_settings, load_config
from src.config.settings import DEFAULT_CONFIG_PATH, J4_EMPHASIS_FACTORS
from src.core.comparison import ComparisonTable, compare_modes
from src.core.engine import ControlMode, run_event
from src.core.events import builtin_names, synthetic_event
from src.core.metrics import compute_metrics
from src.database.crud import RunRecordCRUD
from src.database.db_init import init_database
from src.input_handlers.event_loader import load_event, save_event
from src.utils.exceptions import ConfigError, ReservoirControlError, ValidationError
from src.utils.file_utils import file_utils

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VALIDATION = 2
EXIT_DEGRADED = 3


def handle_errors(func):
    """Map package errors onto the CLI exit codes."""
    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        ctx = click.get_current_context()
        try:
            return func(*args, **kwargs)
        except ValidationError as e:
            logger.error(f"❌ {e}")
            click.echo(f"Error: {e}", err=True)
            ctx.exit(EXIT_VALIDATION)
        except ReservoirControlError as e:
            logger.error(f"❌ {e}")
            click.echo(f"Error: {e}", err=True)
            ctx.exit(EXIT_USAGE)
    return wrapper


def _settings(config: Optional[str], **overrides) -> RunSettings:
    resolved = load_config(config or None)
    for dotted, value in overrides.items():
        if value is None:
            continue
        section, key = dotted.split("__", 1)
        resolved[section][key] = value
    return build_settings(resolved)


def _record(settings: RunSettings, command: str, event: str, mode: str, horizon: int, seed: int,
            metrics, degraded: bool, trace_path: Optional[Path] = None):
    if not settings.database_url:
        return
    manager = init_database(settings.database_url)
    try:
        with manager.get_db_session() as db:
            earlier = [
                r for r in RunRecordCRUD.get_by_config_hash(db, settings.config_hash)
                if (r.event, r.mode, r.horizon, r.seed) == (event, mode, horizon, seed)
            ]
            if earlier:
                logger.info(f"♻️ {event} {mode} H={horizon} seed={seed} repeats run #{earlier[-1].id} "
                            f"with the same configuration")
            RunRecordCRUD.record_metrics(
                db, command=command, event=event, mode=mode, horizon=horizon, seed=seed,
                config_hash=settings.config_hash, metrics=metrics, degraded=degraded,
                trace_path=str(trace_path) if trace_path else None,
            )
    finally:
        manager.close()


def _run_line(record) -> str:
    return (f"#{record.id} {record.command} {record.event} {record.mode} H={record.horizon} seed={record.seed} "
            f"peak={record.peak_outflow:.3f} penalty={record.total_penalty:.6g}"
            f"{' degraded' if record.degraded else ''} config={record.config_hash[:12]}")


config_option = click.option('--config', '-c', envvar='PDMPC_CONFIG', default=DEFAULT_CONFIG_PATH,
                             help='Run configuration file (YAML)')
event_option = click.option('--event', '-e', required=True,
                            help='Event CSV path or builtin:<name>')
out_option = click.option('--out', '-o', type=click.Path(file_okay=False), default=None,
                          help='Output directory (defaults to output.dir)')


@click.group()
@click.option('--verbose', '-v', is_flag=True, help='Enable verbose logging')
def cli(verbose):
    """PD-MPC Flood Control - receding-horizon reservoir operation with adaptive weights."""
    setup_logging()
    set_verbose(verbose)


@cli.command()
@config_option
@event_option
@out_option
@click.option('--mode', '-m', default=None, help='pdmpc, pdmpc-fixed-sh, fixed1, fixed2 or fixed-custom')
@click.option('--seed', '-s', type=int, default=None, help='Run seed')
@click.option('--horizon', '-H', type=int, default=None, help='Prediction horizon (steps)')
@click.option('--certain', is_flag=True, default=None, help='Use the noise-free forecast')
@handle_errors
def run(config, event, out, mode, seed, horizon, certain):
    """Run one event and write its trace."""
    settings = _settings(config, run__mode=mode, run__seed=seed, run__horizon=horizon,
                         forecast__certain=certain or None, output__dir=out)
    ev = load_event(event)
    trace = run_event(ev, settings.spec, settings.run)
    metrics = compute_metrics(trace, settings.change_tol)

    cfg = settings.run
    path = settings.output_dir / f"{ev.name}_{cfg.mode.value}_h{cfg.horizon}_seed{cfg.seed}.csv"
    file_utils.write_trace(trace, metrics, path, settings.resolved, settings.config_hash)
    _record(settings, "run", ev.name, cfg.mode.value, cfg.horizon, cfg.seed, metrics, trace.degraded, path)

    click.echo(f"Trace: {path}")
    click.echo(f"Peak outflow {metrics.peak_outflow:.3f} m3/s, peak RWL {metrics.peak_rwl:.3f} m, "
               f"lowest RWL {metrics.lowest_rwl:.3f} m, changes {metrics.schedule_changes}, "
               f"total penalty {metrics.total_penalty:.6g}")
    if trace.degraded:
        click.echo(f"⚠️ Fallbacks at steps {trace.flagged_steps}", err=True)
        click.get_current_context().exit(EXIT_DEGRADED)


@cli.command()
@config_option
@event_option
@out_option
@click.option('--modes', default='pdmpc,fixed1,fixed2', show_default=True, help='Comma-separated modes')
@click.option('--seeds', 'n_seeds', type=click.IntRange(min=1), default=1, show_default=True,
              help='Number of seeds, counting up from run.seed')
@click.option('--horizons', default=None, help='Comma-separated horizons (defaults to run.horizon)')
@click.option('--j4-mode', 'j4_modes', default=None,
              help=f"Comma-separated evaluator J4 emphasis modes ({', '.join(J4_EMPHASIS_FACTORS)})")
@handle_errors
def compare(config, event, out, modes, n_seeds, horizons, j4_modes):
    """Compare control modes over several seeds and horizons."""
    base = _settings(config, output__dir=out)
    ev = load_event(event)
    mode_list = [ControlMode.parse(m) for m in modes.split(',') if m.strip()]
    try:
        horizon_list = [int(h) for h in horizons.split(',')] if horizons else None
    except ValueError:
        raise click.BadParameter(f"expected comma-separated integers, got {horizons!r}",
                                 param_hint="--horizons") from None
    seeds = [base.run.seed + i for i in range(n_seeds)]
    workers = base.run.ga.workers

    table = ComparisonTable(event_name=ev.name)
    variants = [m.strip() for m in j4_modes.split(',')] if j4_modes else [None]
    for variant in variants:
        settings = base
        if variant is not None:
            resolved = copy.deepcopy(base.resolved)
            resolved["evaluator"]["j4_mode"] = variant
            settings = build_settings(resolved)
        part = compare_modes(
            ev, settings.spec, settings.run, mode_list, seeds, horizon_list,
            change_tol=settings.change_tol, workers=workers, label=f"j4={variant}" if variant else "",
        )
        table.extend(part)
        for row in part.rows:
            _record(settings, "compare", ev.name, row.mode, row.horizon, row.seed, row.metrics,
                    row.metrics.fallback_steps > 0)

    path = base.output_dir / f"{ev.name}_comparison.csv"
    file_utils.write_comparison(table, path, base.config_hash)
    click.echo(f"Comparison: {path} ({len(table)} rows)")
    if any(r.metrics.fallback_steps for r in table.rows):
        click.get_current_context().exit(EXIT_DEGRADED)


@cli.command()
@config_option
@event_option
@out_option
@click.option('--gene', '-g', default='w5', show_default=True, help='Gene to sweep')
@click.option('--range', 'value_range', default='1..20', show_default=True, help='Inclusive gene range a..b')
@click.option('--steps', 'step_range', required=True, help='Inclusive step range k0..k1')
@handle_errors
def sweep(config, event, out, gene, value_range, step_range):
    """Re-score the chosen weights per step with one gene swept."""
    settings = _settings(config, output__dir=out)
    ev = load_event(event)
    values = parse_range(value_range)
    steps = parse_range(step_range)
    result = sweep_gene(ev, settings.spec, settings.run, gene, values, steps, workers=settings.run.ga.workers)

    stem = f"{ev.name}_sweep_{gene}"
    grid_path, long_path = file_utils.write_sweep(
        result, settings.output_dir / f"{stem}.csv", settings.output_dir / f"{stem}_long.csv",
        settings.config_hash, settings.run.seed,
    )
    click.echo(f"Sweep grid: {grid_path} ({len(values)}x{len(steps)})")


@cli.command()
@config_option
@click.option('--event', '-e', default=None, help='Only runs of this event')
@click.option('--mode', '-m', default=None, help='Only runs of this mode')
@click.option('--limit', '-n', type=click.IntRange(min=1), default=20, show_default=True, help='Newest runs to list')
@click.option('--id', 'run_id', type=int, default=None, help='Show a single run')
@handle_errors
def runs(config, event, mode, limit, run_id):
    """List runs recorded in the run registry."""
    settings = _settings(config)
    if not settings.database_url:
        raise ConfigError("no run registry configured; set RUN_DATABASE_URL or database.url")
    manager = init_database(settings.database_url)
    try:
        with manager.get_db_session() as db:
            if run_id is not None:
                record = RunRecordCRUD.get_by_id(db, run_id)
                if record is None:
                    raise ValidationError(f"no recorded run #{run_id}")
                records = [record]
            else:
                records = RunRecordCRUD.list_runs(db, event=event, mode=mode, limit=limit)
            for record in records:
                click.echo(_run_line(record))
            if run_id is not None and records[0].trace_path:
                click.echo(f"Trace: {records[0].trace_path}")
    finally:
        manager.close()
    if not records:
        click.echo("No recorded runs")


@cli.command()
@click.option('--out', '-o', type=click.Path(file_okay=False), required=True, help='Output directory')
@click.option('--name', '-n', 'names', multiple=True, help='Builtin event name (repeatable); all by default')
@handle_errors
def events(out, names):
    """Export the bundled synthetic events as event CSVs."""
    for name in names or builtin_names():
        path = save_event(synthetic_event(name), Path(out) / f"{name}.csv")
        click.echo(f"{name}: {path}")


def main(argv=None) -> int:
    """Run the CLI and return its exit status."""
    try:
        rc = cli.main(args=argv, prog_name="pdmpc", standalone_mode=False)
    except click.exceptions.Abort:
        click.echo("Aborted!", err=True)
        return EXIT_USAGE
    except click.ClickException as e:
        e.show()
        return EXIT_USAGE
    return rc if isinstance(rc, int) else EXIT_OK


if __name__ == '__main__':
    sys.exit(main())
