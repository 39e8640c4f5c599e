"""Command-line interface: enrich, evolve, backtest, report.

Exit codes: 0 on success, 2 for input errors (bad files, malformed specs or
champions), 3 for unexpected runtime failures. The VECTRADE_OUT environment
variable sets the default output root for `evolve` and `report`.
"""

from __future__ import annotations

import sys
from pathlib import Path

import click
import numpy as np

from . import experiment as exp
from .backtest import format_fitness, run_backtest, write_ledger_csv
from .evaluate import HISTORY_ROWS, TableRuntime, TreeAgent
from .market_data import (
    MarketDataError,
    enrich as enrich_table,
    load_feature_csv,
    load_ohlcv,
    write_feature_csv,
)
from .primitives import primitive_set
from .report import write_report
from .trees import TreeParseError, parse, typecheck

EXIT_INPUT = 2
EXIT_RUNTIME = 3


def _fail_input(message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(EXIT_INPUT)


def _guarded(fn):
    """Map domain errors to exit 2 and anything unexpected to exit 3."""

    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (MarketDataError, TreeParseError, exp.SpecError) as exc:
            _fail_input(str(exc))
        except (click.ClickException, SystemExit):
            raise
        except Exception as exc:  # noqa: BLE001
            click.echo(f"runtime failure: {type(exc).__name__}: {exc}", err=True)
            sys.exit(EXIT_RUNTIME)

    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


@click.group()
def main():
    """Evolve and evaluate trading strategies over daily OHLCV data."""


@main.command()
@click.argument("input_csv", type=click.Path())
@click.argument("output_csv", type=click.Path())
@_guarded
def enrich(input_csv, output_csv):
    """Compute the indicator columns of a raw OHLCV file."""
    candles = load_ohlcv(input_csv)
    table = enrich_table(candles)
    write_feature_csv(table, output_csv)
    click.echo(f"wrote {len(table)} enriched rows to {output_csv}")


@main.command()
@click.option("--config", "config_path", type=click.Path(), help="Experiment spec file (key = value lines).")
@click.option("--dataset", "datasets", multiple=True, type=click.Path(), help="Enriched CSV (repeatable).")
@click.option("--variant", "variants", multiple=True, help="Variant to run (repeatable).")
@click.option("--runs", type=int, default=None, help="Runs per variant and dataset.")
@click.option("--seed", type=int, default=None, help="Base seed; run seeds are seed + run index.")
@click.option("--population", type=int, default=None)
@click.option("--generations", type=int, default=None)
@click.option("--out", default=None, envvar="VECTRADE_OUT", help="Output root directory.")
@click.option("--jobs", type=int, default=None, help="Concurrent runs.")
@_guarded
def evolve(config_path, datasets, variants, runs, seed, population, generations, out, jobs):
    """Run a multi-seed experiment and write per-run artifacts plus an index."""
    file_values = exp.parse_spec_file(config_path) if config_path else {}
    spec = exp.build_spec(
        file_values,
        datasets=[str(d) for d in datasets],
        variants=[v.upper() for v in variants],
        runs=runs,
        seed=seed,
        population=population,
        generations=generations,
        out=out,
        jobs=jobs,
    )
    rows = exp.run_experiment(spec)
    failed = [r for r in rows if r["status"] != "ok"]
    click.echo(f"completed {len(rows) - len(failed)}/{len(rows)} runs under {spec.out_dir}")
    for row in failed:
        click.echo(f"  FAILED {row['dataset']} {row['variant']} seed {row['seed']}: {row['error']}", err=True)
    if failed:
        sys.exit(EXIT_RUNTIME)


@main.command()
@click.argument("champion_file", type=click.Path())
@click.argument("data_csv", type=click.Path())
@click.option("--rows", "row_range", default="test",
              help='"test", "all", or START:STOP row indices of the enriched file.')
@click.option("--ledger", "ledger_path", type=click.Path(), default=None,
              help="Write the per-row trade ledger CSV here.")
@_guarded
def backtest(champion_file, data_csv, row_range, ledger_path):
    """Backtest a saved champion over a row range of an enriched dataset."""
    champ = exp.load_champion(champion_file)
    pset = primitive_set(champ["variant"])
    tree = parse(champ["tree"], pset)
    violation = typecheck(tree, pset)
    if violation:
        _fail_input(f"champion does not typecheck: {violation}")
    table = load_feature_csv(data_csv)
    rows = _parse_rows(row_range, len(table))
    runtime = TableRuntime(table, pset)
    agent = TreeAgent(tree, pset, runtime, rows)
    source = agent.vector_signals if agent.vector_signals is not None else agent.signal_at
    result = run_backtest(source, rows, table, record=ledger_path is not None)
    click.echo(f"tree: {champ['tree']}")
    click.echo(f"rows: {int(rows[0])}..{int(rows[-1])} of {data_csv}")
    click.echo(f"roi: {result.roi:.6g}")
    click.echo(f"win_rate: {result.win_rate:.6g}")
    click.echo(f"trades: {result.n_trades}")
    click.echo(f"fitness: {format_fitness(result.fitness)}")
    if ledger_path:
        write_ledger_csv(result, ledger_path)
        click.echo(f"ledger written to {ledger_path}")


def _parse_rows(expr: str, n_rows: int) -> np.ndarray:
    if expr == "all":
        return np.arange(HISTORY_ROWS, n_rows)
    if expr == "test":
        cut = int(0.8 * n_rows)
        if cut >= n_rows:
            raise MarketDataError(f"table of {n_rows} rows has no test split")
        return np.arange(cut, n_rows)
    try:
        start_s, stop_s = expr.split(":", 1)
        start, stop = int(start_s), int(stop_s)
    except ValueError:
        raise MarketDataError(f'bad --rows {expr!r}; expected "test", "all" or START:STOP') from None
    if not (0 <= start < stop <= n_rows):
        raise MarketDataError(f"--rows {expr} outside table of {n_rows} rows")
    return np.arange(start, stop)


@main.command()
@click.argument("run_dir", type=click.Path(), required=False)
@click.option("--out", "report_dir", type=click.Path(), default=None, help="Report output directory.")
@click.option("--alpha", type=float, default=0.05, show_default=True)
@click.option("--figures/--no-figures", default=True, show_default=True)
@_guarded
def report(run_dir, report_dir, alpha, figures):
    """Summarize an experiment: quartiles, p-values, mean ranks, figures."""
    import os

    root = run_dir or os.environ.get("VECTRADE_OUT")
    if not root:
        _fail_input("give a run directory or set VECTRADE_OUT")
    out = write_report(root, report_dir, alpha=alpha, figures=figures)
    click.echo(f"report written to {out}")


if __name__ == "__main__":
    main()
