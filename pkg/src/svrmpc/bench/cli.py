"""Command-line interface for running experiments and sweeps."""

from __future__ import annotations

import sys
from pathlib import Path

import click

from .config import (ConfigError, ExperimentConfig, MethodSpec,
                     dump_task, load_experiment_file)
from .kernel_bench import format_table, run_benchmark
from .plotting import emit_plot_data
from .runner import read_aggregate_csv, run_experiment
from .tasks import build_task, builtin_tasks


@click.group()
def main():
    """Trajectory-optimisation MPC benchmark with online DoF reduction."""


@main.command()
@click.argument("config", type=click.Path(exists=True, dir_okay=False))
@click.option("--trials", type=int, default=None, help="Trials per method row.")
@click.option("--seed", type=int, default=None, help="Base seed (trial i uses seed+i).")
@click.option("--out", type=click.Path(file_okay=False), default="results",
              show_default=True, help="Report directory.")
@click.option("--jobs", type=int, default=1, show_default=True,
              help="Parallel trial workers.")
@click.option("--records/--no-records", default=False,
              help="Also dump one replayable record JSON per trial.")
def run(config, trials, seed, out, jobs, records):
    """Run the method grid of an experiment CONFIG file."""
    try:
        exp = load_experiment_file(config)
        report = run_experiment(exp, Path(out), trials=trials, seed_base=seed,
                                jobs=jobs, write_records=records)
    except (ConfigError, KeyError, TypeError, ValueError) as exc:
        raise click.ClickException(str(exc))
    click.echo(f"wrote {out}/trials.csv ({len(report.trial_rows)} trials), "
               f"aggregate.csv ({len(report.aggregate_rows)} rows)")
    for row in report.aggregate_rows:
        click.echo(f"  {row.method} theta={row.theta} rho={row.rho:g}: "
                   f"cost {row.mean_cost:.4g} "
                   f"(normalized {row.mean_normalized_cost:.3f} "
                   f"+- {row.ci90_normalized_cost:.3f}), "
                   f"mean DoFs {row.mean_dofs:.1f}, "
                   f"success {row.success_rate:.0%}")


@main.command()
@click.argument("config", type=click.Path(exists=True, dir_okay=False))
@click.option("--theta", "thetas", type=int, multiple=True,
              default=(0, 5, 10), show_default=True)
@click.option("--rho", "rhos", type=float, multiple=True,
              default=(0.0, 0.1, 0.5, 1.0, 5.0, 10.0, 20.0, 50.0, 100.0, 500.0),
              show_default=True)
@click.option("--method", type=click.Choice(["svr-sum", "svr-svd"]),
              default="svr-sum", show_default=True)
@click.option("--trials", type=int, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--out", type=click.Path(file_okay=False), default="sweep",
              show_default=True)
@click.option("--jobs", type=int, default=1, show_default=True)
def sweep(config, thetas, rhos, method, trials, seed, out, jobs):
    """Grid-sweep reintroduction count and removal threshold.

    CONFIG is an experiment file; its method rows are replaced by a
    baseline row plus one adaptive row per (theta, rho) cell.
    """
    try:
        exp = load_experiment_file(config)
        methods = [MethodSpec(method="baseline-full")]
        methods += [MethodSpec(method=method, theta=t, rho=r)
                    for t in thetas for r in rhos]
        exp = ExperimentConfig(task=exp.task, methods=tuple(methods),
                               trials=exp.trials, seed_base=exp.seed_base,
                               overrides=exp.overrides)
        report = run_experiment(exp, Path(out), trials=trials, seed_base=seed,
                                jobs=jobs)
        paths = emit_plot_data(report.aggregate_rows, Path(out))
    except (ConfigError, KeyError, TypeError, ValueError) as exc:
        raise click.ClickException(str(exc))
    click.echo(f"wrote {len(paths)} plot files under {out}/")


@main.command()
@click.argument("report", type=click.Path(exists=True))
@click.option("--out", type=click.Path(file_okay=False), default=None,
              help="Output directory (defaults to the report directory).")
def plot(report, out):
    """Emit sweep CSVs and plot.svg from a report directory."""
    report_dir = Path(report)
    agg = report_dir / "aggregate.csv" if report_dir.is_dir() else report_dir
    if not agg.exists():
        raise click.ClickException(f"no aggregate.csv under {report}")
    rows = read_aggregate_csv(agg)
    paths = emit_plot_data(rows, Path(out) if out else agg.parent)
    click.echo(f"wrote {len(paths)} plot files")


@main.group()
def tasks():
    """Inspect built-in tasks."""


@tasks.command("list")
@click.option("--full", is_flag=True, help="Print full task configs as YAML.")
def tasks_list(full):
    """List the built-in benchmark tasks."""
    for task in builtin_tasks():
        bundle = build_task(task, seed=0)
        click.echo(f"{task.name}: {task.model_kind}, "
                   f"{bundle.model.layout.total} DoFs, horizon {task.horizon}, "
                   f"timeout {task.timeout}, slowdown {task.slowdown}")
        if full:
            click.echo(dump_task(task))


@main.command("bench-kernels")
@click.option("--model", "models", multiple=True,
              type=click.Choice(["clutter", "softbody", "soft_rigid"]),
              help="Models to benchmark (default: all).")
@click.option("--repeats", type=int, default=200, show_default=True)
def bench_kernels(models, repeats):
    """Compare the compiled kernels against the Python fallback."""
    rows = run_benchmark(list(models) or None, repeats=repeats)
    click.echo(format_table(rows))
    if not any(r["backend"] == "compiled" for r in rows):
        click.echo("note: compiled extension not available; "
                   "only the Python fallback was timed")


if __name__ == "__main__":
    sys.exit(main())
