"""Experiment execution: seeded trials, aggregation, CSV reports.

Costs are normalised against the mean of the ``baseline-full`` rows of
the same experiment; confidence intervals are 90% normal-approximation
(``1.645 * stderr``). Trial and aggregate CSVs contain only
deterministic values so identical seeds reproduce them byte for byte;
wall-clock timings go to a separate ``timings.csv`` that carries no
determinism guarantee. Failed (diverged) trials are flagged, never
dropped.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..mpc import MpcRecord, run_mpc
from .config import ConfigError, ExperimentConfig, MethodSpec, TaskConfig, deep_merge
from .tasks import build_task, builtin_task

TRIAL_COLUMNS = (
    "method", "theta", "rho", "trial", "seed", "mpc_cost", "normalized_cost",
    "success", "success_step", "ticks", "planner_iterations",
    "mean_dofs_optimised", "mean_ticks_per_plan", "total_dynamics_evals",
    "diverged",
)
AGGREGATE_COLUMNS = (
    "method", "theta", "rho", "trials", "mean_cost", "ci90_cost",
    "mean_normalized_cost", "ci90_normalized_cost", "mean_dofs",
    "ci90_dofs", "mean_ticks_per_plan", "success_rate", "diverged_count",
)


@dataclass
class TrialResult:
    method: str
    theta: int
    rho: float
    trial: int
    seed: int
    mpc_cost: float
    normalized_cost: float
    success: bool
    success_step: Optional[int]
    ticks: int
    planner_iterations: int
    mean_dofs_optimised: float
    mean_ticks_per_plan: float
    total_dynamics_evals: int
    diverged: bool
    wall_ms: float = 0.0  # reported separately; not part of the CSV contract


@dataclass
class AggregateRow:
    method: str
    theta: int
    rho: float
    trials: int
    mean_cost: float
    ci90_cost: float
    mean_normalized_cost: float
    ci90_normalized_cost: float
    mean_dofs: float
    ci90_dofs: float
    mean_ticks_per_plan: float
    success_rate: float
    diverged_count: int


@dataclass
class ExperimentReport:
    config: ExperimentConfig
    task: TaskConfig
    trial_rows: List[TrialResult]
    aggregate_rows: List[AggregateRow]


def ci90(values: Sequence[float]) -> float:
    """Half-width of the 90% normal-approximation confidence interval."""
    v = np.asarray(values, dtype=float)
    if v.size < 2:
        return 0.0
    return float(1.645 * v.std(ddof=1) / math.sqrt(v.size))


def resolve_task(exp: ExperimentConfig) -> TaskConfig:
    task = exp.task if isinstance(exp.task, TaskConfig) else builtin_task(exp.task)
    if exp.overrides:
        task = TaskConfig.from_dict(deep_merge(task.to_dict(), exp.overrides))
    return task


def run_trial(task: TaskConfig, method: MethodSpec, seed: int) -> Tuple[MpcRecord, float]:
    """One seeded MPC episode; returns the record and its wall time."""
    import time
    bundle = build_task(task, seed)
    config = bundle.mpc_config(method)
    t0 = time.perf_counter()
    record = run_mpc(bundle.model, bundle.cost_spec, config,
                     success=bundle.success)
    wall = time.perf_counter() - t0
    return record, wall


def _trial_result(method: MethodSpec, trial: int, seed: int,
                  record: MpcRecord, wall: float) -> TrialResult:
    return TrialResult(
        method=method.method, theta=method.theta, rho=method.rho,
        trial=trial, seed=seed, mpc_cost=record.mpc_cost,
        normalized_cost=math.nan,  # filled once the baseline mean is known
        success=record.success, success_step=record.success_step,
        ticks=record.ticks, planner_iterations=len(record.iterations),
        mean_dofs_optimised=record.mean_dofs_optimised(),
        mean_ticks_per_plan=record.mean_ticks_per_plan(),
        total_dynamics_evals=record.total_dynamics_evals(),
        diverged=record.diverged, wall_ms=wall * 1000.0)


def _worker(args) -> Tuple[TrialResult, Optional[str]]:
    task_dict, method_dict, trial, seed, keep_record = args
    task = TaskConfig.from_dict(task_dict)
    method = MethodSpec.from_dict(method_dict)
    record, wall = run_trial(task, method, seed)
    result = _trial_result(method, trial, seed, record, wall)
    return result, (record.to_json() if keep_record else None)


def normalize_costs(rows: List[TrialResult]) -> None:
    """Divide every trial cost by the mean cost of the baseline rows."""
    base = [r.mpc_cost for r in rows if r.method == "baseline-full"]
    mean = float(np.mean(base)) if base else math.nan
    for r in rows:
        r.normalized_cost = r.mpc_cost / mean if base else math.nan


def aggregate(rows: Sequence[TrialResult]) -> List[AggregateRow]:
    """Per-(method, theta, rho) means and CIs, in first-seen order."""
    groups: Dict[Tuple[str, int, float], List[TrialResult]] = {}
    order = []
    for r in rows:
        key = (r.method, r.theta, r.rho)
        if key not in groups:
            groups[key] = []
            order.append(key)
        groups[key].append(r)
    out = []
    for key in order:
        g = groups[key]
        costs = [r.mpc_cost for r in g]
        normed = [r.normalized_cost for r in g]
        dofs = [r.mean_dofs_optimised for r in g]
        out.append(AggregateRow(
            method=key[0], theta=key[1], rho=key[2], trials=len(g),
            mean_cost=float(np.mean(costs)), ci90_cost=ci90(costs),
            mean_normalized_cost=float(np.mean(normed)),
            ci90_normalized_cost=ci90(normed),
            mean_dofs=float(np.mean(dofs)), ci90_dofs=ci90(dofs),
            mean_ticks_per_plan=float(np.mean([r.mean_ticks_per_plan for r in g])),
            success_rate=float(np.mean([1.0 if r.success else 0.0 for r in g])),
            diverged_count=sum(1 for r in g if r.diverged)))
    return out


def run_experiment(exp: ExperimentConfig, out_dir: Optional[Path] = None, *,
                   trials: Optional[int] = None,
                   seed_base: Optional[int] = None,
                   jobs: int = 1,
                   write_records: bool = False) -> ExperimentReport:
    """Run the full method grid and (optionally) write the report files.

    Deterministic given the seeds: trial ``i`` of every method uses seed
    ``seed_base + i``, and rows are emitted in config order regardless
    of scheduling.
    """
    task = resolve_task(exp)
    n_trials = exp.trials if trials is None else trials
    base = exp.seed_base if seed_base is None else seed_base
    if n_trials < 1:
        raise ConfigError("trials must be >= 1")
    if not exp.methods:
        raise ConfigError("experiment has no method rows")

    jobs = max(1, jobs)
    labels = [m.label for m in exp.methods]
    work = [(task.to_dict(), m.to_dict(), i, base + i, write_records)
            for m in exp.methods for i in range(n_trials)]
    if jobs == 1:
        results = [_worker(args) for args in work]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_worker, work, chunksize=1))
    rows = [r for r, _ in results]

    normalize_costs(rows)
    report = ExperimentReport(config=exp, task=task, trial_rows=rows,
                              aggregate_rows=aggregate(rows))
    if out_dir is not None:
        write_report(report, Path(out_dir))
        if write_records:
            records_dir = Path(out_dir) / "records"
            records_dir.mkdir(parents=True, exist_ok=True)
            for (row, payload), (mi, m) in zip(
                    results, ((i, m) for i, m in enumerate(exp.methods)
                              for _ in range(n_trials))):
                name = f"record_{labels[mi]}_{row.trial}.json"
                (records_dir / name).write_text(payload)
    return report


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if value is None:
        return ""
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        return repr(float(value))
    return str(value)


def write_report(report: ExperimentReport, out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "trials.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRIAL_COLUMNS)
        for r in report.trial_rows:
            writer.writerow([_fmt(getattr(r, col)) for col in TRIAL_COLUMNS])
    with open(out_dir / "aggregate.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(AGGREGATE_COLUMNS)
        for a in report.aggregate_rows:
            writer.writerow([_fmt(getattr(a, col)) for col in AGGREGATE_COLUMNS])
    # wall-clock timing lives apart from the deterministic report
    with open(out_dir / "timings.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("method", "theta", "rho", "mean_wall_ms"))
        for a in report.aggregate_rows:
            walls = [r.wall_ms for r in report.trial_rows
                     if (r.method, r.theta, r.rho) == (a.method, a.theta, a.rho)]
            writer.writerow([a.method, a.theta, _fmt(a.rho),
                             _fmt(float(np.mean(walls)))])


def read_trials_csv(path: Path) -> List[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def read_aggregate_csv(path: Path) -> List[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))
