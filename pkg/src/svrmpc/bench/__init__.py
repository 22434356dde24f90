"""Benchmark harness: tasks, experiment runner, reports, CLI."""

from .config import (ConfigError, ExperimentConfig, MethodSpec, TaskConfig,
                     load_experiment_file, load_task_file)
from .runner import (ExperimentReport, TrialResult, aggregate, ci90,
                     run_experiment, run_trial)
from .tasks import TaskBundle, build_task, builtin_task, builtin_tasks

__all__ = [
    "ConfigError", "ExperimentConfig", "MethodSpec", "TaskConfig",
    "load_experiment_file", "load_task_file", "ExperimentReport",
    "TrialResult", "aggregate", "ci90", "run_experiment", "run_trial",
    "TaskBundle", "build_task", "builtin_task", "builtin_tasks",
]
