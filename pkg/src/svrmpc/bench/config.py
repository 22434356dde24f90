"""Experiment and task configuration files.

A task file describes one scenario: the model kind and parameters, the
cost weights by body, the success region, and the control-loop settings.
An experiment file points at a task (built-in name or inline), lists the
method rows to run, and sets trial counts. Everything is YAML with the
schema documented in the README; parse -> serialize -> parse is the
identity.
"""

from __future__ import annotations

import copy
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Tuple, Union

import yaml

from ..mpc import DEFAULT_VIRTUAL_COST_PER_EVAL

MODEL_KINDS = ("clutter", "softbody", "soft_rigid")


@dataclass(frozen=True)
class TaskConfig:
    """One scenario: model, cost, success predicate, loop settings."""

    name: str
    model_kind: str
    model_params: dict = field(default_factory=dict)
    cost_entries: Tuple[dict, ...] = ()
    control_weight: float = 0.01
    terminal_scale: float = 10.0
    success: Optional[dict] = None
    horizon: int = 50
    timeout: int = 1000
    slowdown: int = 1
    virtual_cost_per_eval: float = DEFAULT_VIRTUAL_COST_PER_EVAL
    mode: str = "virtual"

    def __post_init__(self):
        if self.model_kind not in MODEL_KINDS:
            raise ValueError(f"unknown model kind {self.model_kind!r}")
        object.__setattr__(self, "cost_entries",
                           tuple(dict(e) for e in self.cost_entries))

    def to_dict(self) -> dict:
        d = {
            "name": self.name,
            "model": {"kind": self.model_kind,
                      "params": copy.deepcopy(self.model_params)},
            "cost": {"control_weight": self.control_weight,
                     "terminal_scale": self.terminal_scale,
                     "entries": [copy.deepcopy(e) for e in self.cost_entries]},
            "control": {"horizon": self.horizon, "timeout": self.timeout,
                        "slowdown": self.slowdown,
                        "virtual_cost_per_eval": self.virtual_cost_per_eval,
                        "mode": self.mode},
        }
        if self.success is not None:
            d["success"] = copy.deepcopy(self.success)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TaskConfig":
        try:
            model = d["model"]
            cost = d.get("cost", {})
            control = d.get("control", {})
            return cls(
                name=d.get("name", "task"),
                model_kind=model["kind"],
                model_params=dict(model.get("params", {})),
                cost_entries=tuple(cost.get("entries", [])),
                control_weight=float(cost.get("control_weight", 0.01)),
                terminal_scale=float(cost.get("terminal_scale", 10.0)),
                success=d.get("success"),
                horizon=int(control.get("horizon", 50)),
                timeout=int(control.get("timeout", 1000)),
                slowdown=int(control.get("slowdown", 1)),
                virtual_cost_per_eval=float(control.get(
                    "virtual_cost_per_eval", DEFAULT_VIRTUAL_COST_PER_EVAL)),
                mode=control.get("mode", "virtual"),
            )
        except KeyError as exc:
            raise ConfigError(f"task config missing key: {exc}") from exc


@dataclass(frozen=True)
class MethodSpec:
    """One row of the method grid."""

    method: str
    theta: int = 0
    rho: float = 0.0
    svd_rank: int = 3
    signed_importance: bool = False

    @property
    def label(self) -> str:
        if self.method in ("svr-sum", "svr-svd", "random"):
            bits = [self.method, f"theta{self.theta}"]
            if self.method != "random":
                bits.append(f"rho{self.rho:g}")
            return "_".join(bits)
        return self.method

    def to_dict(self) -> dict:
        d = {"method": self.method}
        if self.method == "random":
            d["theta"] = self.theta
        elif self.method in ("svr-sum", "svr-svd"):
            d["theta"] = self.theta
            d["rho"] = self.rho
            if self.method == "svr-svd":
                d["svd_rank"] = self.svd_rank
            if self.signed_importance:
                d["signed_importance"] = True
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "MethodSpec":
        return cls(method=d["method"], theta=int(d.get("theta", 0)),
                   rho=float(d.get("rho", 0.0)),
                   svd_rank=int(d.get("svd_rank", 3)),
                   signed_importance=bool(d.get("signed_importance", False)))


@dataclass(frozen=True)
class ExperimentConfig:
    """A task plus the method grid and trial bookkeeping."""

    task: Union[str, TaskConfig]
    methods: Tuple[MethodSpec, ...]
    trials: int = 10
    seed_base: int = 0
    overrides: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        task = self.task if isinstance(self.task, str) else self.task.to_dict()
        d = {
            "task": task,
            "methods": [m.to_dict() for m in self.methods],
            "trials": self.trials,
            "seed_base": self.seed_base,
        }
        if self.overrides:
            d["overrides"] = copy.deepcopy(self.overrides)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        task = d.get("task")
        if task is None:
            raise ConfigError("experiment config needs a 'task'")
        if isinstance(task, dict):
            task = TaskConfig.from_dict(task)
        methods = tuple(MethodSpec.from_dict(m) for m in d.get("methods", []))
        return cls(task=task, methods=methods,
                   trials=int(d.get("trials", 10)),
                   seed_base=int(d.get("seed_base", 0)),
                   overrides=dict(d.get("overrides", {})))


class ConfigError(ValueError):
    """Malformed or inconsistent configuration."""


def deep_merge(base: dict, update: dict) -> dict:
    """Recursive dict merge; scalar values in ``update`` win."""
    out = copy.deepcopy(base)
    for key, val in update.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = deep_merge(out[key], val)
        else:
            out[key] = copy.deepcopy(val)
    return out


def load_task_file(path: Union[str, Path]) -> TaskConfig:
    with open(path) as fh:
        data = yaml.safe_load(fh)
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected a mapping at top level")
    return TaskConfig.from_dict(data)


def load_experiment_file(path: Union[str, Path]) -> ExperimentConfig:
    with open(path) as fh:
        data = yaml.safe_load(fh)
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected a mapping at top level")
    return ExperimentConfig.from_dict(data)


def dump_task(task: TaskConfig) -> str:
    return yaml.safe_dump(task.to_dict(), sort_keys=False)


def dump_experiment(exp: ExperimentConfig) -> str:
    return yaml.safe_dump(exp.to_dict(), sort_keys=False)
