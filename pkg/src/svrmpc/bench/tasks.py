"""Built-in benchmark tasks and the task -> runnable-objects builder.

Cost entries address bodies by name: ``pusher`` (the robot DoFs),
``objectK`` (a rigid disc), ``softbody`` (the particle lattice), or
``other_objects`` (every disc not named explicitly). ``position`` /
``velocity`` weights apply per coordinate; disc yaw gets its own
optional ``yaw`` / ``yaw_velocity`` keys. Targets are either an ``[x, y]``
location or ``"initial"`` (stay where you started); a soft body's
target translates its whole rest shape so the centroid lands there.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from ..cost import CostSpec, dofs_in_cost
from ..dynamics import (DynamicsModel, make_clutter_model,
                        make_soft_rigid_model, make_softbody_model)
from ..mpc import MpcConfig, SuccessCriterion
from ..selection import SelectionPolicy
from .config import ConfigError, MethodSpec, TaskConfig

_FACTORIES = {
    "clutter": make_clutter_model,
    "softbody": make_softbody_model,
    "soft_rigid": make_soft_rigid_model,
}


@dataclass
class TaskBundle:
    """A task instantiated for one seed: model, cost, success predicate."""

    task: TaskConfig
    seed: int
    model: DynamicsModel
    cost_spec: CostSpec
    success: Optional[SuccessCriterion]

    def mpc_config(self, method: MethodSpec, *,
                   mode: Optional[str] = None,
                   virtual_cost_per_eval: Optional[float] = None) -> MpcConfig:
        policy = SelectionPolicy(
            method=method.method, theta=method.theta, rho=method.rho,
            svd_rank=method.svd_rank, seed=self.seed,
            signed_importance=method.signed_importance)
        return MpcConfig(
            horizon=self.task.horizon, timeout=self.task.timeout,
            policy=policy, slowdown=self.task.slowdown,
            mode=mode if mode is not None else self.task.mode,
            virtual_cost_per_eval=(self.task.virtual_cost_per_eval
                                   if virtual_cost_per_eval is None
                                   else virtual_cost_per_eval))


def _body_names(model: DynamicsModel) -> List[str]:
    return [name for name, _ in model.layout.bodies]


def _apply_entry(entry: dict, model: DynamicsModel, w: np.ndarray,
                 desired: np.ndarray) -> None:
    layout = model.layout
    n = layout.total
    body = entry.get("body")
    if body is None:
        raise ConfigError(f"cost entry without 'body': {entry}")
    pos_w = float(entry.get("position", 0.0))
    vel_w = float(entry.get("velocity", 0.0))
    target = entry.get("target", "initial")

    if body == "pusher":
        dofs = list(range(layout.robot_dofs))
        if target != "initial":
            desired[dofs[0]], desired[dofs[1]] = float(target[0]), float(target[1])
        for d in dofs:
            w[d] = pos_w
            w[d + n] = vel_w
        return

    bi = layout.body_index(body)
    start, count = layout.body_dof_range(bi)
    if count == 3:  # rigid disc: x, y, yaw
        if target != "initial":
            desired[start], desired[start + 1] = float(target[0]), float(target[1])
        w[start] = w[start + 1] = pos_w
        w[start + n] = w[start + 1 + n] = vel_w
        w[start + 2] = float(entry.get("yaw", 0.0))
        w[start + 2 + n] = float(entry.get("yaw_velocity", 0.0))
    else:  # particle block
        if target != "initial":
            px = desired[start:start + count:2]
            py = desired[start + 1:start + count:2]
            shift_x = float(target[0]) - px.mean()
            shift_y = float(target[1]) - py.mean()
            desired[start:start + count:2] = px + shift_x
            desired[start + 1:start + count:2] = py + shift_y
        w[start:start + count] = pos_w
        w[start + n:start + count + n] = vel_w


def build_task(task: TaskConfig, seed: int) -> TaskBundle:
    """Instantiate a task for one trial seed.

    The seed drives both the model's initial layout and (via the caller)
    the selection policy's sampling.
    """
    factory = _FACTORIES.get(task.model_kind)
    if factory is None:
        raise ConfigError(f"unknown model kind {task.model_kind!r}")
    params = dict(task.model_params)
    params["seed"] = int(params.get("seed", 0)) + seed
    model = factory(**params)
    if model.timestep <= 0:
        raise ConfigError("model timestep must be positive")

    n2 = model.layout.state_dim
    w = np.zeros(n2)
    desired = model.initial_state.copy()

    explicit = {e.get("body") for e in task.cost_entries}
    for entry in task.cost_entries:
        if entry.get("body") == "other_objects":
            continue
        _apply_entry(entry, model, w, desired)
    for entry in task.cost_entries:
        if entry.get("body") != "other_objects":
            continue
        for name in _body_names(model):
            if name.startswith("object") and name not in explicit:
                _apply_entry({**entry, "body": name}, model, w, desired)

    r = np.full(model.control_dim, float(task.control_weight))
    spec = CostSpec(state_weights=w, control_weights=r,
                    terminal_weights=task.terminal_scale * w,
                    desired=desired)

    success = None
    if task.success is not None:
        s = task.success
        success = SuccessCriterion(
            body=s["body"], center=(float(s["center"][0]), float(s["center"][1])),
            radius=float(s["radius"]), hold_steps=int(s.get("hold_steps", 1)))

    model = DynamicsModel(
        name=model.name,
        layout=model.layout.with_cost_flags(dofs_in_cost(spec, model.layout)),
        control_dim=model.control_dim, timestep=model.timestep,
        step_fn=model.step_fn, initial_state=model.initial_state,
        linearizer=model.linearizer, params=model.params)
    return TaskBundle(task=task, seed=seed, model=model, cost_spec=spec,
                      success=success)


def builtin_tasks() -> List[TaskConfig]:
    """The three benchmark scenarios at their standard settings."""
    clutter = TaskConfig(
        name="clutter",
        model_kind="clutter",
        model_params={"num_objects": 8},
        cost_entries=(
            {"body": "pusher", "position": 0.1, "velocity": 0.05,
             "target": [0.25, 0.0]},
            {"body": "object0", "position": 8.0, "velocity": 0.2,
             "target": [0.25, 0.0]},
            {"body": "other_objects", "position": 1.0, "velocity": 0.0,
             "target": "initial"},
        ),
        control_weight=0.02,
        terminal_scale=20.0,
        success={"body": "object0", "center": [0.25, 0.0], "radius": 0.07,
                 "hold_steps": 25},
        horizon=80, timeout=2000, slowdown=1,
    )
    soft = TaskConfig(
        name="soft",
        model_kind="softbody",
        model_params={"particles": 36, "topology": "grid"},
        cost_entries=(
            {"body": "pusher", "position": 0.1, "velocity": 0.05,
             "target": [0.25, 0.0]},
            {"body": "softbody", "position": 2.0, "velocity": 0.05,
             "target": [0.25, 0.0]},
        ),
        control_weight=0.02,
        terminal_scale=20.0,
        success={"body": "softbody", "center": [0.25, 0.0], "radius": 0.08,
                 "hold_steps": 25},
        horizon=50, timeout=1000, slowdown=3,
    )
    soft_rigid = TaskConfig(
        name="soft_rigid",
        model_kind="soft_rigid",
        model_params={"particles": 24},
        cost_entries=(
            {"body": "pusher", "position": 0.1, "velocity": 0.05,
             "target": [0.3, 0.0]},
            {"body": "object0", "position": 8.0, "velocity": 0.2,
             "target": [0.3, 0.0]},
            {"body": "softbody", "position": 0.2, "velocity": 0.02,
             "target": "initial"},
        ),
        control_weight=0.02,
        terminal_scale=20.0,
        success={"body": "object0", "center": [0.3, 0.0], "radius": 0.07,
                 "hold_steps": 25},
        horizon=100, timeout=1000, slowdown=5,
    )
    return [clutter, soft, soft_rigid]


def builtin_task(name: str) -> TaskConfig:
    for task in builtin_tasks():
        if task.name == name:
            return task
    raise ConfigError(f"no built-in task named {name!r}")
