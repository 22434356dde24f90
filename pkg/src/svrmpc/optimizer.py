"""Iterative LQR over a reduced DoF set.

Derivatives and the value-function recursion run over the active
:class:`~svrmpc.statespace.DofSet` only; forward rollouts always step
the full nonlinear model and score candidates with the full-state cost.
``optimise_iteration`` performs exactly one improvement attempt
(linearize, backward pass, line search), which is how the MPC loop
consumes it.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .cost import (CostExpansion, CostSpec, expansions_trajectory,
                   trajectory_cost)
from .dynamics import (DEFAULT_EPS_CTRL, DEFAULT_EPS_STATE, DynamicsModel,
                       LinearizedDynamics, linearize_trajectory)
from .statespace import DofSet

LINE_SEARCH_ALPHAS = (1.0, 0.5, 0.25, 0.125, 0.0625)
REG_INIT = 1e-6
REG_MAX_DOUBLINGS = 5
DIVERGENCE_NORM = 1e6


@dataclass
class Trajectory:
    """Nominal states/controls over the horizon and their total cost."""

    X: np.ndarray  # (T+1, 2n)
    U: np.ndarray  # (T, m)
    J: float


@dataclass
class GainSchedule:
    """Backward-pass output: open-loop terms and reduced feedback gains.

    ``dv1``/``dv2`` accumulate ``sum k'Q_u`` and ``sum k'Q_uu k``; the
    quadratic model predicts a cost change of ``a*dv1 + a^2/2 * dv2`` for
    a rollout with line-search step ``a``.
    """

    k: np.ndarray          # (T, m)
    K: np.ndarray          # (T, m, 2c)
    dofset: DofSet
    dv1: float = 0.0
    dv2: float = 0.0


@dataclass
class OptimiserStats:
    """Per-iteration accounting used by the MPC loop and the reports."""

    derivative_evals: int = 0
    rollout_evals: int = 0
    dynamics_evals: int = 0
    wallclock: float = 0.0
    virtual_cost_units: float = 0.0
    accepted_alpha: Optional[float] = None
    cost_before: float = math.nan
    cost_after: float = math.nan
    backward_failed: bool = False
    regularization: float = 0.0


def rollout_nominal(model: DynamicsModel, x0: np.ndarray,
                    U: np.ndarray) -> Tuple[np.ndarray, bool]:
    """Roll controls through the full model; flags divergence."""
    T = U.shape[0]
    X = np.empty((T + 1, x0.shape[0]))
    X[0] = x0
    for t in range(T):
        xn = model.step(X[t], U[t])
        if not np.isfinite(xn).all() or np.abs(xn).max() > DIVERGENCE_NORM:
            X[t + 1:] = np.nan
            return X, False
        X[t + 1] = xn
    return X, True


def backward_pass(lin: Sequence[LinearizedDynamics],
                  expansions: Sequence[CostExpansion],
                  terminal: CostExpansion, reg: float,
                  dofset: DofSet) -> Optional[GainSchedule]:
    """Value-function recursion over the reduced coordinates.

    Returns ``None`` when the control Hessian is not positive definite
    at some timestep even after adding ``reg`` to its diagonal; the
    caller is expected to retry with a larger ``reg``.
    """
    T = len(lin)
    if T == 0 or len(expansions) != T:
        raise ValueError("schedule lengths mismatch")
    m = expansions[0].l_u.shape[0]
    nc2 = terminal.l_x.shape[0]
    k_out = np.empty((T, m))
    K_out = np.empty((T, m, nc2))
    V_x = terminal.l_x.copy()
    V_xx = terminal.l_xx.copy()
    reg_eye = reg * np.eye(m)
    dv1 = 0.0
    dv2 = 0.0
    for t in range(T - 1, -1, -1):
        A, B = lin[t].A, lin[t].B
        exp = expansions[t]
        VA = V_xx @ A
        Q_x = exp.l_x + A.T @ V_x
        Q_u = exp.l_u + B.T @ V_x
        Q_xx = exp.l_xx + A.T @ VA
        Q_uu = exp.l_uu + B.T @ (V_xx @ B) + reg_eye
        Q_ux = B.T @ VA  # cost has no state-control cross term
        try:
            np.linalg.cholesky(Q_uu)
        except np.linalg.LinAlgError:
            return None
        k_t = -np.linalg.solve(Q_uu, Q_u)
        K_t = -np.linalg.solve(Q_uu, Q_ux)
        k_out[t] = k_t
        K_out[t] = K_t
        V_x = Q_x - Q_ux.T @ np.linalg.solve(Q_uu, Q_u)
        V_xx = Q_xx - Q_ux.T @ np.linalg.solve(Q_uu, Q_ux)
        V_xx = 0.5 * (V_xx + V_xx.T)
        dv1 += float(k_t @ Q_u)
        dv2 += float(k_t @ (Q_uu @ k_t))
    return GainSchedule(k=k_out, K=K_out, dofset=dofset, dv1=dv1, dv2=dv2)


def forward_rollout(model: DynamicsModel, spec: CostSpec,
                    nominal: Trajectory, gains: GainSchedule, alpha: float,
                    dofset: DofSet) -> Trajectory:
    """Roll the full model under reduced feedback around the nominal.

    A non-finite or exploding state rejects the candidate by giving it
    infinite cost.
    """
    if not 0.0 < alpha <= 1.0:
        raise ValueError("alpha must be in (0, 1]")
    if gains.dofset is not dofset and gains.dofset.members != dofset.members:
        raise ValueError("gain schedule was computed for a different DofSet")
    T = nominal.U.shape[0]
    idx = dofset.state_indices
    X = np.empty_like(nominal.X)
    U = np.empty_like(nominal.U)
    X[0] = nominal.X[0]
    for t in range(T):
        delta = X[t][idx] - nominal.X[t][idx]
        U[t] = nominal.U[t] + alpha * gains.k[t] + gains.K[t] @ delta
        if not np.isfinite(U[t]).all():
            return Trajectory(X=X, U=U, J=math.inf)
        xn = model.step(X[t], U[t])
        if not np.isfinite(xn).all() or np.abs(xn).max() > DIVERGENCE_NORM:
            return Trajectory(X=X, U=U, J=math.inf)
        X[t + 1] = xn
    return Trajectory(X=X, U=U, J=trajectory_cost(spec, X, U))


def optimise_iteration(model: DynamicsModel, spec: CostSpec, x0: np.ndarray,
                       U: np.ndarray, dofset: DofSet, *,
                       alphas: Sequence[float] = LINE_SEARCH_ALPHAS,
                       reg_init: float = REG_INIT,
                       reg_max_doublings: int = REG_MAX_DOUBLINGS,
                       eps_state: float = DEFAULT_EPS_STATE,
                       eps_ctrl: float = DEFAULT_EPS_CTRL,
                       central: bool = False,
                       ) -> Tuple[np.ndarray, Optional[GainSchedule], OptimiserStats]:
    """One iLQR improvement attempt over the active DoF set.

    Returns the (possibly unchanged) control sequence, the gain schedule
    computed around the nominal (``None`` only if the backward pass
    failed outright), and evaluation statistics. The first line-search
    candidate that lowers the nominal cost is accepted; if none does,
    the input controls are returned unchanged.
    """
    t_start = time.perf_counter()
    U = np.asarray(U, dtype=float)
    T = U.shape[0]
    stats = OptimiserStats()

    X, ok = rollout_nominal(model, x0, U)
    stats.rollout_evals += T
    if not ok:
        stats.cost_before = math.inf
        stats.cost_after = math.inf
        stats.backward_failed = True
        stats.dynamics_evals = stats.derivative_evals + stats.rollout_evals
        stats.wallclock = time.perf_counter() - t_start
        return U, None, stats
    J_nom = trajectory_cost(spec, X, U)
    stats.cost_before = J_nom
    nominal = Trajectory(X=X, U=U, J=J_nom)

    lin, deriv_evals = linearize_trajectory(model, X, U, dofset,
                                            eps_state, eps_ctrl, central)
    stats.derivative_evals = deriv_evals
    expansions, terminal = expansions_trajectory(spec, X, U, dofset)

    gains = None
    reg = reg_init
    for _ in range(reg_max_doublings + 1):
        gains = backward_pass(lin, expansions, terminal, reg, dofset)
        if gains is not None:
            break
        reg *= 2.0
    stats.regularization = reg
    if gains is None:
        stats.backward_failed = True
        stats.cost_after = J_nom
        stats.dynamics_evals = stats.derivative_evals + stats.rollout_evals
        stats.wallclock = time.perf_counter() - t_start
        return U, None, stats

    U_out = U
    J_out = J_nom
    for alpha in alphas:
        cand = forward_rollout(model, spec, nominal, gains, alpha, dofset)
        stats.rollout_evals += T
        if cand.J < J_nom:
            U_out = cand.U
            J_out = cand.J
            stats.accepted_alpha = alpha
            break
    stats.cost_after = J_out
    stats.dynamics_evals = stats.derivative_evals + stats.rollout_evals
    stats.wallclock = time.perf_counter() - t_start
    return U_out, gains, stats
