"""Quadratic running/terminal costs and their reduced-space expansions.

Costs are always evaluated over the full state: removing a DoF from the
optimiser's active set changes which derivatives get computed, never the
cost of a trajectory. Weight matrices are diagonal and stored as
vectors. Expansions carry the factor of two from differentiating the
quadratic form; the backward pass consumes them as-is.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from .statespace import DofLayout, DofSet


@dataclass(frozen=True)
class CostSpec:
    """Diagonal quadratic cost weights and the desired state.

    ``desired`` is either a single target state (constant over time) or a
    ``(K, 2n)`` array indexed by timestep and clamped at its last row.
    """

    state_weights: np.ndarray     # (2n,) diagonal of the running state cost
    control_weights: np.ndarray   # (m,)
    terminal_weights: np.ndarray  # (2n,)
    desired: np.ndarray           # (2n,) or (K, 2n)

    def __post_init__(self):
        for name in ("state_weights", "control_weights", "terminal_weights",
                     "desired"):
            object.__setattr__(self, name,
                               np.asarray(getattr(self, name), dtype=float))
        n2 = self.state_weights.shape[0]
        if self.terminal_weights.shape != (n2,):
            raise ValueError("terminal_weights shape mismatch")
        if self.desired.ndim == 1:
            if self.desired.shape != (n2,):
                raise ValueError("desired shape mismatch")
        elif self.desired.ndim != 2 or self.desired.shape[1] != n2:
            raise ValueError("desired must be (2n,) or (K, 2n)")
        if (self.state_weights < 0).any() or (self.control_weights < 0).any() \
                or (self.terminal_weights < 0).any():
            raise ValueError("cost weights must be non-negative")

    @property
    def state_dim(self) -> int:
        return self.state_weights.shape[0]

    @property
    def control_dim(self) -> int:
        return self.control_weights.shape[0]

    def desired_at(self, t: int) -> np.ndarray:
        if self.desired.ndim == 1:
            return self.desired
        return self.desired[min(t, self.desired.shape[0] - 1)]


def running_cost(spec: CostSpec, x: np.ndarray, u: np.ndarray, t: int = 0) -> float:
    """(x - x_des)' W (x - x_des) + u' R u over the full state."""
    d = x - spec.desired_at(t)
    return float(np.dot(spec.state_weights * d, d)
                 + np.dot(spec.control_weights * u, u))


def terminal_cost(spec: CostSpec, x: np.ndarray, t: int = 0) -> float:
    d = x - spec.desired_at(t)
    return float(np.dot(spec.terminal_weights * d, d))


def trajectory_cost(spec: CostSpec, X: Sequence[np.ndarray],
                    U: Sequence[np.ndarray]) -> float:
    """Total cost of a planned trajectory: running terms plus terminal."""
    if len(X) != len(U) + 1:
        raise ValueError(f"need len(X) == len(U) + 1, got {len(X)}, {len(U)}")
    total = terminal_cost(spec, X[len(U)], len(U))
    for t in range(len(U)):
        total += running_cost(spec, X[t], U[t], t)
    return total


def mpc_cost(spec: CostSpec, executed_states: Sequence[np.ndarray],
             executed_controls: Sequence[np.ndarray]) -> float:
    """Cost of the sequence actually executed by the agent.

    Same form as :func:`trajectory_cost` but summed over the whole
    execution rather than the optimisation horizon.
    """
    if len(executed_states) != len(executed_controls) + 1:
        raise ValueError("need len(states) == len(controls) + 1")
    Y = len(executed_controls)
    total = terminal_cost(spec, executed_states[Y], Y)
    for t in range(Y):
        total += running_cost(spec, executed_states[t], executed_controls[t], t)
    return total


@dataclass(frozen=True)
class CostExpansion:
    """First/second-order cost derivatives over reduced coordinates."""

    l_x: np.ndarray   # (2c,)
    l_xx: np.ndarray  # (2c, 2c)
    l_u: np.ndarray   # (m,)
    l_uu: np.ndarray  # (m, m)


def expansion_reduced(spec: CostSpec, x: np.ndarray, u: np.ndarray,
                      t: int, dofset: DofSet) -> CostExpansion:
    """Running-cost expansion restricted to the reduced coordinates."""
    idx = dofset.state_indices
    d = x[idx] - spec.desired_at(t)[idx]
    w = spec.state_weights[idx]
    return CostExpansion(
        l_x=2.0 * w * d,
        l_xx=np.diag(2.0 * w),
        l_u=2.0 * spec.control_weights * u,
        l_uu=np.diag(2.0 * spec.control_weights),
    )


def terminal_expansion_reduced(spec: CostSpec, x: np.ndarray, t: int,
                               dofset: DofSet) -> CostExpansion:
    """Terminal-cost expansion; control blocks are zero by definition."""
    idx = dofset.state_indices
    d = x[idx] - spec.desired_at(t)[idx]
    w = spec.terminal_weights[idx]
    m = spec.control_dim
    return CostExpansion(
        l_x=2.0 * w * d,
        l_xx=np.diag(2.0 * w),
        l_u=np.zeros(m),
        l_uu=np.zeros((m, m)),
    )


def expansions_trajectory(spec: CostSpec, X: np.ndarray, U: np.ndarray,
                          dofset: DofSet) -> Tuple[List[CostExpansion], CostExpansion]:
    """All running expansions along a trajectory plus the terminal one.

    Equivalent to calling :func:`expansion_reduced` per timestep; batched
    because the diagonal structure makes the second-order blocks constant.
    """
    T = U.shape[0]
    idx = dofset.state_indices
    w = spec.state_weights[idx]
    l_xx = np.diag(2.0 * w)
    l_uu = np.diag(2.0 * spec.control_weights)
    out = []
    for t in range(T):
        d = X[t][idx] - spec.desired_at(t)[idx]
        out.append(CostExpansion(l_x=2.0 * w * d, l_xx=l_xx,
                                 l_u=2.0 * spec.control_weights * U[t],
                                 l_uu=l_uu))
    return out, terminal_expansion_reduced(spec, X[T], T, dofset)


def dofs_in_cost(spec: CostSpec, layout: DofLayout) -> Tuple[bool, ...]:
    """Per-DoF flag: nonzero weight on its position or velocity element
    in either the running or the terminal cost."""
    n = layout.total
    if spec.state_dim != 2 * n:
        raise ValueError("cost dimensions do not match layout")
    w = spec.state_weights
    wf = spec.terminal_weights
    return tuple(bool(w[j] != 0 or w[j + n] != 0
                      or wf[j] != 0 or wf[j + n] != 0) for j in range(n))
