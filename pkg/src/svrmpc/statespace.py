"""Degree-of-freedom bookkeeping: full and reduced state index maps.

A system is described by a :class:`DofLayout`: robot DoFs first (indices
``0 .. robot_dofs-1``), then the DoFs of each body in declaration order.
The state vector stacks one position per DoF followed by one velocity per
DoF, so a layout with ``n`` DoFs has state dimension ``2n``: the position
of DoF ``j`` sits at index ``j`` and its velocity at ``j + n``.

A :class:`DofSet` is the ordered subset of DoFs the optimiser currently
plans over. Robot DoFs are never allowed to leave the set.
"""

from __future__ import annotations

from bisect import bisect_left
from dataclasses import dataclass, replace
from functools import cached_property
from typing import Iterable, Optional, Sequence, Tuple

import numpy as np


@dataclass(frozen=True)
class DofLayout:
    """The DoF universe of a system.

    Args:
        robot_dofs: number of actuated robot DoFs (unremovable).
        bodies: ``(name, dof_count)`` per body, in state-vector order.
        in_cost: optional per-DoF flag marking DoFs with nonzero weight in
            the running or terminal cost. ``None`` until a cost is bound.
    """

    robot_dofs: int
    bodies: Tuple[Tuple[str, int], ...] = ()
    in_cost: Optional[Tuple[bool, ...]] = None

    def __post_init__(self):
        if self.robot_dofs < 0:
            raise ValueError("robot_dofs must be >= 0")
        for name, count in self.bodies:
            if count <= 0:
                raise ValueError(f"body {name!r} has non-positive dof count")
        if self.in_cost is not None and len(self.in_cost) != self.total:
            raise ValueError("in_cost length must equal total DoF count")

    @property
    def total(self) -> int:
        return self.robot_dofs + sum(c for _, c in self.bodies)

    @property
    def state_dim(self) -> int:
        return 2 * self.total

    def body_dof_range(self, body_index: int) -> Tuple[int, int]:
        """(first DoF index, dof count) of the body at ``body_index``."""
        start = self.robot_dofs
        for i, (_, count) in enumerate(self.bodies):
            if i == body_index:
                return start, count
            start += count
        raise IndexError(f"no body at index {body_index}")

    def body_index(self, name: str) -> int:
        for i, (body_name, _) in enumerate(self.bodies):
            if body_name == name:
                return i
        raise KeyError(f"no body named {name!r}")

    def with_cost_flags(self, flags: Sequence[bool]) -> "DofLayout":
        return replace(self, in_cost=tuple(bool(f) for f in flags))


def total_dofs(layout: DofLayout) -> int:
    """Robot DoFs plus the DoFs of every body."""
    return layout.total


@dataclass(frozen=True)
class DofSet:
    """An ordered subset of a layout's DoFs (the optimiser's active set).

    Members are unique, sorted ascending, and always contain every robot
    DoF; this is checked at construction.
    """

    layout: DofLayout
    members: Tuple[int, ...]

    def __post_init__(self):
        members = tuple(sorted(set(int(m) for m in self.members)))
        object.__setattr__(self, "members", members)
        n = self.layout.total
        if members and (members[0] < 0 or members[-1] >= n):
            raise ValueError("DoF index outside layout")
        missing = [q for q in range(self.layout.robot_dofs) if q not in set(members)]
        if missing:
            raise ValueError(f"robot DoFs {missing} missing from DofSet")

    @classmethod
    def full(cls, layout: DofLayout) -> "DofSet":
        return cls(layout, tuple(range(layout.total)))

    @classmethod
    def robot_only(cls, layout: DofLayout) -> "DofSet":
        return cls(layout, tuple(range(layout.robot_dofs)))

    @property
    def size(self) -> int:
        return len(self.members)

    @property
    def state_dim(self) -> int:
        return 2 * len(self.members)

    @property
    def is_full(self) -> bool:
        return len(self.members) == self.layout.total

    def complement(self) -> Tuple[int, ...]:
        inside = set(self.members)
        return tuple(j for j in range(self.layout.total) if j not in inside)

    @cached_property
    def state_indices(self) -> np.ndarray:
        """Full-state indices of this set's reduced state, positions first."""
        n = self.layout.total
        idx = np.empty(2 * len(self.members), dtype=np.int64)
        idx[: len(self.members)] = self.members
        idx[len(self.members):] = np.asarray(self.members, dtype=np.int64) + n
        return idx

    def __contains__(self, dof: int) -> bool:
        i = bisect_left(self.members, dof)
        return i < len(self.members) and self.members[i] == dof

    def rank(self, dof: int) -> int:
        """Position of ``dof`` within the sorted member list."""
        i = bisect_left(self.members, dof)
        if i == len(self.members) or self.members[i] != dof:
            raise KeyError(f"DoF {dof} not in set")
        return i

    def with_added(self, dofs: Iterable[int]) -> "DofSet":
        return DofSet(self.layout, self.members + tuple(dofs))

    def with_removed(self, dofs: Iterable[int]) -> "DofSet":
        drop = set(dofs)
        bad = [d for d in drop if d < self.layout.robot_dofs]
        if bad:
            raise ValueError(f"cannot remove robot DoFs {bad}")
        return DofSet(self.layout, tuple(m for m in self.members if m not in drop))


def reduced_index(dofset: DofSet, dof: int, kind: str) -> int:
    """Index of a DoF's position or velocity element in the reduced state."""
    r = dofset.rank(dof)
    if kind == "position":
        return r
    if kind == "velocity":
        return r + dofset.size
    raise ValueError(f"kind must be 'position' or 'velocity', got {kind!r}")


def gather(state: np.ndarray, dofset: DofSet) -> np.ndarray:
    """Project a full state onto the reduced coordinates of ``dofset``."""
    state = np.asarray(state, dtype=float)
    if state.shape != (dofset.layout.state_dim,):
        raise ValueError(
            f"state has shape {state.shape}, layout expects "
            f"({dofset.layout.state_dim},)"
        )
    return state[dofset.state_indices]


def scatter(reduced: np.ndarray, dofset: DofSet, base: np.ndarray) -> np.ndarray:
    """Write reduced coordinates back into a copy of a full state."""
    reduced = np.asarray(reduced, dtype=float)
    if reduced.shape != (dofset.state_dim,):
        raise ValueError("reduced state length mismatch")
    out = np.array(base, dtype=float, copy=True)
    out[dofset.state_indices] = reduced
    return out


def subset_state_indices(inner: DofSet, outer: DofSet) -> np.ndarray:
    """Indices of ``inner``'s state elements within ``outer``'s reduced state.

    Requires ``inner.members`` to be a subset of ``outer.members``; then
    ``gather(x, inner) == gather(x, outer)[subset_state_indices(inner, outer)]``.
    """
    ranks = np.array([outer.rank(d) for d in inner.members], dtype=np.int64)
    return np.concatenate([ranks, ranks + outer.size])
