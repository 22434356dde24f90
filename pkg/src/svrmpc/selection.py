"""DoF importance scoring and active-set update policies.

The feedback gain matrices map state deviation to control correction;
a DoF whose gain columns stay small over the whole horizon cannot
meaningfully change the computed controls, so it is a candidate for
removal. Two scoring methods are provided: direct column magnitude
summing, and projection onto the leading right singular vectors of each
gain matrix. Scores are divided by the horizon so thresholds transfer
across horizon lengths.

Both formulas sum absolute values by default: signed sums would let
large positive and negative gains cancel and misclassify an important
DoF. ``signed=True`` restores the literal signed sums.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import FrozenSet, Iterable, Optional, Tuple

import numpy as np

from .cost import CostSpec, dofs_in_cost
from .optimizer import GainSchedule
from .statespace import DofLayout, DofSet

METHODS = ("baseline-full", "random", "naive", "svr-sum", "svr-svd")
SVR_METHODS = ("svr-sum", "svr-svd")


@dataclass(frozen=True)
class SelectionPolicy:
    """Which DoFs the planner keeps, and the knobs of the update rule.

    ``theta`` is the number of DoFs randomly reintroduced per iteration
    (for ``random``, the preset sample size); ``rho`` the removal
    threshold; ``svd_rank`` how many leading singular values the SVD
    scoring uses.
    """

    method: str = "baseline-full"
    theta: int = 0
    rho: float = 0.0
    svd_rank: int = 3
    seed: int = 0
    signed_importance: bool = False

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; "
                             f"expected one of {METHODS}")
        if self.theta < 0 or self.rho < 0 or self.svd_rank < 1:
            raise ValueError("theta, rho must be >= 0 and svd_rank >= 1")


@dataclass(frozen=True)
class ImportanceScores:
    """Per-DoF importance, aligned with ``dofset.members``."""

    dofset: DofSet
    values: np.ndarray

    def value_for(self, dof: int) -> float:
        return float(self.values[self.dofset.rank(dof)])


def importance_sum(gains: GainSchedule, signed: bool = False) -> ImportanceScores:
    """Mean gain-column magnitude per DoF.

    Sums |K_t(p, j)| + |K_t(p, j + c)| over controls p and timesteps t,
    divided by the horizon; signed mode drops the absolute values.
    """
    K = gains.K  # (T, m, 2c)
    T = K.shape[0]
    c = K.shape[2] // 2
    if T == 0:
        raise ValueError("empty gain schedule")
    pos = K[:, :, :c]
    vel = K[:, :, c:]
    if signed:
        contrib = pos + vel
    else:
        contrib = np.abs(pos) + np.abs(vel)
    values = contrib.sum(axis=(0, 1)) / T
    return ImportanceScores(dofset=gains.dofset, values=values)


def importance_svd(gains: GainSchedule, rank: int = 3,
                   signed: bool = False) -> ImportanceScores:
    """Importance from the leading right singular vectors of each gain.

    For each timestep the gain matrix is decomposed as ``U S V^T``; the
    score of DoF j accumulates ``|v_n[j] + v_n[j + c]| * s_n`` over the
    ``rank`` largest singular values (``rank`` is clamped to the matrix
    rank bound). Singular vectors are sign-normalised (largest-magnitude
    component made positive) so results do not depend on the SVD
    implementation's sign choices.

    Raises ``np.linalg.LinAlgError`` if a decomposition fails; callers
    fall back to :func:`importance_sum` for that iteration.
    """
    K = gains.K
    T, m, c2 = K.shape
    c = c2 // 2
    if T == 0:
        raise ValueError("empty gain schedule")
    g = min(rank, m, c2)
    values = np.zeros(c)
    for t in range(T):
        _, s, vt = np.linalg.svd(K[t], full_matrices=False)
        for n in range(min(g, s.shape[0])):
            v = vt[n]
            peak = np.argmax(np.abs(v))
            if v[peak] < 0:
                v = -v
            pair = v[:c] + v[c:]
            if signed:
                values += pair * s[n]
            else:
                values += np.abs(pair) * s[n]
    return ImportanceScores(dofset=gains.dofset, values=values / T)


def score_importance(gains: GainSchedule, policy: SelectionPolicy) -> ImportanceScores:
    """Dispatch on the policy's scoring method, honouring its flags."""
    if policy.method == "svr-svd":
        try:
            return importance_svd(gains, policy.svd_rank,
                                  signed=policy.signed_importance)
        except np.linalg.LinAlgError:
            return importance_sum(gains, signed=policy.signed_importance)
    return importance_sum(gains, signed=policy.signed_importance)


def identify_dofs_to_remove(scores: ImportanceScores, policy: SelectionPolicy,
                            layout: Optional[DofLayout] = None) -> FrozenSet[int]:
    """DoFs scoring strictly below the threshold, robot DoFs exempt."""
    layout = layout if layout is not None else scores.dofset.layout
    q = layout.robot_dofs
    out = set()
    for j, dof in enumerate(scores.dofset.members):
        if dof >= q and scores.values[j] < policy.rho:
            out.add(dof)
    return frozenset(out)


def identify_dofs_to_add(complement: Iterable[int], theta: int,
                         rng: np.random.Generator) -> Tuple[int, ...]:
    """Uniform sample without replacement from the inactive DoFs.

    Deterministic under a fixed generator state; draws nothing (and does
    not advance the generator) when the sample size is zero.
    """
    pool = sorted(complement)
    n = min(theta, len(pool))
    if n == 0:
        return ()
    picked = rng.choice(len(pool), size=n, replace=False)
    return tuple(sorted(pool[i] for i in picked))


def initial_set(policy: SelectionPolicy, layout: DofLayout,
                spec: Optional[CostSpec] = None,
                rng: Optional[np.random.Generator] = None) -> DofSet:
    """Starting active set for each method.

    Full-state methods (and both adaptive ones) start from every DoF;
    ``naive`` fixes the set to robot DoFs plus every DoF with nonzero
    cost weight; ``random`` draws its preset-size sample (and is
    expected to be resampled by the caller every iteration).
    """
    if policy.method in ("baseline-full", "svr-sum", "svr-svd"):
        return DofSet.full(layout)
    if policy.method == "naive":
        flags = layout.in_cost
        if flags is None:
            if spec is None:
                raise ValueError("naive selection needs cost flags or a CostSpec")
            flags = dofs_in_cost(spec, layout)
        members = tuple(j for j in range(layout.total)
                        if j < layout.robot_dofs or flags[j])
        return DofSet(layout, members)
    if policy.method == "random":
        if rng is None:
            rng = np.random.default_rng(policy.seed)
        robot = tuple(range(layout.robot_dofs))
        pool = tuple(range(layout.robot_dofs, layout.total))
        picked = identify_dofs_to_add(pool, policy.theta, rng)
        return DofSet(layout, robot + picked)
    raise ValueError(f"unknown method {policy.method!r}")
