"""Discrete-time dynamics models and reduced finite-difference Jacobians.

Three analytic planar models are built in (a cluttered pushing scene, a
deformable lattice, and a lattice with a rigid goal object); all share
the penalty-contact world implemented by the kernel backends. Arbitrary
models can be wrapped in :class:`DynamicsModel` as long as ``step`` is a
deterministic map from (full state, control) to the next full state.

Linearization perturbs individual full-state coordinates while holding
everything else at the nominal, steps the full model, and gathers the
response through the same reduced coordinates, so a reduced set of size
``c`` costs ``2c + m`` perturbed evaluations per timestep instead of
``2n + m``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from . import _kernels
from .statespace import DofLayout, DofSet

DEFAULT_EPS_STATE = 1e-6
DEFAULT_EPS_CTRL = 1e-6


@dataclass(frozen=True)
class PlanarParams:
    """Kernel parameters of the planar pushing world (see ``_kernels``)."""

    n_discs: int
    n_particles: int
    pusher_radius: float
    particle_radius: float
    disc_radius: np.ndarray
    edges: np.ndarray
    rest_len: np.ndarray
    spring_k: float
    spring_c: float
    contact_k: float
    contact_c: float
    lin_damping: float
    rot_damping: float
    arena_half: float
    dt: float
    inv_mass: np.ndarray

    @property
    def n_pos(self) -> int:
        return 2 + 3 * self.n_discs + 2 * self.n_particles

    def step_args(self) -> tuple:
        return (self.dt, self.n_discs, self.n_particles,
                self.pusher_radius, self.disc_radius, self.particle_radius,
                self.edges, self.rest_len, self.spring_k, self.spring_c,
                self.contact_k, self.contact_c,
                self.lin_damping, self.rot_damping,
                self.arena_half, self.inv_mass)


@dataclass(frozen=True)
class LinearizedDynamics:
    """Reduced Jacobians of one timestep: ``x'^C ~ A x^C + B u``."""

    A: np.ndarray  # (2c, 2c)
    B: np.ndarray  # (2c, m)
    eval_count: int  # perturbed step evaluations, excludes the shared nominal


@dataclass(frozen=True)
class DynamicsModel:
    """A discrete-time dynamics model over a :class:`DofLayout`.

    ``step_fn`` must be deterministic and return a fresh array of the
    same length. ``linearizer``, when present, is a fast finite-difference
    hook with the same arithmetic as the generic path (the built-in
    models use the kernel backend for it).
    """

    name: str
    layout: DofLayout
    control_dim: int
    timestep: float
    step_fn: Callable[[np.ndarray, np.ndarray], np.ndarray]
    initial_state: np.ndarray
    linearizer: Optional[Callable] = None
    params: Optional[PlanarParams] = None

    def step(self, x: np.ndarray, u: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        u = np.asarray(u, dtype=float)
        if x.shape != (self.layout.state_dim,):
            raise ValueError(f"state shape {x.shape} != ({self.layout.state_dim},)")
        if u.shape != (self.control_dim,):
            raise ValueError(f"control shape {u.shape} != ({self.control_dim},)")
        if not np.isfinite(x).all() or not np.isfinite(u).all():
            raise ValueError("non-finite state or control")
        return self.step_fn(x, u)

    def without_linearizer(self) -> "DynamicsModel":
        """Copy that always uses the generic per-step differencing path."""
        return DynamicsModel(self.name, self.layout, self.control_dim,
                             self.timestep, self.step_fn, self.initial_state,
                             linearizer=None, params=self.params)


def linearize_reduced(model: DynamicsModel, x: np.ndarray, u: np.ndarray,
                      dofset: DofSet, eps_state: float = DEFAULT_EPS_STATE,
                      eps_ctrl: float = DEFAULT_EPS_CTRL,
                      central: bool = False,
                      x_next: Optional[np.ndarray] = None) -> LinearizedDynamics:
    """Finite-difference Jacobians of one timestep over ``dofset``.

    ``x_next`` is the nominal next state; when omitted it is evaluated
    here (one extra step that does not count toward ``eval_count``).
    """
    if eps_state <= 0 or eps_ctrl <= 0:
        raise ValueError("finite-difference epsilons must be positive")
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    if x_next is None and not central:
        x_next = model.step(x, u)
    idx = dofset.state_indices
    nc2 = idx.shape[0]
    m = model.control_dim
    A = np.empty((nc2, nc2))
    B = np.empty((nc2, m))
    if model.linearizer is not None:
        nominal = x_next if x_next is not None else x  # unused when central
        evals = model.linearizer(x, u, nominal, idx, eps_state, eps_ctrl,
                                 central, A, B)
    else:
        evals = _generic_linearize(model, x, u, x_next, idx, eps_state,
                                   eps_ctrl, central, A, B)
    return LinearizedDynamics(A=A, B=B, eval_count=evals)


def _generic_linearize(model, x, u, x_next, idx, eps_state, eps_ctrl,
                       central, A_out, B_out) -> int:
    evals = 0
    for j in range(idx.shape[0]):
        xp = x.copy()
        xp[idx[j]] += eps_state
        hi = model.step(xp, u)
        if central:
            xm = x.copy()
            xm[idx[j]] -= eps_state
            lo = model.step(xm, u)
            A_out[:, j] = (hi[idx] - lo[idx]) / (2.0 * eps_state)
            evals += 2
        else:
            A_out[:, j] = (hi[idx] - x_next[idx]) / eps_state
            evals += 1
    for k in range(u.shape[0]):
        up = u.copy()
        up[k] += eps_ctrl
        hi = model.step(x, up)
        if central:
            um = u.copy()
            um[k] -= eps_ctrl
            lo = model.step(x, um)
            B_out[:, k] = (hi[idx] - lo[idx]) / (2.0 * eps_ctrl)
            evals += 2
        else:
            B_out[:, k] = (hi[idx] - x_next[idx]) / eps_ctrl
            evals += 1
    return evals


def linearize_trajectory(model: DynamicsModel, X: np.ndarray, U: np.ndarray,
                         dofset: DofSet,
                         eps_state: float = DEFAULT_EPS_STATE,
                         eps_ctrl: float = DEFAULT_EPS_CTRL,
                         central: bool = False) -> Tuple[List[LinearizedDynamics], int]:
    """Per-timestep reduced Jacobians along a consistent trajectory.

    Reuses ``X[t+1]`` as the nominal next state, so the perturbed
    evaluation total is exactly ``T * (2|C| + m)`` under forward
    differences.
    """
    T = U.shape[0]
    out = []
    total = 0
    for t in range(T):
        lin = linearize_reduced(model, X[t], U[t], dofset, eps_state,
                                eps_ctrl, central, x_next=X[t + 1])
        out.append(lin)
        total += lin.eval_count
    return out, total


# ---------------------------------------------------------------------------
# Built-in models
# ---------------------------------------------------------------------------


def _planar_model(name: str, layout: DofLayout, params: PlanarParams,
                  initial_state: np.ndarray) -> DynamicsModel:
    args = params.step_args()

    def step_fn(x, u):
        out = np.empty_like(x)
        _kernels.planar_step(x, u, out, *args)
        return out

    def linearizer(x, u, x_next, idx, eps_s, eps_c, central, A_out, B_out):
        return _kernels.planar_linearize(x, u, x_next, idx, eps_s, eps_c,
                                         central, A_out, B_out, *args)

    return DynamicsModel(name=name, layout=layout, control_dim=2,
                         timestep=params.dt, step_fn=step_fn,
                         initial_state=initial_state,
                         linearizer=linearizer, params=params)


def _check_layout_overlaps(centers: Sequence[Tuple[float, float]],
                           radii: Sequence[float], margin: float) -> None:
    for i in range(len(centers)):
        for j in range(i + 1, len(centers)):
            dx = centers[i][0] - centers[j][0]
            dy = centers[i][1] - centers[j][1]
            if math.hypot(dx, dy) < radii[i] + radii[j] + margin:
                raise ValueError(
                    f"initial penetration between bodies {i} and {j}")


def make_clutter_model(num_objects: int = 8, *, seed: int = 0,
                       timestep: float = 0.004,
                       pusher_radius: float = 0.05, pusher_mass: float = 1.0,
                       object_radius: float = 0.06, object_mass: float = 0.5,
                       contact_stiffness: float = 1200.0,
                       contact_damping: float = 10.0,
                       lin_damping: float = 1.2, rot_damping: float = 0.005,
                       arena_half: float = 0.6,
                       pusher_start: Tuple[float, float] = (-0.30, 0.0),
                       start_gap: float = 0.001,
                       object_positions: Optional[Sequence[Tuple[float, float]]] = None,
                       placement_margin: float = 0.01) -> DynamicsModel:
    """Planar pushing scene: actuated pusher disc plus free discs.

    Disc 0 is the conventional goal object and starts directly ahead of
    the pusher (separated by ``start_gap``); the remaining discs are
    placed by seeded rejection sampling with no initial overlaps.
    ``object_positions`` overrides the placement entirely (still checked
    for penetration).
    """
    if num_objects < 1:
        raise ValueError("num_objects must be >= 1")
    radii = np.full(num_objects, float(object_radius))
    masses = np.full(num_objects, float(object_mass))
    inertia = 0.5 * masses * radii ** 2

    if object_positions is not None:
        if len(object_positions) != num_objects:
            raise ValueError("object_positions length mismatch")
        centers = [tuple(map(float, c)) for c in object_positions]
    else:
        centers = [(pusher_start[0] + pusher_radius + radii[0] + start_gap,
                    pusher_start[1])]
        rng = np.random.default_rng(seed)
        lim = arena_half - object_radius - 0.02
        placed = [(pusher_start, pusher_radius), (centers[0], radii[0])]
        for k in range(1, num_objects):
            for _ in range(10_000):
                cand = (float(rng.uniform(-lim, lim)),
                        float(rng.uniform(-lim, lim)))
                ok = all(math.hypot(cand[0] - c[0], cand[1] - c[1])
                         >= r + radii[k] + placement_margin
                         for (c, r) in placed)
                if ok:
                    break
            else:
                raise ValueError("could not place objects without overlap; "
                                 "arena too crowded")
            centers.append(cand)
            placed.append((cand, radii[k]))
    _check_layout_overlaps([pusher_start] + centers,
                           [pusher_radius] + list(radii), 0.0)

    layout = DofLayout(robot_dofs=2,
                       bodies=tuple((f"object{k}", 3) for k in range(num_objects)))
    n_pos = 2 + 3 * num_objects
    inv_mass = np.empty(n_pos)
    inv_mass[0] = inv_mass[1] = 1.0 / pusher_mass
    for k in range(num_objects):
        inv_mass[2 + 3 * k] = inv_mass[2 + 3 * k + 1] = 1.0 / masses[k]
        inv_mass[2 + 3 * k + 2] = 1.0 / inertia[k]

    x0 = np.zeros(2 * n_pos)
    x0[0], x0[1] = pusher_start
    for k, (cx, cy) in enumerate(centers):
        x0[2 + 3 * k] = cx
        x0[2 + 3 * k + 1] = cy

    params = PlanarParams(
        n_discs=num_objects, n_particles=0,
        pusher_radius=float(pusher_radius), particle_radius=0.0,
        disc_radius=radii, edges=np.zeros((0, 2), dtype=np.int64),
        rest_len=np.zeros(0), spring_k=0.0, spring_c=0.0,
        contact_k=float(contact_stiffness), contact_c=float(contact_damping),
        lin_damping=float(lin_damping), rot_damping=float(rot_damping),
        arena_half=float(arena_half), dt=float(timestep), inv_mass=inv_mass)
    return _planar_model("clutter", layout, params, x0)


def _grid_shape(particles: int) -> Tuple[int, int]:
    rows = int(math.isqrt(particles))
    while particles % rows != 0:
        rows -= 1
    return rows, particles // rows


def _lattice(particles: int, topology: str, spacing: float,
             origin: Tuple[float, float]):
    """Particle positions and spring edges for a chain or grid lattice."""
    if topology == "chain":
        pos = [(origin[0], origin[1] + i * spacing) for i in range(particles)]
        edges = [(i, i + 1) for i in range(particles - 1)]
    elif topology == "grid":
        rows, cols = _grid_shape(particles)
        pos = [(origin[0] + c * spacing, origin[1] + r * spacing)
               for r in range(rows) for c in range(cols)]
        edges = []
        for r in range(rows):
            for c in range(cols):
                i = r * cols + c
                if c + 1 < cols:
                    edges.append((i, i + 1))
                if r + 1 < rows:
                    edges.append((i, i + cols))
                if r + 1 < rows and c + 1 < cols:  # shear springs
                    edges.append((i, i + cols + 1))
                    edges.append((i + 1, i + cols))
    else:
        raise ValueError(f"unknown topology {topology!r}")

    # reject disconnected lattices (defensive; a well-formed chain/grid
    # is always connected)
    parent = list(range(particles))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for i, j in edges:
        parent[find(i)] = find(j)
    if particles > 0 and len({find(i) for i in range(particles)}) != 1:
        raise ValueError("lattice topology is disconnected")

    edge_arr = np.array(edges, dtype=np.int64).reshape(-1, 2)
    rest = np.array([math.hypot(pos[i][0] - pos[j][0], pos[i][1] - pos[j][1])
                     for i, j in edges])
    return pos, edge_arr, rest


def make_softbody_model(particles: int = 36, topology: str = "grid", *,
                        seed: int = 0,
                        timestep: float = 0.004,
                        spring_stiffness: float = 120.0,
                        spring_damping: float = 1.5,
                        particle_mass: float = 0.12,
                        particle_radius: float = 0.02,
                        spacing: float = 0.05,
                        pusher_radius: float = 0.05, pusher_mass: float = 1.0,
                        contact_stiffness: float = 600.0,
                        contact_damping: float = 8.0,
                        lin_damping: float = 0.8, arena_half: float = 0.6,
                        start_gap: float = 0.001) -> DynamicsModel:
    """Deformable 2-D lattice pushed by the actuated disc.

    Grid lattices get structural plus shear springs; rest lengths are the
    construction distances. The pusher starts just left of the lattice,
    vertically centred; the seed jitters the lattice origin so trials
    differ.
    """
    if particles < 2:
        raise ValueError("particles must be >= 2")
    rng = np.random.default_rng(seed)
    jitter = (float(rng.uniform(-0.02, 0.02)), float(rng.uniform(-0.03, 0.03)))
    if topology == "grid":
        rows, cols = _grid_shape(particles)
        height = (rows - 1) * spacing
        origin = (-0.15 + jitter[0], -height / 2.0 + jitter[1])
    else:
        origin = (-0.15 + jitter[0],
                  -((particles - 1) * spacing) / 2.0 + jitter[1])
    pos, edges, rest = _lattice(particles, topology, spacing, origin)

    ys = [p[1] for p in pos]
    pusher_start = (origin[0] - particle_radius - pusher_radius - start_gap,
                    (min(ys) + max(ys)) / 2.0)

    layout = DofLayout(robot_dofs=2, bodies=(("softbody", 2 * particles),))
    n_pos = 2 + 2 * particles
    inv_mass = np.empty(n_pos)
    inv_mass[0] = inv_mass[1] = 1.0 / pusher_mass
    inv_mass[2:] = 1.0 / particle_mass

    x0 = np.zeros(2 * n_pos)
    x0[0], x0[1] = pusher_start
    for k, (px, py) in enumerate(pos):
        x0[2 + 2 * k] = px
        x0[2 + 2 * k + 1] = py

    params = PlanarParams(
        n_discs=0, n_particles=particles,
        pusher_radius=float(pusher_radius),
        particle_radius=float(particle_radius),
        disc_radius=np.zeros(0), edges=edges, rest_len=rest,
        spring_k=float(spring_stiffness), spring_c=float(spring_damping),
        contact_k=float(contact_stiffness), contact_c=float(contact_damping),
        lin_damping=float(lin_damping), rot_damping=0.0,
        arena_half=float(arena_half), dt=float(timestep), inv_mass=inv_mass)
    return _planar_model("softbody", layout, params, x0)


def make_soft_rigid_model(particles: int = 24, *, topology: str = "grid",
                          seed: int = 0,
                          timestep: float = 0.004,
                          spring_stiffness: float = 120.0,
                          spring_damping: float = 1.5,
                          particle_mass: float = 0.12,
                          particle_radius: float = 0.02,
                          spacing: float = 0.05,
                          pusher_radius: float = 0.05,
                          pusher_mass: float = 1.0,
                          object_radius: float = 0.06,
                          object_mass: float = 0.5,
                          contact_stiffness: float = 600.0,
                          contact_damping: float = 8.0,
                          lin_damping: float = 0.8,
                          rot_damping: float = 0.005,
                          arena_half: float = 0.6,
                          start_gap: float = 0.001) -> DynamicsModel:
    """Lattice wedged between the pusher and a rigid goal disc.

    The pusher must reason through the deformable body to move the disc:
    pusher, disc, and particles all interact through the same penalty
    contact law. The seed jitters the lattice origin so trials differ.
    """
    if particles < 2:
        raise ValueError("particles must be >= 2")
    rng = np.random.default_rng(seed)
    jitter = (float(rng.uniform(-0.02, 0.02)), float(rng.uniform(-0.03, 0.03)))
    if topology == "grid":
        rows, cols = _grid_shape(particles)
        width = (cols - 1) * spacing
        height = (rows - 1) * spacing
        origin = (-0.20 + jitter[0], -height / 2.0 + jitter[1])
    else:
        origin = (-0.20 + jitter[0],
                  -((particles - 1) * spacing) / 2.0 + jitter[1])
        width = 0.0
    pos, edges, rest = _lattice(particles, topology, spacing, origin)

    ys = [p[1] for p in pos]
    ymid = (min(ys) + max(ys)) / 2.0
    pusher_start = (origin[0] - particle_radius - pusher_radius - start_gap,
                    ymid)
    disc_start = (origin[0] + width + particle_radius + object_radius
                  + start_gap, ymid)

    layout = DofLayout(robot_dofs=2,
                       bodies=(("object0", 3), ("softbody", 2 * particles)))
    n_pos = 2 + 3 + 2 * particles
    inertia = 0.5 * object_mass * object_radius ** 2
    inv_mass = np.empty(n_pos)
    inv_mass[0] = inv_mass[1] = 1.0 / pusher_mass
    inv_mass[2] = inv_mass[3] = 1.0 / object_mass
    inv_mass[4] = 1.0 / inertia
    inv_mass[5:] = 1.0 / particle_mass

    x0 = np.zeros(2 * n_pos)
    x0[0], x0[1] = pusher_start
    x0[2], x0[3] = disc_start
    for k, (px, py) in enumerate(pos):
        x0[5 + 2 * k] = px
        x0[5 + 2 * k + 1] = py

    params = PlanarParams(
        n_discs=1, n_particles=particles,
        pusher_radius=float(pusher_radius),
        particle_radius=float(particle_radius),
        disc_radius=np.array([float(object_radius)]),
        edges=edges, rest_len=rest,
        spring_k=float(spring_stiffness), spring_c=float(spring_damping),
        contact_k=float(contact_stiffness), contact_c=float(contact_damping),
        lin_damping=float(lin_damping), rot_damping=float(rot_damping),
        arena_half=float(arena_half), dt=float(timestep), inv_mass=inv_mass)
    return _planar_model("soft_rigid", layout, params, x0)


def make_lti_model(A: np.ndarray, B: np.ndarray, *, timestep: float = 1.0,
                   name: str = "lti", robot_dofs: Optional[int] = None,
                   initial_state: Optional[np.ndarray] = None) -> DynamicsModel:
    """Exact linear model ``x' = A x + B u`` (mainly for tests/oracles).

    The state dimension must be even (position and velocity per DoF);
    by default every DoF is a robot DoF.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    n = A.shape[0]
    if A.shape != (n, n) or B.shape[0] != n or n % 2 != 0:
        raise ValueError("A must be square with even dimension, B conformable")
    total = n // 2
    q = total if robot_dofs is None else robot_dofs
    if not 0 <= q <= total:
        raise ValueError("robot_dofs out of range")
    bodies = (("lti_body", total - q),) if total > q else ()
    layout = DofLayout(robot_dofs=q, bodies=bodies)
    x0 = np.zeros(n) if initial_state is None else np.asarray(initial_state, dtype=float)

    def step_fn(x, u):
        return A @ x + B @ u

    return DynamicsModel(name=name, layout=layout, control_dim=B.shape[1],
                         timestep=timestep, step_fn=step_fn, initial_state=x0)
