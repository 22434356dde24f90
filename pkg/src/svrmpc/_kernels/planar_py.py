"""Pure-Python kernels for the planar pushing world.

Reference implementation of the hot loops. The compiled backend
(``_planar_cy``) mirrors this file operation for operation; with FMA
contraction disabled both backends produce bit-identical IEEE-754
results, which the test suite asserts.

World model
-----------
One actuated pusher disc (2 DoFs, force-controlled), ``n_discs`` free
rigid discs (x, y, yaw), ``n_particles`` lattice particles (x, y) joined
by damped springs. All bodies feel viscous ground damping and penalty
contact: normal force ``k*overlap + c*overlap_rate``, clamped at zero.
Square arena walls at ``+-arena_half`` use the same penalty law.
Integration is semi-implicit Euler (velocity first, then position).

State layout: positions for every coordinate, then velocities, with the
pusher first, then discs, then particles.
"""

from math import sqrt

import numpy as np


def planar_step(x, u, out, dt, n_discs, n_particles,
                pusher_radius, disc_radius, particle_radius,
                edges, rest_len, spring_k, spring_c,
                contact_k, contact_c, lin_damping, rot_damping,
                arena_half, inv_mass):
    """One dynamics step; writes the next full state into ``out``."""
    n_pos = 2 + 3 * n_discs + 2 * n_particles
    p = x[:n_pos].tolist()
    v = x[n_pos:].tolist()
    f = [0.0] * n_pos
    dr = disc_radius.tolist()
    im = inv_mass.tolist()
    part0 = 2 + 3 * n_discs

    # control force on the pusher
    f[0] = u[0]
    f[1] = u[1]

    # viscous damping, coordinate order
    f[0] -= lin_damping * v[0]
    f[1] -= lin_damping * v[1]
    for k in range(n_discs):
        b = 2 + 3 * k
        f[b] -= lin_damping * v[b]
        f[b + 1] -= lin_damping * v[b + 1]
        f[b + 2] -= rot_damping * v[b + 2]
    for k in range(n_particles):
        b = part0 + 2 * k
        f[b] -= lin_damping * v[b]
        f[b + 1] -= lin_damping * v[b + 1]

    # lattice springs (tension positive, damped along the axis)
    for e in range(edges.shape[0]):
        i = part0 + 2 * int(edges[e, 0])
        j = part0 + 2 * int(edges[e, 1])
        dx = p[i] - p[j]
        dy = p[i + 1] - p[j + 1]
        length = sqrt(dx * dx + dy * dy)
        if length < 1e-12:
            continue
        ex = dx / length
        ey = dy / length
        rate = (v[i] - v[j]) * ex + (v[i + 1] - v[j + 1]) * ey
        ten = spring_k * (length - rest_len[e]) + spring_c * rate
        f[i] -= ten * ex
        f[i + 1] -= ten * ey
        f[j] += ten * ex
        f[j + 1] += ten * ey

    def circle_contact(ia, ra, ib, rb):
        # penalty force between circles with position indices ia, ib
        dx = p[ia] - p[ib]
        dy = p[ia + 1] - p[ib + 1]
        rsum = ra + rb
        d2 = dx * dx + dy * dy
        if d2 >= rsum * rsum:
            return
        d = sqrt(d2)
        if d < 1e-12:
            return
        nx = dx / d
        ny = dy / d
        rate = -((v[ia] - v[ib]) * nx + (v[ia + 1] - v[ib + 1]) * ny)
        force = contact_k * (rsum - d) + contact_c * rate
        if force < 0.0:
            force = 0.0
        f[ia] += force * nx
        f[ia + 1] += force * ny
        f[ib] -= force * nx
        f[ib + 1] -= force * ny

    for k in range(n_discs):
        circle_contact(0, pusher_radius, 2 + 3 * k, dr[k])
    for k in range(n_particles):
        circle_contact(0, pusher_radius, part0 + 2 * k, particle_radius)
    for i in range(n_discs):
        for j in range(i + 1, n_discs):
            circle_contact(2 + 3 * i, dr[i], 2 + 3 * j, dr[j])
    for i in range(n_discs):
        for k in range(n_particles):
            circle_contact(2 + 3 * i, dr[i], part0 + 2 * k, particle_radius)

    def walls(ia, r):
        # four arena walls, same penalty law
        over = p[ia] + r - arena_half
        if over > 0.0:
            force = contact_k * over + contact_c * v[ia]
            if force < 0.0:
                force = 0.0
            f[ia] -= force
        over = r - p[ia] - arena_half
        if over > 0.0:
            force = contact_k * over + contact_c * (-v[ia])
            if force < 0.0:
                force = 0.0
            f[ia] += force
        over = p[ia + 1] + r - arena_half
        if over > 0.0:
            force = contact_k * over + contact_c * v[ia + 1]
            if force < 0.0:
                force = 0.0
            f[ia + 1] -= force
        over = r - p[ia + 1] - arena_half
        if over > 0.0:
            force = contact_k * over + contact_c * (-v[ia + 1])
            if force < 0.0:
                force = 0.0
            f[ia + 1] += force

    walls(0, pusher_radius)
    for k in range(n_discs):
        walls(2 + 3 * k, dr[k])
    for k in range(n_particles):
        walls(part0 + 2 * k, particle_radius)

    # semi-implicit Euler
    for i in range(n_pos):
        vn = v[i] + dt * f[i] * im[i]
        out[n_pos + i] = vn
        out[i] = p[i] + dt * vn


def planar_linearize(x, u, x_next, state_idx, eps_state, eps_ctrl, central,
                     A_out, B_out, dt, n_discs, n_particles,
                     pusher_radius, disc_radius, particle_radius,
                     edges, rest_len, spring_k, spring_c,
                     contact_k, contact_c, lin_damping, rot_damping,
                     arena_half, inv_mass):
    """Forward (or central) differences of one step over reduced coordinates.

    ``state_idx`` holds the full-state indices of the reduced coordinates;
    each is perturbed in turn and the resulting state change is gathered
    through the same indices. ``x_next`` is the unperturbed next state
    (unused in central mode). Returns the number of perturbed evaluations.
    """

    def step(xi, ui, oi):
        planar_step(xi, ui, oi, dt, n_discs, n_particles,
                    pusher_radius, disc_radius, particle_radius,
                    edges, rest_len, spring_k, spring_c,
                    contact_k, contact_c, lin_damping, rot_damping,
                    arena_half, inv_mass)

    n2 = x.shape[0]
    nc2 = state_idx.shape[0]
    m = u.shape[0]
    buf = np.empty(n2)
    buf2 = np.empty(n2)
    xp = np.empty(n2)
    up = np.empty(m)
    evals = 0
    for j in range(nc2):
        xp[:] = x
        xp[state_idx[j]] += eps_state
        step(xp, u, buf)
        if central:
            xp[:] = x
            xp[state_idx[j]] -= eps_state
            step(xp, u, buf2)
            A_out[:, j] = (buf[state_idx] - buf2[state_idx]) / (2.0 * eps_state)
            evals += 2
        else:
            A_out[:, j] = (buf[state_idx] - x_next[state_idx]) / eps_state
            evals += 1
    for k in range(m):
        up[:] = u
        up[k] += eps_ctrl
        step(x, up, buf)
        if central:
            up[:] = u
            up[k] -= eps_ctrl
            step(x, up, buf2)
            B_out[:, k] = (buf[state_idx] - buf2[state_idx]) / (2.0 * eps_ctrl)
            evals += 2
        else:
            B_out[:, k] = (buf[state_idx] - x_next[state_idx]) / eps_ctrl
            evals += 1
    return evals
