# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels for the planar pushing world.

Mirrors ``planar_py`` operation for operation; see that module for the
force-law documentation. Compiled with FMA contraction disabled so the
two backends produce bit-identical results.
"""

from libc.math cimport sqrt

import numpy as np


cdef inline void _circle_contact(const double* p, const double* v, double* f,
                                 int ia, double ra, int ib, double rb,
                                 double contact_k, double contact_c) noexcept nogil:
    cdef double dx = p[ia] - p[ib]
    cdef double dy = p[ia + 1] - p[ib + 1]
    cdef double rsum = ra + rb
    cdef double d2 = dx * dx + dy * dy
    cdef double d, nx, ny, rate, force
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


cdef inline void _walls(const double* p, const double* v, double* f,
                        int ia, double r, double arena_half,
                        double contact_k, double contact_c) noexcept nogil:
    cdef double over, force
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


cdef void _step(const double* x, const double* u, double* out, double* f,
                double dt, int n_discs, int n_particles,
                double pusher_radius, const double* disc_radius,
                double particle_radius,
                const long long* edges, Py_ssize_t n_edges,
                const double* rest_len,
                double spring_k, double spring_c,
                double contact_k, double contact_c,
                double lin_damping, double rot_damping,
                double arena_half, const double* inv_mass) noexcept nogil:
    cdef int n_pos = 2 + 3 * n_discs + 2 * n_particles
    cdef int part0 = 2 + 3 * n_discs
    cdef const double* p = x
    cdef const double* v = x + n_pos
    cdef int i, j, k, b, ia, ja
    cdef Py_ssize_t e
    cdef double dx, dy, length, ex, ey, rate, ten, vn

    for i in range(n_pos):
        f[i] = 0.0

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
    for e in range(n_edges):
        ia = part0 + 2 * <int>edges[2 * e]
        ja = part0 + 2 * <int>edges[2 * e + 1]
        dx = p[ia] - p[ja]
        dy = p[ia + 1] - p[ja + 1]
        length = sqrt(dx * dx + dy * dy)
        if length < 1e-12:
            continue
        ex = dx / length
        ey = dy / length
        rate = (v[ia] - v[ja]) * ex + (v[ia + 1] - v[ja + 1]) * ey
        ten = spring_k * (length - rest_len[e]) + spring_c * rate
        f[ia] -= ten * ex
        f[ia + 1] -= ten * ey
        f[ja] += ten * ex
        f[ja + 1] += ten * ey

    for k in range(n_discs):
        _circle_contact(p, v, f, 0, pusher_radius, 2 + 3 * k, disc_radius[k],
                        contact_k, contact_c)
    for k in range(n_particles):
        _circle_contact(p, v, f, 0, pusher_radius, part0 + 2 * k,
                        particle_radius, contact_k, contact_c)
    for i in range(n_discs):
        for j in range(i + 1, n_discs):
            _circle_contact(p, v, f, 2 + 3 * i, disc_radius[i],
                            2 + 3 * j, disc_radius[j], contact_k, contact_c)
    for i in range(n_discs):
        for k in range(n_particles):
            _circle_contact(p, v, f, 2 + 3 * i, disc_radius[i],
                            part0 + 2 * k, particle_radius,
                            contact_k, contact_c)

    _walls(p, v, f, 0, pusher_radius, arena_half, contact_k, contact_c)
    for k in range(n_discs):
        _walls(p, v, f, 2 + 3 * k, disc_radius[k], arena_half,
               contact_k, contact_c)
    for k in range(n_particles):
        _walls(p, v, f, part0 + 2 * k, particle_radius, arena_half,
               contact_k, contact_c)

    # semi-implicit Euler
    for i in range(n_pos):
        vn = v[i] + dt * f[i] * inv_mass[i]
        out[n_pos + i] = vn
        out[i] = p[i] + dt * vn


def planar_step(double[::1] x, double[::1] u, double[::1] out, double dt,
                int n_discs, int n_particles,
                double pusher_radius, double[::1] disc_radius,
                double particle_radius,
                long long[:, ::1] edges, double[::1] rest_len,
                double spring_k, double spring_c,
                double contact_k, double contact_c,
                double lin_damping, double rot_damping,
                double arena_half, double[::1] inv_mass):
    """One dynamics step; writes the next full state into ``out``."""
    cdef int n_pos = 2 + 3 * n_discs + 2 * n_particles
    cdef double[::1] f = np.empty(n_pos)
    cdef const long long* eptr = NULL
    cdef const double* rptr = NULL
    cdef const double* drptr = NULL
    if edges.shape[0] > 0:
        eptr = &edges[0, 0]
        rptr = &rest_len[0]
    if n_discs > 0:
        drptr = &disc_radius[0]
    with nogil:
        _step(&x[0], &u[0], &out[0], &f[0], dt, n_discs, n_particles,
              pusher_radius, drptr, particle_radius,
              eptr, edges.shape[0], rptr,
              spring_k, spring_c, contact_k, contact_c,
              lin_damping, rot_damping, arena_half, &inv_mass[0])


def planar_linearize(double[::1] x, double[::1] u, double[::1] x_next,
                     long long[::1] state_idx,
                     double eps_state, double eps_ctrl, bint central,
                     double[:, ::1] A_out, double[:, ::1] B_out, double dt,
                     int n_discs, int n_particles,
                     double pusher_radius, double[::1] disc_radius,
                     double particle_radius,
                     long long[:, ::1] edges, double[::1] rest_len,
                     double spring_k, double spring_c,
                     double contact_k, double contact_c,
                     double lin_damping, double rot_damping,
                     double arena_half, double[::1] inv_mass):
    """Finite differences of one step over reduced coordinates.

    Same contract as ``planar_py.planar_linearize``; returns the number
    of perturbed dynamics evaluations.
    """
    cdef Py_ssize_t n2 = x.shape[0]
    cdef Py_ssize_t nc2 = state_idx.shape[0]
    cdef Py_ssize_t m = u.shape[0]
    cdef int n_pos = 2 + 3 * n_discs + 2 * n_particles
    cdef double[::1] f = np.empty(n_pos)
    cdef double[::1] buf = np.empty(n2)
    cdef double[::1] buf2 = np.empty(n2)
    cdef double[::1] xp = np.empty(n2)
    cdef double[::1] up = np.empty(m)
    cdef const long long* eptr = NULL
    cdef const double* rptr = NULL
    cdef const double* drptr = NULL
    cdef Py_ssize_t i, j, k, r
    cdef int evals = 0
    if edges.shape[0] > 0:
        eptr = &edges[0, 0]
        rptr = &rest_len[0]
    if n_discs > 0:
        drptr = &disc_radius[0]
    with nogil:
        for j in range(nc2):
            for i in range(n2):
                xp[i] = x[i]
            xp[state_idx[j]] += eps_state
            _step(&xp[0], &u[0], &buf[0], &f[0], dt, n_discs, n_particles,
                  pusher_radius, drptr, particle_radius,
                  eptr, edges.shape[0], rptr,
                  spring_k, spring_c, contact_k, contact_c,
                  lin_damping, rot_damping, arena_half, &inv_mass[0])
            if central:
                for i in range(n2):
                    xp[i] = x[i]
                xp[state_idx[j]] -= eps_state
                _step(&xp[0], &u[0], &buf2[0], &f[0], dt, n_discs,
                      n_particles, pusher_radius, drptr, particle_radius,
                      eptr, edges.shape[0], rptr,
                      spring_k, spring_c, contact_k, contact_c,
                      lin_damping, rot_damping, arena_half, &inv_mass[0])
                for r in range(nc2):
                    A_out[r, j] = (buf[state_idx[r]] - buf2[state_idx[r]]) / (2.0 * eps_state)
                evals += 2
            else:
                for r in range(nc2):
                    A_out[r, j] = (buf[state_idx[r]] - x_next[state_idx[r]]) / eps_state
                evals += 1
        for k in range(m):
            for i in range(m):
                up[i] = u[i]
            up[k] += eps_ctrl
            _step(&x[0], &up[0], &buf[0], &f[0], dt, n_discs, n_particles,
                  pusher_radius, drptr, particle_radius,
                  eptr, edges.shape[0], rptr,
                  spring_k, spring_c, contact_k, contact_c,
                  lin_damping, rot_damping, arena_half, &inv_mass[0])
            if central:
                for i in range(m):
                    up[i] = u[i]
                up[k] -= eps_ctrl
                _step(&x[0], &up[0], &buf2[0], &f[0], dt, n_discs,
                      n_particles, pusher_radius, drptr, particle_radius,
                      eptr, edges.shape[0], rptr,
                      spring_k, spring_c, contact_k, contact_c,
                      lin_damping, rot_damping, arena_half, &inv_mass[0])
                for r in range(nc2):
                    B_out[r, k] = (buf[state_idx[r]] - buf2[state_idx[r]]) / (2.0 * eps_ctrl)
                evals += 2
            else:
                for r in range(nc2):
                    B_out[r, k] = (buf[state_idx[r]] - x_next[state_idx[r]]) / eps_ctrl
                evals += 1
    return evals
