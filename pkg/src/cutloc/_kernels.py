"""Compiled inner loops for the projected-SOR solver (CSR arrays in, scalars out)."""

import numpy as np
from numba import njit


@njit(cache=True)
def sor_project_sweep(indptr, indices, data, diag, rhs, upper, omega, u):
    """One in-place projected SOR sweep in ascending vertex order.

    Solves L u = rhs subject to u <= upper; returns the max absolute update.
    """
    max_upd = 0.0
    for i in range(u.shape[0]):
        s = 0.0
        for k in range(indptr[i], indptr[i + 1]):
            j = indices[k]
            if j != i:
                s += data[k] * u[j]
        target = (rhs[i] - s) / diag[i]
        new = u[i] + omega * (target - u[i])
        if new > upper[i]:
            new = upper[i]
        delta = abs(new - u[i])
        if delta > max_upd:
            max_upd = delta
        u[i] = new
    return max_upd


@njit(cache=True)
def convergence_stats(indptr, indices, data, u, d, mass, m, tol_act):
    """One CSR pass: KKT violation split by activity, plus the energy.

    Returns (max |g| on inactive, max positive g on active, energy) for
    g = 2 L u - m * mass; a vertex is active when d - u <= tol_act (1 + |d|).
    """
    max_inactive = 0.0
    max_active = 0.0
    quad = 0.0
    lin = 0.0
    for i in range(u.shape[0]):
        row = 0.0
        for k in range(indptr[i], indptr[i + 1]):
            row += data[k] * u[indices[k]]
        g = 2.0 * row - m * mass[i]
        if d[i] - u[i] <= tol_act * (1.0 + abs(d[i])):
            if g > max_active:
                max_active = g
        else:
            if abs(g) > max_inactive:
                max_inactive = abs(g)
        quad += u[i] * row
        lin += mass[i] * u[i]
    return max_inactive, max_active, quad - m * lin
