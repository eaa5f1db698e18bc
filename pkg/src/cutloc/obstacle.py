"""Projected-SOR solver for the discretized obstacle problem.

Minimizes u' L u - m * mass' u subject to u <= d.  The energy carries no 1/2
factor, so stationarity on the inactive set reads 2 L u = m * mass and the
per-vertex gradient is g = 2 L u - m * mass (g <= 0 on the active set).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import fem
from ._kernels import convergence_stats, sor_project_sweep
from .errors import MeshMismatchError, ParameterError
from .fem import FemOperators
from .mesh import ScalarField

ORACLE_MAX_VERTICES = 2000


@dataclass(frozen=True)
class SolverConfig:
    """Projected-SOR parameters (desk-scale defaults, all overridable)."""

    omega: float = 1.5
    tol_update: float = 1e-11
    tol_kkt: float = 1e-8
    tol_act: float = 1e-10  # active when d - u <= tol_act * (1 + |d|)
    max_sweeps: int = 200000

    def __post_init__(self):
        if not 0.0 < self.omega < 2.0:
            raise ParameterError(f"omega must lie in (0, 2), got {self.omega}")
        for name in ("tol_update", "tol_kkt", "tol_act"):
            if getattr(self, name) <= 0:
                raise ParameterError(f"{name} must be positive")
        if self.max_sweeps < 1:
            raise ParameterError("max_sweeps must be at least 1")


@dataclass(frozen=True)
class ObstacleProblem:
    """Operators, obstacle field and load m > 0 on one mesh."""

    ops: FemOperators
    obstacle: ScalarField
    m: float

    def __post_init__(self):
        if self.m <= 0:
            raise ParameterError(f"m must be positive, got {self.m}")
        if self.obstacle.mesh_id != self.ops.mesh_id:
            raise MeshMismatchError("obstacle field and operators belong to different meshes")
        if self.obstacle.values.shape[0] != self.ops.stiffness.dimension:
            raise MeshMismatchError("obstacle length does not match operator dimension")


@dataclass(frozen=True)
class ObstacleSolution:
    u: ScalarField
    active: np.ndarray
    iterations: int
    kkt_residual: float  # scaled: max violation / (m * max mass)
    energy: float
    converged: bool
    last_update: float
    energy_trace: np.ndarray = field(repr=False, default=None)


def _activity(u: np.ndarray, d: np.ndarray, tol_act: float) -> np.ndarray:
    return (d - u) <= tol_act * (1.0 + np.abs(d))


def _kkt_scaled(g: np.ndarray, active: np.ndarray, scale: float) -> float:
    viol = 0.0
    if np.any(~active):
        viol = float(np.abs(g[~active]).max())
    if np.any(active):
        viol = max(viol, float(g[active].max()), 0.0)
    return max(viol, 0.0) / scale


def solve(
    problem: ObstacleProblem,
    config: SolverConfig = SolverConfig(),
    u0: ScalarField | None = None,
) -> ObstacleSolution:
    """Projected SOR in fixed ascending vertex order, started from the obstacle.

    Converged when the max per-sweep update <= tol_update and the scaled KKT
    residual <= tol_kkt.  Non-convergence is reported in the returned
    solution (converged=False), carrying the last residuals.
    """
    L = problem.ops.stiffness
    d = problem.obstacle.values
    mass = problem.ops.mass_lumped
    m = problem.m
    if u0 is not None:
        if u0.mesh_id != problem.ops.mesh_id:
            raise MeshMismatchError("initial iterate belongs to a different mesh")
        u = np.minimum(u0.values.copy(), d)
    else:
        u = d.copy()

    diag = L.diagonal()
    rhs = 0.5 * m * mass  # stationarity 2 L u = m mass <=> L u = m mass / 2
    scale = m * float(mass.max())
    indptr, indices, data = L.row_offsets, L.col_indices, L.entry_values

    energies = np.empty(config.max_sweeps)
    converged = False
    kkt = np.inf
    max_upd = np.inf
    sweeps = 0
    for sweeps in range(1, config.max_sweeps + 1):
        max_upd = sor_project_sweep(indptr, indices, data, diag, rhs, d, config.omega, u)
        max_in, max_act, energies[sweeps - 1] = convergence_stats(
            indptr, indices, data, u, d, mass, m, config.tol_act
        )
        kkt = max(max_in, max_act, 0.0) / scale
        if max_upd <= config.tol_update and kkt <= config.tol_kkt:
            converged = True
            break

    active = _activity(u, d, config.tol_act)
    sol_field = ScalarField(u, problem.obstacle.mesh_id)
    return ObstacleSolution(
        u=sol_field,
        active=active,
        iterations=sweeps,
        kkt_residual=kkt,
        energy=fem.energy(problem.ops, sol_field, m),
        converged=converged,
        last_update=max_upd,
        energy_trace=energies[:sweeps].copy(),
    )


def oracle_solve(
    problem: ObstacleProblem, tol: float = 1e-10, max_iter: int = 2_000_000
) -> ObstacleSolution:
    """Projected gradient descent with a fixed Gershgorin-safe step.

    Deliberately slow independent check; guarded to small instances.
    Step = 1 / (2 G) with G the Gershgorin bound on M^-1 L, applied to the
    mass-scaled gradient, then clamped to the obstacle.
    """
    n = problem.ops.stiffness.dimension
    if n > ORACLE_MAX_VERTICES:
        raise ParameterError(
            f"oracle_solve is limited to {ORACLE_MAX_VERTICES} vertices, got {n}"
        )
    L = problem.ops.stiffness.csr
    d = problem.obstacle.values
    mass = problem.ops.mass_lumped
    m = problem.m

    row_abs_sums = np.asarray(np.abs(L).sum(axis=1)).ravel()
    gershgorin = float((row_abs_sums / mass).max())
    tau = 1.0 / (2.0 * gershgorin)

    u = d.copy()
    converged = False
    it = 0
    max_upd = np.inf
    for it in range(1, max_iter + 1):
        g = 2.0 * (L @ u) - m * mass
        u_new = np.minimum(u - tau * (g / mass), d)
        max_upd = float(np.abs(u_new - u).max())
        u = u_new
        if max_upd <= tol:
            converged = True
            break

    scale = m * float(mass.max())
    g = 2.0 * (L @ u) - m * mass
    tol_act = SolverConfig().tol_act
    active = _activity(u, d, tol_act)
    sol_field = ScalarField(u, problem.obstacle.mesh_id)
    return ObstacleSolution(
        u=sol_field,
        active=active,
        iterations=it,
        kkt_residual=_kkt_scaled(g, active, scale),
        energy=fem.energy(problem.ops, sol_field, m),
        converged=converged,
        last_update=max_upd,
        energy_trace=None,
    )


@dataclass(frozen=True)
class KktReport:
    max_abs_grad_inactive: float
    max_grad_active: float
    feasibility_violation: float
    complementarity: float


def kkt_report(problem: ObstacleProblem, solution: ObstacleSolution) -> KktReport:
    """Deterministic first-order optimality summary of a candidate solution."""
    if solution.u.mesh_id != problem.ops.mesh_id:
        raise MeshMismatchError("solution belongs to a different mesh")
    u = solution.u.values
    d = problem.obstacle.values
    g = 2.0 * (problem.ops.stiffness.csr @ u) - problem.m * problem.ops.mass_lumped
    active = solution.active
    max_in = float(np.abs(g[~active]).max()) if np.any(~active) else 0.0
    max_act = float(g[active].max()) if np.any(active) else 0.0
    feas = float(np.maximum(u - d, 0.0).max())
    compl = float(np.sum((d - u) * np.maximum(-g, 0.0)))
    return KktReport(max_in, max_act, feas, compl)
