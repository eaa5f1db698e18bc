import numpy as np
import pytest

import cutloc as cl
from cutloc import mesh as meshmod
from cutloc.errors import ParameterError
from cutloc.obstacle import ObstacleSolution

from conftest import torus_index


def small_problem(n=4, m=1.0, L1=1.0, L2=1.0):
    mesh = cl.make_flat_torus(L1, L2, n, n)
    b = cl.SourcePoint(0)
    ops = cl.assemble(mesh)
    d = cl.analytic_distance(mesh, b)
    return mesh, cl.ObstacleProblem(ops, d.field, m)


class TestSolve:
    def test_zero_obstacle_saturates(self):
        mesh = cl.make_flat_torus(1, 1, 8, 8)
        ops = cl.assemble(mesh)
        zero = cl.field_on(mesh, np.zeros(64))
        sol = cl.solve(cl.ObstacleProblem(ops, zero, 2.0))
        assert sol.converged
        assert np.array_equal(sol.u.values, np.zeros(64))
        assert np.all(sol.active)
        g = 2.0 * (ops.stiffness.csr @ sol.u.values) - 2.0 * ops.mass_lumped
        assert np.all(g <= 0.0)

    def test_matches_oracle_4x4(self):
        _, prob = small_problem(4)
        sol = cl.solve(prob)
        oracle = cl.oracle_solve(prob, tol=1e-12)
        assert np.abs(sol.u.values - oracle.u.values).max() <= 1e-7

    def test_feasibility_exact(self, torus64):
        assert np.all(torus64.solution.u.values <= torus64.distance.field.values)

    def test_reported_energy_matches_fem(self, torus64):
        e = cl.energy(torus64.ops, torus64.solution.u, 1.0)
        assert abs(torus64.solution.energy - e) <= 1e-12 * max(abs(e), 1.0)

    def test_energy_monotone_per_sweep(self):
        mesh = cl.make_flat_torus(1, 1, 32, 32)
        b = cl.SourcePoint(0)
        prob = cl.ObstacleProblem(cl.assemble(mesh), cl.analytic_distance(mesh, b).field, 1.0)
        sol = cl.solve(prob)
        assert np.diff(sol.energy_trace).max() <= 1e-12

    def test_two_start_uniqueness(self, torus64):
        d = torus64.distance.field
        other = cl.solve(
            torus64.problem,
            u0=cl.ScalarField(d.values - 1.0, d.mesh_id),
        )
        assert np.abs(other.u.values - torus64.solution.u.values).max() <= 1e-7

    def test_grid_symmetry(self):
        n = 32
        mesh = cl.make_flat_torus(1, 1, n, n)
        b = cl.SourcePoint(0)
        prob = cl.ObstacleProblem(cl.assemble(mesh), cl.analytic_distance(mesh, b).field, 1.0)
        u = cl.solve(prob).u.values
        refl_u = np.empty_like(u)
        refl_v = np.empty_like(u)
        for i in range(n):
            for j in range(n):
                refl_u[torus_index(n, n, i, j)] = u[torus_index(n, n, -i, j)]
                refl_v[torus_index(n, n, i, j)] = u[torus_index(n, n, i, -j)]
        assert np.abs(u - refl_u).max() <= 1e-9
        assert np.abs(u - refl_v).max() <= 1e-9

    def test_monotone_in_m(self):
        sols = {}
        for m in (0.5, 1.0, 2.0):
            _, prob = small_problem(32, m=m)
            sols[m] = cl.solve(prob).u.values
        assert np.all(sols[0.5] <= sols[1.0] + 1e-9)
        assert np.all(sols[1.0] <= sols[2.0] + 1e-9)

    def test_small_m_limit(self):
        norms = {}
        for m in (0.001, 0.01):
            _, prob = small_problem(32, m=m)
            norms[m] = np.abs(cl.solve(prob).u.values).max()
        assert norms[0.001] <= 0.2 * norms[0.01] + 1e-9

    def test_invalid_omega(self):
        with pytest.raises(ParameterError):
            cl.SolverConfig(omega=2.5)
        with pytest.raises(ParameterError):
            cl.SolverConfig(omega=0.0)

    def test_nonconvergence_carries_residuals(self):
        _, prob = small_problem(16)
        sol = cl.solve(prob, cl.SolverConfig(max_sweeps=2))
        assert not sol.converged
        assert sol.iterations == 2
        assert np.isfinite(sol.last_update)
        assert sol.kkt_residual > 0

    def test_invalid_m(self):
        mesh = cl.make_flat_torus(1, 1, 4, 4)
        ops = cl.assemble(mesh)
        with pytest.raises(ParameterError):
            cl.ObstacleProblem(ops, cl.field_on(mesh, np.zeros(16)), 0.0)


class TestOracle:
    def test_zero_obstacle(self):
        mesh = cl.make_flat_torus(1, 1, 6, 6)
        ops = cl.assemble(mesh)
        zero = cl.field_on(mesh, np.zeros(36))
        sol = cl.oracle_solve(cl.ObstacleProblem(ops, zero, 1.0), tol=1e-12)
        assert np.array_equal(sol.u.values, np.zeros(36))

    def test_thin_torus_agrees_with_solve(self):
        mesh = cl.make_flat_torus(1.0, 0.12, 40, 3)
        b = cl.SourcePoint(0)
        prob = cl.ObstacleProblem(cl.assemble(mesh), cl.analytic_distance(mesh, b).field, 0.5)
        sol = cl.solve(prob)
        oracle = cl.oracle_solve(prob, tol=1e-11)
        assert np.abs(sol.u.values - oracle.u.values).max() <= 1e-7

    def test_energy_not_below_solver(self):
        _, prob = small_problem(8)
        e_solve = cl.solve(prob).energy
        e_oracle = cl.oracle_solve(prob, tol=1e-11).energy
        assert e_oracle >= e_solve - 1e-9

    def test_size_guard(self):
        mesh = cl.make_flat_torus(1, 1, 64, 64)
        b = cl.SourcePoint(0)
        prob = cl.ObstacleProblem(cl.assemble(mesh), cl.analytic_distance(mesh, b).field, 1.0)
        with pytest.raises(ParameterError, match="2000"):
            cl.oracle_solve(prob)


class TestKktReport:
    def test_converged_within_tolerances(self, torus64):
        rep = cl.kkt_report(torus64.problem, torus64.solution)
        scale = 1.0 * torus64.ops.mass_lumped.max()
        assert rep.max_abs_grad_inactive <= 1e-8 * scale
        assert rep.max_grad_active <= 1e-8 * scale
        assert rep.feasibility_violation == 0.0
        assert rep.complementarity <= 1e-8

    def test_unconverged_obstacle_iterate(self):
        mesh, prob = small_problem(8)
        d = prob.obstacle
        fake = ObstacleSolution(
            u=d,
            active=np.ones(64, dtype=bool),
            iterations=0,
            kkt_residual=np.inf,
            energy=cl.energy(prob.ops, d, prob.m),
            converged=False,
            last_update=np.inf,
        )
        rep = cl.kkt_report(prob, fake)
        scale = prob.m * prob.ops.mass_lumped.max()
        assert rep.max_grad_active > 1e-8 * scale  # stationarity residual reported
        assert rep.feasibility_violation == 0.0

    def test_perturbed_inactive_vertex_trips(self, torus64):
        prob, sol = torus64.problem, torus64.solution
        d = torus64.distance.field.values
        gap = d - sol.u.values
        idx = int(np.argmax(gap))  # comfortably inactive vertex
        tol_act = cl.SolverConfig().tol_act * (1.0 + abs(d[idx]))
        u2 = sol.u.values.copy()
        u2[idx] += 2.0 * tol_act
        perturbed = ObstacleSolution(
            u=cl.ScalarField(u2, sol.u.mesh_id),
            active=sol.active.copy(),
            iterations=sol.iterations,
            kkt_residual=sol.kkt_residual,
            energy=sol.energy,
            converged=True,
            last_update=sol.last_update,
        )
        rep = cl.kkt_report(prob, perturbed)
        scale = prob.m * prob.ops.mass_lumped.max()
        assert rep.max_abs_grad_inactive > 1e-8 * scale
