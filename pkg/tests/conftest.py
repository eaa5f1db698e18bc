import time
from dataclasses import dataclass

import numpy as np
import pytest

import cutloc as cl
from cutloc import mesh as meshmod


@dataclass
class SurfaceBundle:
    mesh: object
    b: object
    distance: object
    truth: object
    ops: object
    problem: object
    solution: object
    solve_seconds: float


def _solve_bundle(mesh, m=1.0) -> SurfaceBundle:
    b = cl.SourcePoint(0)
    distance = cl.analytic_distance(mesh, b)
    truth = cl.analytic_cut_locus(mesh, b)
    ops = cl.assemble(mesh)
    problem = cl.ObstacleProblem(ops, distance.field, m)
    t0 = time.perf_counter()
    solution = cl.solve(problem)
    dt = time.perf_counter() - t0
    return SurfaceBundle(mesh, b, distance, truth, ops, problem, solution, dt)


@pytest.fixture(scope="session")
def numba_warm():
    mesh = cl.make_flat_torus(1.0, 1.0, 4, 4)
    _solve_bundle(mesh)
    return True


@pytest.fixture(scope="session")
def torus64(numba_warm):
    return _solve_bundle(cl.make_flat_torus(1.0, 1.0, 64, 64))


@pytest.fixture(scope="session")
def sphere4(numba_warm):
    return _solve_bundle(cl.make_icosphere(4))


@pytest.fixture(scope="session")
def torus128(numba_warm):
    return _solve_bundle(cl.make_flat_torus(1.0, 1.0, 128, 128))


@pytest.fixture(scope="session")
def sphere5(numba_warm):
    return _solve_bundle(cl.make_icosphere(5))


@pytest.fixture(scope="session")
def fmm_errors():
    """Max fast-marching error vs the analytic oracle per refinement level."""
    out = {"torus": {}, "sphere": {}}
    for n in (32, 64, 128):
        mesh = cl.make_flat_torus(1.0, 1.0, n, n)
        b = cl.SourcePoint(0)
        fm = cl.fast_marching(mesh, b)
        ex = cl.analytic_distance(mesh, b)
        out["torus"][n] = float(np.abs(fm.field.values - ex.field.values).max())
    for k in (3, 4, 5):
        mesh = cl.make_icosphere(k)
        b = cl.SourcePoint(0)
        fm = cl.fast_marching(mesh, b)
        ex = cl.analytic_distance(mesh, b)
        out["sphere"][k] = float(np.abs(fm.field.values - ex.field.values).max())
    return out


def torus_index(n1, n2, i, j):
    """Vertex index of grid node (i, j) of an n1 x n2 flat torus."""
    return (i % n1) * n2 + (j % n2)


def antipode_index(mesh):
    """Vertex index of the antipode of vertex 0 on an icosphere."""
    return int(np.argmin(np.linalg.norm(mesh.vertices + mesh.vertices[0], axis=1)))
