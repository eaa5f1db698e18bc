"""Cotangent P1 finite elements with lumped mass.

Sign convention, fixed once for the whole package: the stiffness operator L
satisfies u' L u ~ integral of |grad u|^2, and the discrete Laplacian is
(-L u) / mass per vertex, so the Laplacian of a concave bump is negative.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import mesh as meshmod
from .errors import MeshGeometryError, MeshMismatchError
from .mesh import Mesh, ScalarField
from .sparsela import SparseOperator, matvec

DEGENERATE_REL_AREA = 1e-14


@dataclass(frozen=True)
class FemOperators:
    """Stiffness + lumped mass of one mesh."""

    stiffness: SparseOperator
    mass_lumped: np.ndarray
    mesh_id: int

    def __post_init__(self):
        self.mass_lumped.setflags(write=False)


def assemble(mesh: Mesh) -> FemOperators:
    """Assemble cotangent stiffness and lumped mass from intrinsic geometry."""
    tris = mesh.triangles
    el = meshmod.triangle_edge_lengths(mesh)
    l2 = el**2
    areas = meshmod.triangle_areas(mesh)
    mean_area = float(areas.mean())
    degenerate = areas < DEGENERATE_REL_AREA * mean_area
    if np.any(degenerate):
        bad = int(np.nonzero(degenerate)[0][0])
        raise MeshGeometryError(
            f"triangle {bad} is degenerate (area {areas[bad]:.3e} vs mean {mean_area:.3e})"
        )

    # cot at corner c (opposite edge c): (l_a^2 + l_b^2 - l_c^2) / (4 area)
    n = mesh.vertex_count
    rows, cols, vals = [], [], []
    for c in range(3):
        a, b = (c + 1) % 3, (c + 2) % 3
        w = (l2[:, a] + l2[:, b] - l2[:, c]) / (8.0 * areas)  # cot/2
        i, j = tris[:, a], tris[:, b]
        rows += [i, j, i, j]
        cols += [j, i, i, j]
        vals += [-w, -w, w, w]
    stiffness = SparseOperator.from_coo(
        n, np.concatenate(rows), np.concatenate(cols), np.concatenate(vals), symmetric=True
    )

    mass = np.zeros(n)
    np.add.at(mass, tris.ravel(), np.repeat(areas / 3.0, 3))

    ops = FemOperators(stiffness, mass, mesh.mesh_id)
    _check_operators(ops, float(areas.sum()))
    return ops


def _check_operators(ops: FemOperators, total_area: float) -> None:
    L = ops.stiffness
    scale = float(abs(L.csr).max())
    ones = np.ones(L.dimension)
    if np.abs(L.csr @ ones).max() > 1e-9 * scale:
        raise MeshGeometryError("stiffness row sums are not zero (constants not in kernel)")
    if np.any(ops.mass_lumped <= 0.0):
        raise MeshGeometryError("lumped mass has non-positive entries")
    if abs(ops.mass_lumped.sum() - total_area) > 1e-9 * max(total_area, 1.0):
        raise MeshGeometryError("lumped mass does not sum to the surface area")
    rng = np.random.default_rng(0)
    for _ in range(5):
        x = rng.standard_normal(L.dimension)
        if float(x @ (L.csr @ x)) < -1e-9:
            raise MeshGeometryError("stiffness is not positive semidefinite on probes")


def _require_same_mesh(ops: FemOperators, u: ScalarField) -> None:
    if u.mesh_id != ops.mesh_id:
        raise MeshMismatchError("field and operators belong to different meshes")
    if u.values.shape[0] != ops.stiffness.dimension:
        raise MeshMismatchError("field length does not match operator dimension")


def energy(ops: FemOperators, u: ScalarField, m: float) -> float:
    """Discrete objective u' L u - m * mass' u (no 1/2 factor)."""
    _require_same_mesh(ops, u)
    x = u.values
    return float(x @ matvec(ops.stiffness, x)) - m * float(ops.mass_lumped @ x)


def discrete_laplacian(ops: FemOperators, u: ScalarField) -> ScalarField:
    """Per-vertex (-L u) / mass."""
    _require_same_mesh(ops, u)
    vals = -(matvec(ops.stiffness, u.values)) / ops.mass_lumped
    return ScalarField(vals, ops.mesh_id)
