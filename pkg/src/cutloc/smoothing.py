"""Smoothed surrogate obstacle: equal to the distance near the source,
strictly below it on the cut locus, with the same minimizer.

Construction: pick eps = half the smallest non-contact gap on the cut
locus, mollify the shifted target d - eps/2 by mass-weighted one-ring
averaging (clamped so the deviation stays <= 0.49 eps), and blend
(1 - rho) d + rho mollified with a bump rho that is 1 near the cut locus
and supported in {u < d - eps} away from the source.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import fem
from . import mesh as meshmod
from .errors import ConstructionError, InclusionFailureError, MeshMismatchError, ParameterError
from .geodesic import CutLocusTruth, DistanceField
from .mesh import ScalarField
from .obstacle import ObstacleProblem, ObstacleSolution, SolverConfig, solve

DEVIATION_FRACTION = 0.49  # of eps; keeps the mollification bound strict


@dataclass(frozen=True)
class SmoothedObstacle:
    field: ScalarField  # the blended surrogate obstacle
    epsilon: float
    rho: ScalarField
    mollified: ScalarField
    near_b_radius: float
    sigma: float
    plateau: float
    passes: int
    crease_max: float  # max hinge second difference across cut-crossing edges
    away_median: float  # median hinge second difference away from the cut
    crease_removed: bool


def choose_epsilon(
    solution: ObstacleSolution, distance: DistanceField, truth: CutLocusTruth
) -> float:
    """Half the minimum gap d - u over vertices within h of the cut locus."""
    if solution.u.mesh_id != distance.field.mesh_id:
        raise MeshMismatchError("solution and distance index different meshes")
    h = meshmod.max_edge_length(distance.mesh)
    near = truth.vertex_distance <= h
    gap = distance.field.values - solution.u.values
    min_gap = float(gap[near].min())
    if min_gap <= 0.0:
        raise InclusionFailureError(
            f"non-contact gap on the cut locus is {min_gap:.3e}; upstream solve invalid"
        )
    return 0.5 * min_gap


def _one_ring_weights(mesh) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Edge list plus per-vertex lumped masses for the averaging stencil."""
    e = meshmod.edges(mesh)
    mass = fem.assemble(mesh).mass_lumped
    return e[:, 0], e[:, 1], mass


def mollify(distance: DistanceField, epsilon: float, passes: int) -> ScalarField:
    """Discrete smoothing of d - eps/2 with a strict deviation clamp.

    Each pass replaces u_i by the mass-weighted average over the closed
    one-ring; the difference form preserves constants exactly.  The result
    is clamped into [target - 0.49 eps, target + 0.49 eps] so the
    mollification bound holds strictly.
    """
    if epsilon <= 0:
        raise ParameterError("epsilon must be positive")
    if passes < 0:
        raise ParameterError("passes must be >= 0")
    target = distance.field.values - 0.5 * epsilon
    u = target.copy()
    if passes > 0:
        ei, ej, mass = _one_ring_weights(distance.mesh)
        ring_mass = np.zeros_like(mass)
        np.add.at(ring_mass, ei, mass[ej])
        np.add.at(ring_mass, ej, mass[ei])
        denom = mass + ring_mass
        for _ in range(passes):
            flux = np.zeros_like(u)
            diff = u[ej] - u[ei]
            np.add.at(flux, ei, mass[ej] * diff)
            np.add.at(flux, ej, -mass[ei] * diff)
            u = u + flux / denom
    # guard band: target + clipped must re-measure within 0.49 eps despite rounding
    limit = DEVIATION_FRACTION * epsilon * (1.0 - 1e-12)
    deviation = np.clip(u - target, -limit, limit)
    return ScalarField(target + deviation, distance.field.mesh_id)


def blend_obstacle(
    distance_values: np.ndarray, mollified_values: np.ndarray, rho_values: np.ndarray
) -> np.ndarray:
    """(1 - rho) d + rho mollified; exact at rho = 0 and rho = 1."""
    return (1.0 - rho_values) * distance_values + rho_values * mollified_values


def _hinge_second_differences(mesh, values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """|u_a + u_b - u_i - u_j| per interior edge (i,j) with opposite corners a,b."""
    opp: dict[tuple[int, int], list[int]] = {}
    for tri in mesh.triangles:
        for c in range(3):
            i, j = int(tri[(c + 1) % 3]), int(tri[(c + 2) % 3])
            key = (i, j) if i < j else (j, i)
            opp.setdefault(key, []).append(int(tri[c]))
    e = meshmod.edges(mesh)
    hinge = np.empty(e.shape[0])
    for k, (i, j) in enumerate(e):
        a, b = opp[(int(i), int(j))]
        hinge[k] = abs(values[a] + values[b] - values[i] - values[j])
    return e, hinge


def _graph_distance_to_set(mesh, seed: np.ndarray) -> np.ndarray:
    """Multi-source Dijkstra over mesh edges (intrinsic lengths)."""
    import heapq

    e = meshmod.edges(mesh)
    lengths = meshmod.edge_lengths(mesh, e)
    adj: list[list[tuple[int, float]]] = [[] for _ in range(mesh.vertex_count)]
    for (i, j), ell in zip(e, lengths):
        adj[i].append((int(j), float(ell)))
        adj[j].append((int(i), float(ell)))
    dist = np.full(mesh.vertex_count, np.inf)
    heap = []
    for i in np.nonzero(seed)[0]:
        dist[i] = 0.0
        heapq.heappush(heap, (0.0, int(i)))
    while heap:
        dv, v = heapq.heappop(heap)
        if dv > dist[v]:
            continue
        for w, ell in adj[v]:
            cand = dv + ell
            if cand < dist[w]:
                dist[w] = cand
                heapq.heappush(heap, (cand, w))
    return dist


def build_smoothed(
    solution: ObstacleSolution,
    distance: DistanceField,
    truth: CutLocusTruth | None,
    passes: int = 20,
    epsilon: float | None = None,
) -> SmoothedObstacle:
    """Construct the surrogate obstacle and check all its invariants.

    On tagged surfaces the bump is built from the analytic distance to the
    cut locus and eps from the cut-locus gap; on generic meshes (truth=None)
    eps must be supplied and the bump is built from the graph distance to
    the non-contact core {d - u > 2 eps}.
    """
    mesh = distance.mesh
    d = distance.field.values
    u = solution.u.values
    gap = d - u
    h = meshmod.max_edge_length(mesh)

    if truth is not None:
        eps = choose_epsilon(solution, distance, truth)
        s = truth.vertex_distance
        near_cut = s <= h
    else:
        if epsilon is None:
            raise ParameterError("generic meshes need an explicit epsilon")
        eps = epsilon
        core = gap > 2.0 * eps
        if not core.any():
            raise InclusionFailureError("non-contact core {d - u > 2 eps} is empty")
        s = _graph_distance_to_set(mesh, core)
        near_cut = core

    moll = mollify(distance, eps, passes)
    r_cut = float(d[near_cut].min())  # distance from b to the cut locus
    near_b_radius = 0.5 * r_cut

    allowed = (gap > eps) & (d > near_b_radius)
    plateau = h
    if np.all(allowed):
        sigma = float(s.max())  # unconstrained; cap at the farthest vertex
    else:
        sigma = float(s[~allowed].min())
    if sigma <= plateau:
        conflict = np.nonzero(~allowed & (s <= plateau))[0]
        raise ConstructionError(
            f"no admissible bump radius: vertices {conflict[:10].tolist()} within the "
            f"plateau violate the support constraint"
        )

    q = np.clip((s - plateau) / (sigma - plateau), 0.0, 1.0)
    rho = 1.0 - q * q * (3.0 - 2.0 * q)
    dtilde = blend_obstacle(d, moll.values, rho)

    _check_invariants(dtilde, d, u, rho, moll.values, near_cut, allowed, near_b_radius)

    edges_arr, hinge = _hinge_second_differences(mesh, dtilde)
    se = np.maximum(s[edges_arr[:, 0]], s[edges_arr[:, 1]])
    sm = np.minimum(s[edges_arr[:, 0]], s[edges_arr[:, 1]])
    cut_edges = se <= h
    away_edges = sm > 3.0 * h
    crease_max = float(hinge[cut_edges].max()) if cut_edges.any() else 0.0
    away_median = float(np.median(hinge[away_edges])) if away_edges.any() else 0.0
    crease_removed = crease_max <= 3.0 * away_median

    return SmoothedObstacle(
        field=ScalarField(dtilde, distance.field.mesh_id),
        epsilon=eps,
        rho=ScalarField(rho, distance.field.mesh_id),
        mollified=moll,
        near_b_radius=near_b_radius,
        sigma=sigma,
        plateau=plateau,
        passes=passes,
        crease_max=crease_max,
        away_median=away_median,
        crease_removed=crease_removed,
    )


def _check_invariants(dtilde, d, u, rho, moll, near_cut, allowed, near_b_radius) -> None:
    if np.any(dtilde < u - 1e-9) or np.any(dtilde > d + 1e-12):
        raise ConstructionError("surrogate violates u - 1e-9 <= dtilde <= d + 1e-12")
    near_b = d <= near_b_radius
    if np.any(dtilde[near_b] != d[near_b]):
        raise ConstructionError("surrogate differs from the distance near the source")
    if np.any(dtilde[near_cut] >= d[near_cut]):
        raise ConstructionError("surrogate is not strictly below the distance on the cut locus")
    if np.any(rho[near_cut] != 1.0):
        raise ConstructionError("bump is not 1 on the cut-locus vertices")
    if np.any(rho[~allowed] != 0.0):
        raise ConstructionError("bump support leaks outside its admissible set")
    lo = np.minimum(d, moll) - 1e-12
    hi = np.maximum(d, moll) + 1e-12
    if np.any(dtilde < lo) or np.any(dtilde > hi):
        raise ConstructionError("blend leaves the [min, max] envelope")


def verify_equivalence(
    original: ObstacleProblem,
    smoothed: SmoothedObstacle,
    config: SolverConfig = SolverConfig(),
    original_solution: ObstacleSolution | None = None,
) -> float:
    """Max-norm discrepancy between the solutions with obstacle d and dtilde."""
    if smoothed.field.mesh_id != original.obstacle.mesh_id:
        raise MeshMismatchError("smoothed obstacle belongs to a different mesh")
    if original_solution is None:
        original_solution = solve(original, config)
    surrogate_problem = ObstacleProblem(original.ops, smoothed.field, original.m)
    surrogate_solution = solve(surrogate_problem, config)
    return float(
        np.abs(surrogate_solution.u.values - original_solution.u.values).max()
    )
