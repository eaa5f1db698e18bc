"""Geodesic distance fields and analytic cut-locus ground truth.

The flat torus and the unit sphere have exact closed-form distance and cut
locus; every other mesh gets a first-order fast-marching approximation of
the polyhedral distance.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np

from . import mesh as meshmod
from .errors import ParameterError, UnsupportedSurfaceError
from .mesh import (
    TAG_FLAT_TORUS,
    TAG_UNIT_SPHERE,
    Mesh,
    ScalarField,
    SourcePoint,
    wrap_deltas,
)

METHOD_ANALYTIC = "analytic"
METHOD_FAST_MARCHING = "fast_marching"


@dataclass(frozen=True)
class DistanceField:
    """Per-vertex distance to a source point."""

    field: ScalarField
    source: SourcePoint
    method: str
    mesh: Mesh

    def __post_init__(self):
        vals = self.field.values
        if vals[self.source.vertex_id] != 0.0:
            raise ParameterError("distance at the source vertex must be exactly 0")
        if np.any(vals < 0.0):
            raise ParameterError("distances must be nonnegative")
        bound = diameter_bound(self.mesh)
        if bound is not None:
            slack = 1e-12 if self.method == METHOD_ANALYTIC else 5.0 * meshmod.max_edge_length(self.mesh)
            if np.any(vals > bound + slack):
                raise ParameterError("distance exceeds the surface diameter bound")


@dataclass(frozen=True)
class CutLocusTruth:
    """Analytic cut locus as a per-vertex distance-to-the-set map."""

    mesh: Mesh
    vertex_distance: np.ndarray
    description: str

    def __post_init__(self):
        self.vertex_distance.setflags(write=False)


def diameter_bound(mesh: Mesh) -> float | None:
    if mesh.surface_tag == TAG_FLAT_TORUS:
        L1, L2 = mesh.torus_lengths
        return 0.5 * float(np.hypot(L1, L2))
    if mesh.surface_tag == TAG_UNIT_SPHERE:
        return float(np.pi)
    return None


def _check_source(mesh: Mesh, b: SourcePoint) -> None:
    if not 0 <= b.vertex_id < mesh.vertex_count:
        raise ParameterError(f"source vertex {b.vertex_id} out of range")


def _periodic_coordinate_distance(x: np.ndarray, c: float, L: float) -> np.ndarray:
    d = np.abs((x - c + 0.5 * L) % L - 0.5 * L)
    return d


def analytic_distance(mesh: Mesh, b: SourcePoint) -> DistanceField:
    """Exact distance on a tagged analytic surface.

    Flat torus: shortest lattice representative of the uv displacement (the
    per-coordinate wrap; equal to the minimum over the 9 nearest translates).
    Sphere: arccos of the dot product with the source position.
    """
    _check_source(mesh, b)
    if mesh.surface_tag == TAG_FLAT_TORUS:
        deltas = wrap_deltas(mesh.uv - mesh.uv[b.vertex_id], mesh.torus_lengths)
        vals = np.hypot(deltas[:, 0], deltas[:, 1])
        vals[b.vertex_id] = 0.0
    elif mesh.surface_tag == TAG_UNIT_SPHERE:
        dots = np.clip(mesh.vertices @ mesh.vertices[b.vertex_id], -1.0, 1.0)
        vals = np.arccos(dots)
        vals[b.vertex_id] = 0.0
    else:
        raise UnsupportedSurfaceError(
            f"analytic distance needs a tagged surface, got {mesh.surface_tag!r}"
        )
    return DistanceField(ScalarField(vals, mesh.mesh_id), b, METHOD_ANALYTIC, mesh)


def analytic_cut_locus(mesh: Mesh, b: SourcePoint) -> CutLocusTruth:
    """Exact cut locus of a tagged surface as a distance-to-set map.

    Flat torus, b = (b1, b2): the cross {u = b1 + L1/2 (mod L1)} union
    {v = b2 + L2/2 (mod L2)}.  Sphere: the antipode of b.
    """
    _check_source(mesh, b)
    if mesh.surface_tag == TAG_FLAT_TORUS:
        L1, L2 = mesh.torus_lengths
        b1, b2 = mesh.uv[b.vertex_id]
        du = _periodic_coordinate_distance(mesh.uv[:, 0], (b1 + 0.5 * L1) % L1, L1)
        dv = _periodic_coordinate_distance(mesh.uv[:, 1], (b2 + 0.5 * L2) % L2, L2)
        dist = np.minimum(du, dv)
        desc = f"torus cross u={b1 + 0.5 * L1:.6g} (mod {L1:g}), v={b2 + 0.5 * L2:.6g} (mod {L2:g})"
    elif mesh.surface_tag == TAG_UNIT_SPHERE:
        dots = np.clip(mesh.vertices @ (-mesh.vertices[b.vertex_id]), -1.0, 1.0)
        dist = np.arccos(dots)
        desc = "sphere antipode of the source"
    else:
        raise UnsupportedSurfaceError(
            f"analytic cut locus needs a tagged surface, got {mesh.surface_tag!r}"
        )
    return CutLocusTruth(mesh, dist, desc)


def surface_edge_lengths(mesh: Mesh) -> np.ndarray:
    """Edge lengths measured on the analytic surface (arc on the sphere)."""
    e = meshmod.edges(mesh)
    if mesh.surface_tag == TAG_UNIT_SPHERE:
        dots = np.clip(np.sum(mesh.vertices[e[:, 0]] * mesh.vertices[e[:, 1]], axis=1), -1.0, 1.0)
        return np.arccos(dots)
    return meshmod.edge_lengths(mesh, e)


# ---------------------------------------------------------------------------
# fast marching


def _source_ring_values(mesh: Mesh, b: SourcePoint, ring: np.ndarray) -> np.ndarray:
    """Exact (analytic where available) distances from the source to its one-ring."""
    if mesh.surface_tag == TAG_FLAT_TORUS:
        d = wrap_deltas(mesh.uv[ring] - mesh.uv[b.vertex_id], mesh.torus_lengths)
        return np.hypot(d[:, 0], d[:, 1])
    if mesh.surface_tag == TAG_UNIT_SPHERE:
        dots = np.clip(mesh.vertices[ring] @ mesh.vertices[b.vertex_id], -1.0, 1.0)
        return np.arccos(dots)
    return np.linalg.norm(mesh.vertices[ring] - mesh.vertices[b.vertex_id], axis=1)


def _planar_update(ta: float, tb: float, c: float, blen: float, alen: float) -> float:
    """Two-neighbor eikonal update inside one triangle.

    Corners A, B carry values ta, tb; c = |AB|, blen = |A T|, alen = |B T|
    for the target corner T.  Returns the acute (causal) planar value when
    the characteristic crosses the AB edge interior, else the edge-wise
    Dijkstra fallback.
    """
    cand = min(ta + blen, tb + alen)
    if c <= 0.0:
        return cand
    u = tb - ta
    if abs(u) <= c:
        x3 = (blen * blen + c * c - alen * alen) / (2.0 * c)
        y3sq = blen * blen - x3 * x3
        if y3sq > 0.0:
            y3 = np.sqrt(y3sq)
            nx = u / c
            ny = np.sqrt(max(1.0 - nx * nx, 0.0))
            if ny > 0.0:
                t = ta + nx * x3 + ny * y3
                foot = x3 - (y3 / ny) * nx
                if 0.0 < foot < c and t >= max(ta, tb) - 1e-12 and t < cand:
                    cand = t
    return cand


def fast_marching(
    mesh: Mesh, b: SourcePoint, record_accept_order: list | None = None
) -> DistanceField:
    """First-order triangle-based fast marching from vertex b.

    The source is seeded exactly; its one-ring is frozen at analytic
    (Euclidean/spherical) values to suppress the dominant seeding error.
    Accepted values are processed in nondecreasing order; obtuse
    configurations fall back to edge-wise Dijkstra updates.
    """
    _check_source(mesh, b)
    n = mesh.vertex_count
    el = meshmod.triangle_edge_lengths(mesh)
    tris = mesh.triangles
    vert_tris = meshmod.vertex_triangles(mesh)

    dist = np.full(n, np.inf)
    accepted = np.zeros(n, dtype=np.bool_)
    src = b.vertex_id
    dist[src] = 0.0
    accepted[src] = True

    ring = np.unique(tris[vert_tris[src]].ravel())
    ring = ring[ring != src]
    dist[ring] = _source_ring_values(mesh, b, ring)
    accepted[ring] = True

    def try_update(target_pos: int, ti: int) -> float:
        """Best update for the corner at position target_pos of triangle ti."""
        tri = tris[ti]
        pa, pb = (target_pos + 1) % 3, (target_pos + 2) % 3
        va, vb = tri[pa], tri[pb]
        # edge opposite corner k has length el[ti, k]
        blen = el[ti, pb]  # |A - T|, edge opposite B
        alen = el[ti, pa]  # |B - T|
        c = el[ti, target_pos]
        if accepted[va] and accepted[vb]:
            return _planar_update(dist[va], dist[vb], c, blen, alen)
        if accepted[va]:
            return dist[va] + blen
        if accepted[vb]:
            return dist[vb] + alen
        return np.inf

    heap: list[tuple[float, int]] = []
    frontier = set()
    for v in np.concatenate(([src], ring)):
        for ti in vert_tris[v]:
            for pos in range(3):
                w = tris[ti][pos]
                if not accepted[w]:
                    frontier.add((int(w), int(ti)))
    for w, ti in sorted(frontier):
        val = try_update(list(tris[ti]).index(w), ti)
        if val < dist[w]:
            dist[w] = val
            heapq.heappush(heap, (val, w))

    while heap:
        val, v = heapq.heappop(heap)
        if accepted[v] or val > dist[v]:
            continue
        accepted[v] = True
        if record_accept_order is not None:
            record_accept_order.append(val)
        for ti in vert_tris[v]:
            tri = tris[ti]
            for pos in range(3):
                w = tri[pos]
                if accepted[w]:
                    continue
                cand = try_update(pos, ti)
                if cand < dist[w]:
                    dist[w] = cand
                    heapq.heappush(heap, (cand, int(w)))

    return DistanceField(ScalarField(dist, mesh.mesh_id), b, METHOD_FAST_MARCHING, mesh)
