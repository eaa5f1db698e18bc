"""Barrier certificates at two-branch cut points of the flat torus, plus
discrete Laplacian blow-up probes near the cut locus.

The certified construction is restricted to the flat torus, where the uv
chart is a global normal coordinate map and every formula is exact: at a
point p reached by exactly two minimizing branches with unit gradients g1,
g2, the function C|x|^2 - d_b(p + x) is convex near 0 with subgradients
v = -g1, w = -g2, and

    phi(x) = C|x|^2 - [ (v + w) . x / 2 + B ((v - w) . x)^2 - d_b(p) ]

touches d_b from above at p with Laplacian 2 n C - 2 B |v - w|^2 (n = 2).
Choosing B = (2 n C + A) / (2 |v - w|^2) makes that value exactly -A.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import fem
from . import mesh as meshmod
from .errors import (
    AmbiguousCutPointError,
    ConstructionError,
    NotACutPointError,
    ParameterError,
    UnsupportedSurfaceError,
)
from .geodesic import analytic_cut_locus, analytic_distance
from .mesh import TAG_FLAT_TORUS, Mesh, SourcePoint

_DIM = 2  # closed surfaces only
MIN_RADIUS = 1e-4
COINCIDENCE_TOL = 1e-9


@dataclass(frozen=True)
class BarrierCertificate:
    p: tuple[float, float]
    v: np.ndarray
    w: np.ndarray
    C: float
    B: float
    A: float
    laplacian_at_p: float
    local_min_margin: float
    radius: float
    subgradient_excess: float  # max over samples of plane-above-convex violation
    sample_count: int


def _require_torus(mesh: Mesh) -> None:
    if mesh.surface_tag != TAG_FLAT_TORUS:
        raise UnsupportedSurfaceError("barrier construction requires a flat_torus mesh")


def _translates(lengths: tuple[float, float]) -> np.ndarray:
    L1, L2 = lengths
    return np.array(
        [(a * L1, c * L2) for a in (-1, 0, 1) for c in (-1, 0, 1)], dtype=np.float64
    )


def _branch_data(mesh: Mesh, b: SourcePoint, p: np.ndarray):
    """Distances of p to all source translates, ascending-lex translate order."""
    b_uv = mesh.uv[b.vertex_id]
    diffs = p[None, :] - b_uv[None, :] - _translates(mesh.torus_lengths)
    dists = np.hypot(diffs[:, 0], diffs[:, 1])
    return diffs, dists


def torus_distance_to_points(mesh: Mesh, b: SourcePoint, points: np.ndarray) -> np.ndarray:
    """Exact torus distance from the source to arbitrary uv points."""
    _require_torus(mesh)
    deltas = meshmod.wrap_deltas(points - mesh.uv[b.vertex_id], mesh.torus_lengths)
    return np.hypot(deltas[..., 0], deltas[..., 1])


def branch_gradients(mesh: Mesh, b: SourcePoint, p) -> tuple[np.ndarray, np.ndarray]:
    """Subgradients (v, w) of C|x|^2 - d_b at a two-branch cut point.

    Exactly two source translates must realize the minimum distance (1e-9);
    for each minimizing translate t the branch gradient of d_b is
    (p - b - t) / |p - b - t| and the returned subgradients are its
    negatives, in ascending translate order.
    """
    _require_torus(mesh)
    p = np.asarray(p, dtype=np.float64)
    diffs, dists = _branch_data(mesh, b, p)
    dmin = float(dists.min())
    if dmin <= COINCIDENCE_TOL:
        raise NotACutPointError("point coincides with the source")
    minimizers = np.nonzero(dists <= dmin + COINCIDENCE_TOL)[0]
    pt = (float(p[0]), float(p[1]))
    if minimizers.size < 2:
        raise NotACutPointError(
            f"point {pt} has a unique minimizing branch (distance {dmin:.6g})"
        )
    if minimizers.size > 2:
        trans = _translates(mesh.torus_lengths)[minimizers]
        raise AmbiguousCutPointError(
            f"point {pt} has {minimizers.size} minimizing branches",
            [(float(t[0]), float(t[1])) for t in trans],
        )
    g1 = diffs[minimizers[0]] / dists[minimizers[0]]
    g2 = diffs[minimizers[1]] / dists[minimizers[1]]
    return -g1, -g2


def build_barrier(
    mesh: Mesh,
    b: SourcePoint,
    p,
    A: float,
    radius: float = 0.05,
    samples: int = 10000,
) -> BarrierCertificate:
    """Construct and verify a case-one barrier certificate at p.

    C = 2/d_b(p) + 1 dominates the branch Hessians with margin; B is chosen
    so the barrier Laplacian equals -A.  The domination phi >= d_b is
    verified on a quasi-uniform disk sample whose radius is shrunk to stay
    clear of third branches and inside the estimate's validity region.
    """
    if A <= 0:
        raise ParameterError(f"A must be positive, got {A}")
    p = np.asarray(p, dtype=np.float64)
    v, w = branch_gradients(mesh, b, p)
    _, dists = _branch_data(mesh, b, p)
    d_p = float(np.sort(dists)[0])

    C = 2.0 / d_p + 1.0
    vw = v - w
    vw2 = float(vw @ vw)
    B = (2.0 * _DIM * C + A) / (2.0 * vw2)
    # exact by construction; the FP-evaluated formula must agree to roundoff
    laplacian = -A
    formula = 2.0 * _DIM * C - 2.0 * B * vw2
    if abs(formula - laplacian) > 1e-10 * (2.0 * _DIM * C + A):
        raise ConstructionError("Laplacian formula drifted beyond roundoff")

    # sampling radius: requested cap, convexity region, |s|/2 >= B s^2 region,
    # and clearance from any third branch
    third = np.sort(dists)[2:]
    r = min(radius, 0.5 * d_p, 1.0 / (2.0 * B * np.sqrt(vw2)))
    if third.size:
        r = min(r, 0.5 * float(third.min() - d_p))
    if r < MIN_RADIUS:
        raise ConstructionError(f"sampling radius underflow ({r:.3e} < {MIN_RADIUS:g})")

    k = np.arange(samples, dtype=np.float64)
    rad = r * np.sqrt((k + 0.5) / samples)
    ang = k * (np.pi * (3.0 - np.sqrt(5.0)))  # golden angle
    xs = np.stack([rad * np.cos(ang), rad * np.sin(ang)], axis=1)
    xs[0] = 0.0  # include the touching point itself

    d_vals = torus_distance_to_points(mesh, b, p[None, :] + xs)
    sq = np.sum(xs * xs, axis=1)
    sv = xs @ v
    sw = xs @ w
    f_vals = 0.5 * (sv + sw) + B * (sv - sw) ** 2 - d_p
    phi_vals = C * sq - f_vals
    margin = float((phi_vals - d_vals).min())
    convex_vals = C * sq - d_vals + d_p  # C|x|^2 - d_b(p+x) + d_b(p)
    excess = float(max((sv - convex_vals).max(), (sw - convex_vals).max()))

    if margin < -1e-12:
        raise ConstructionError(
            f"barrier does not dominate the distance (margin {margin:.3e})"
        )
    if abs(phi_vals[0] - d_p) > 1e-12:
        raise ConstructionError("barrier does not touch the distance at p")

    return BarrierCertificate(
        p=(float(p[0]), float(p[1])),
        v=v,
        w=w,
        C=C,
        B=B,
        A=float(A),
        laplacian_at_p=laplacian,
        local_min_margin=margin,
        radius=float(r),
        subgradient_excess=excess,
        sample_count=samples,
    )


@dataclass(frozen=True)
class BlowupRow:
    h: float
    min_laplacian_near_cut: float


@dataclass(frozen=True)
class BlowupTable:
    surface_tag: str
    rows: tuple[BlowupRow, ...]
    monotone: bool  # negative at each level and nonincreasing across levels


def blowup_probe(levels, sources) -> BlowupTable:
    """Discrete Laplacian of the analytic distance near the cut locus,
    per refinement level.

    For each tagged level mesh the probe samples d_b, applies the lumped
    cotangent Laplacian and reports the minimum over vertices within 2h of
    the analytic cut locus.  Values are expected negative and nonincreasing
    as h decreases (the barrier-sense blow-up at desk scale).
    """
    levels = list(levels)
    sources = list(sources)
    if len(levels) < 2:
        raise ParameterError("blowup probe needs at least 2 refinement levels")
    if len(sources) != len(levels):
        raise ParameterError("one source per level required")
    tags = {m.surface_tag for m in levels}
    if len(tags) != 1 or next(iter(tags)) not in (TAG_FLAT_TORUS, "unit_sphere"):
        raise UnsupportedSurfaceError("blowup probe requires one analytic surface family")

    rows = []
    for m, b in zip(levels, sources):
        dist = analytic_distance(m, b)
        truth = analytic_cut_locus(m, b)
        ops = fem.assemble(m)
        lap = fem.discrete_laplacian(ops, dist.field).values
        h = meshmod.max_edge_length(m)
        near = truth.vertex_distance <= 2.0 * h
        rows.append(BlowupRow(h=h, min_laplacian_near_cut=float(lap[near].min())))

    vals = [r.min_laplacian_near_cut for r in rows]
    monotone = all(x < 0.0 for x in vals) and all(
        vals[i + 1] <= vals[i] for i in range(len(vals) - 1)
    )
    return BlowupTable(levels[0].surface_tag, tuple(rows), monotone)
