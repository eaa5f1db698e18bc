"""Triangle-mesh kernel: closed surfaces with intrinsic geometry.

Meshes are immutable indexed triangle meshes.  Two analytic test surfaces
carry exact geometry: the flat torus (metric read from per-vertex uv
coordinates with periodic wrap-around, never from the 3D embedding) and the
unit sphere.  Everything else is tagged ``generic`` and measured in 3D.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import MeshGeometryError, MeshParseError, MeshTopologyError, ParameterError

TAG_GENERIC = "generic"
TAG_FLAT_TORUS = "flat_torus"
TAG_UNIT_SPHERE = "unit_sphere"

_mesh_counter = itertools.count()


@dataclass(frozen=True)
class Mesh:
    """Closed triangulated surface.

    Parameters
    ----------
    vertices : (n, 3) float array
        Vertex positions (embedding; for the flat torus this is a
        visualization embedding only).
    triangles : (m, 3) int array
        Vertex index triples.
    surface_tag : str
        One of ``generic``, ``flat_torus``, ``unit_sphere``.
    torus_lengths : (L1, L2) or None
        Fundamental-domain lengths, flat torus only.
    uv : (n, 2) float array or None
        Coordinates in [0, L1) x [0, L2), flat torus only.
    """

    vertices: np.ndarray
    triangles: np.ndarray
    surface_tag: str = TAG_GENERIC
    torus_lengths: tuple[float, float] | None = None
    uv: np.ndarray | None = None
    mesh_id: int = field(default_factory=lambda: next(_mesh_counter))

    def __post_init__(self):
        v = np.ascontiguousarray(np.asarray(self.vertices, dtype=np.float64))
        t = np.ascontiguousarray(np.asarray(self.triangles, dtype=np.int64))
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "triangles", t)
        if self.uv is not None:
            object.__setattr__(
                self, "uv", np.ascontiguousarray(np.asarray(self.uv, dtype=np.float64))
            )
        _validate(self)
        v.setflags(write=False)
        t.setflags(write=False)
        if self.uv is not None:
            self.uv.setflags(write=False)

    @property
    def vertex_count(self) -> int:
        return self.vertices.shape[0]

    @property
    def triangle_count(self) -> int:
        return self.triangles.shape[0]


@dataclass(frozen=True)
class SourcePoint:
    """A distinguished vertex acting as the distance source."""

    vertex_id: int


@dataclass(frozen=True)
class ScalarField:
    """One real value per vertex of a specific mesh."""

    values: np.ndarray
    mesh_id: int

    def __post_init__(self):
        vals = np.ascontiguousarray(np.asarray(self.values, dtype=np.float64))
        if vals.ndim != 1:
            raise ParameterError("scalar field values must be a 1D array")
        if not np.all(np.isfinite(vals)):
            raise ParameterError("scalar field contains non-finite values")
        object.__setattr__(self, "values", vals)
        vals.setflags(write=False)


def field_on(mesh: Mesh, values) -> ScalarField:
    """Wrap per-vertex values as a ScalarField of ``mesh``."""
    vals = np.asarray(values, dtype=np.float64)
    if vals.shape != (mesh.vertex_count,):
        raise ParameterError(
            f"field length {vals.shape} does not match vertex count {mesh.vertex_count}"
        )
    return ScalarField(vals, mesh.mesh_id)


# ---------------------------------------------------------------------------
# intrinsic geometry helpers


def wrap_deltas(deltas: np.ndarray, lengths: tuple[float, float]) -> np.ndarray:
    """Map uv displacement(s) to the shortest periodic representative.

    Each component is wrapped into [-L/2, L/2).
    """
    out = np.array(deltas, dtype=np.float64, copy=True)
    for k, L in enumerate(lengths):
        out[..., k] = (out[..., k] + 0.5 * L) % L - 0.5 * L
    return out


def triangle_edge_lengths(mesh: Mesh) -> np.ndarray:
    """Per-triangle intrinsic edge lengths, entry c = length opposite corner c."""
    t = mesh.triangles
    if mesh.surface_tag == TAG_FLAT_TORUS:
        pts = mesh.uv
        d0 = wrap_deltas(pts[t[:, 2]] - pts[t[:, 1]], mesh.torus_lengths)
        d1 = wrap_deltas(pts[t[:, 0]] - pts[t[:, 2]], mesh.torus_lengths)
        d2 = wrap_deltas(pts[t[:, 1]] - pts[t[:, 0]], mesh.torus_lengths)
    else:
        pts = mesh.vertices
        d0 = pts[t[:, 2]] - pts[t[:, 1]]
        d1 = pts[t[:, 0]] - pts[t[:, 2]]
        d2 = pts[t[:, 1]] - pts[t[:, 0]]
    return np.stack(
        [
            np.linalg.norm(d0, axis=1),
            np.linalg.norm(d1, axis=1),
            np.linalg.norm(d2, axis=1),
        ],
        axis=1,
    )


def triangle_areas(mesh: Mesh) -> np.ndarray:
    """Intrinsic triangle areas (Heron, from intrinsic edge lengths)."""
    el = triangle_edge_lengths(mesh)
    a, b, c = el[:, 0], el[:, 1], el[:, 2]
    s = 0.5 * (a + b + c)
    rad = s * (s - a) * (s - b) * (s - c)
    return np.sqrt(np.maximum(rad, 0.0))


def edges(mesh: Mesh) -> np.ndarray:
    """(E, 2) sorted unique undirected edges, lexicographic order."""
    t = mesh.triangles
    e = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]], axis=0)
    e = np.sort(e, axis=1)
    return np.unique(e, axis=0)


def edge_lengths(mesh: Mesh, edge_array: np.ndarray | None = None) -> np.ndarray:
    """Intrinsic lengths of the given edges (defaults to all edges)."""
    e = edges(mesh) if edge_array is None else edge_array
    if mesh.surface_tag == TAG_FLAT_TORUS:
        d = wrap_deltas(mesh.uv[e[:, 1]] - mesh.uv[e[:, 0]], mesh.torus_lengths)
    else:
        d = mesh.vertices[e[:, 1]] - mesh.vertices[e[:, 0]]
    return np.linalg.norm(d, axis=1)


def max_edge_length(mesh: Mesh) -> float:
    return float(edge_lengths(mesh).max())


def vertex_neighbors(mesh: Mesh) -> list[np.ndarray]:
    """Per-vertex sorted neighbor index arrays."""
    e = edges(mesh)
    nbrs: list[list[int]] = [[] for _ in range(mesh.vertex_count)]
    for i, j in e:
        nbrs[i].append(j)
        nbrs[j].append(i)
    return [np.array(sorted(n), dtype=np.int64) for n in nbrs]


def vertex_triangles(mesh: Mesh) -> list[np.ndarray]:
    """Per-vertex incident-triangle index arrays."""
    inc: list[list[int]] = [[] for _ in range(mesh.vertex_count)]
    for ti, tri in enumerate(mesh.triangles):
        for vi in tri:
            inc[vi].append(ti)
    return [np.array(v, dtype=np.int64) for v in inc]


# ---------------------------------------------------------------------------
# validation


def _validate(mesh: Mesh) -> None:
    v, t = mesh.vertices, mesh.triangles
    if v.ndim != 2 or v.shape[1] != 3:
        raise ParameterError("vertices must be an (n, 3) array")
    if t.ndim != 2 or t.shape[1] != 3:
        raise ParameterError("triangles must be an (m, 3) array")
    n = v.shape[0]
    if t.size and (t.min() < 0 or t.max() >= n):
        raise MeshTopologyError("triangle references a vertex index out of range")
    if np.any(t[:, 0] == t[:, 1]) or np.any(t[:, 1] == t[:, 2]) or np.any(t[:, 0] == t[:, 2]):
        bad = int(
            np.nonzero(
                (t[:, 0] == t[:, 1]) | (t[:, 1] == t[:, 2]) | (t[:, 0] == t[:, 2])
            )[0][0]
        )
        raise MeshTopologyError(f"triangle {bad} has repeated vertex indices")

    if mesh.surface_tag == TAG_FLAT_TORUS:
        if mesh.torus_lengths is None or mesh.uv is None:
            raise ParameterError("flat_torus mesh requires torus_lengths and uv")
        L1, L2 = mesh.torus_lengths
        if L1 <= 0 or L2 <= 0:
            raise ParameterError("torus lengths must be positive")
        if mesh.uv.shape != (n, 2):
            raise ParameterError("uv must be an (n, 2) array")
        if np.any(mesh.uv[:, 0] < 0) or np.any(mesh.uv[:, 0] >= L1):
            raise ParameterError("u coordinates must lie in [0, L1)")
        if np.any(mesh.uv[:, 1] < 0) or np.any(mesh.uv[:, 1] >= L2):
            raise ParameterError("v coordinates must lie in [0, L2)")
    elif mesh.surface_tag == TAG_UNIT_SPHERE:
        norms = np.linalg.norm(v, axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-12):
            raise MeshGeometryError("unit_sphere vertices must have norm 1 (1e-12)")
    elif mesh.surface_tag != TAG_GENERIC:
        raise ParameterError(f"unknown surface tag {mesh.surface_tag!r}")

    # closed 2-manifold: every undirected edge in exactly two triangles
    raw = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]], axis=0)
    raw = np.sort(raw, axis=1)
    uniq, counts = np.unique(raw, axis=0, return_counts=True)
    if np.any(counts != 2):
        bad = uniq[counts != 2][0]
        kind = "boundary" if counts[counts != 2][0] == 1 else "non-manifold"
        raise MeshTopologyError(
            f"{kind} edge ({int(bad[0])}, {int(bad[1])}): "
            f"shared by {int(counts[counts != 2][0])} triangle(s), expected 2"
        )

    areas = triangle_areas(mesh)
    if np.any(areas <= 0.0):
        bad = int(np.nonzero(areas <= 0.0)[0][0])
        raise MeshGeometryError(f"triangle {bad} has non-positive area")

    if mesh.surface_tag in (TAG_FLAT_TORUS, TAG_UNIT_SPHERE):
        euler = n - uniq.shape[0] + t.shape[0]
        expected = 0 if mesh.surface_tag == TAG_FLAT_TORUS else 2
        if euler != expected:
            raise MeshTopologyError(
                f"Euler characteristic {euler} does not match "
                f"{mesh.surface_tag} (expected {expected})"
            )


# ---------------------------------------------------------------------------
# generators


def make_flat_torus(L1: float, L2: float, n1: int, n2: int) -> Mesh:
    """Regular n1 x n2 grid on the flat torus [0, L1) x [0, L2).

    Each grid cell is split into two triangles.  All intrinsic geometry is
    computed from the uv chart; the 3D embedding is a (non-isometric) donut
    for visualization only.
    """
    if L1 <= 0 or L2 <= 0:
        raise ParameterError("torus lengths must be positive")
    if n1 < 3 or n2 < 3:
        raise ParameterError("grid resolution must be at least 3 in each direction")

    ii, jj = np.meshgrid(np.arange(n1), np.arange(n2), indexing="ij")
    uu = ii.ravel() * (L1 / n1)
    vv = jj.ravel() * (L2 / n2)
    uv = np.stack([uu, vv], axis=1)
    # clamp FP drift: i*(L/n) may round to exactly L for the last row
    uv[:, 0] = np.minimum(uv[:, 0], np.nextafter(L1, 0.0))
    uv[:, 1] = np.minimum(uv[:, 1], np.nextafter(L2, 0.0))

    R, r = 1.0, 0.35
    th = 2.0 * np.pi * uv[:, 0] / L1
    ph = 2.0 * np.pi * uv[:, 1] / L2
    verts = np.stack(
        [(R + r * np.cos(ph)) * np.cos(th), (R + r * np.cos(ph)) * np.sin(th), r * np.sin(ph)],
        axis=1,
    )

    tris = []
    for i in range(n1):
        for j in range(n2):
            a = i * n2 + j
            b = ((i + 1) % n1) * n2 + j
            c = ((i + 1) % n1) * n2 + (j + 1) % n2
            d = i * n2 + (j + 1) % n2
            tris.append((a, b, c))
            tris.append((a, c, d))
    return Mesh(verts, np.array(tris, dtype=np.int64), TAG_FLAT_TORUS, (float(L1), float(L2)), uv)


_ICO_T = (1.0 + np.sqrt(5.0)) / 2.0
_ICO_VERTS = np.array(
    [
        (-1, _ICO_T, 0), (1, _ICO_T, 0), (-1, -_ICO_T, 0), (1, -_ICO_T, 0),
        (0, -1, _ICO_T), (0, 1, _ICO_T), (0, -1, -_ICO_T), (0, 1, -_ICO_T),
        (_ICO_T, 0, -1), (_ICO_T, 0, 1), (-_ICO_T, 0, -1), (-_ICO_T, 0, 1),
    ],
    dtype=np.float64,
)
_ICO_FACES = np.array(
    [
        (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
        (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
        (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
        (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
    ],
    dtype=np.int64,
)


def make_icosphere(subdivisions: int) -> Mesh:
    """Unit-radius icosahedron subdivision with vertices projected to |x| = 1."""
    if subdivisions < 0:
        raise ParameterError("subdivisions must be >= 0")
    verts = [p / np.linalg.norm(p) for p in _ICO_VERTS]
    faces = [tuple(f) for f in _ICO_FACES]

    for _ in range(subdivisions):
        midpoint: dict[tuple[int, int], int] = {}

        def mid(i: int, j: int) -> int:
            key = (i, j) if i < j else (j, i)
            idx = midpoint.get(key)
            if idx is None:
                p = verts[i] + verts[j]
                verts.append(p / np.linalg.norm(p))
                idx = len(verts) - 1
                midpoint[key] = idx
            return idx

        new_faces = []
        for a, b, c in faces:
            ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
            new_faces += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = new_faces

    return Mesh(np.array(verts), np.array(faces, dtype=np.int64), TAG_UNIT_SPHERE)


# ---------------------------------------------------------------------------
# file I/O (ASCII OFF / OBJ)


def _read_tokens(path: str) -> list[tuple[int, list[str]]]:
    """Non-empty, comment-stripped lines as (line_number, tokens)."""
    out = []
    try:
        with open(path, "r", encoding="ascii", errors="strict") as fh:
            for ln, line in enumerate(fh, start=1):
                body = line.split("#", 1)[0].strip()
                if body:
                    out.append((ln, body.split()))
    except (OSError, UnicodeDecodeError) as exc:
        raise MeshParseError(f"{path}: cannot read as ASCII mesh file: {exc}") from exc
    return out


def _parse_off(path: str) -> tuple[np.ndarray, np.ndarray]:
    lines = _read_tokens(path)
    if not lines or lines[0][1] != ["OFF"]:
        raise MeshParseError(f"{path}: missing OFF header")
    if len(lines) < 2:
        raise MeshParseError(f"{path}: missing counts line")
    ln, counts = lines[1]
    try:
        nv, nf = int(counts[0]), int(counts[1])
    except (ValueError, IndexError) as exc:
        raise MeshParseError(f"{path}:{ln}: malformed counts line") from exc
    body = lines[2:]
    if len(body) < nv + nf:
        raise MeshParseError(f"{path}: expected {nv} vertex and {nf} face lines")
    verts = np.empty((nv, 3))
    for k in range(nv):
        ln, toks = body[k]
        try:
            verts[k] = [float(x) for x in toks[:3]]
        except ValueError as exc:
            raise MeshParseError(f"{path}:{ln}: malformed vertex line") from exc
        if len(toks) < 3:
            raise MeshParseError(f"{path}:{ln}: vertex line needs 3 coordinates")
    tris = np.empty((nf, 3), dtype=np.int64)
    for k in range(nf):
        ln, toks = body[nv + k]
        try:
            cnt = int(toks[0])
            idx = [int(x) for x in toks[1 : 1 + cnt]]
        except (ValueError, IndexError) as exc:
            raise MeshParseError(f"{path}:{ln}: malformed face line") from exc
        if cnt != 3 or len(idx) != 3:
            raise MeshParseError(f"{path}:{ln}: face {k} is not a triangle")
        tris[k] = idx
    return verts, tris


def _parse_obj(path: str) -> tuple[np.ndarray, np.ndarray]:
    verts, tris = [], []
    for ln, toks in _read_tokens(path):
        kind = toks[0]
        if kind == "v":
            try:
                verts.append([float(x) for x in toks[1:4]])
            except ValueError as exc:
                raise MeshParseError(f"{path}:{ln}: malformed vertex line") from exc
            if len(toks) < 4:
                raise MeshParseError(f"{path}:{ln}: vertex line needs 3 coordinates")
        elif kind == "f":
            refs = toks[1:]
            if len(refs) != 3:
                raise MeshParseError(f"{path}:{ln}: face is not a triangle")
            try:
                tris.append([int(r.split("/")[0]) - 1 for r in refs])
            except ValueError as exc:
                raise MeshParseError(f"{path}:{ln}: malformed face line") from exc
        elif kind in ("vn", "vt", "o", "g", "s", "usemtl", "mtllib"):
            continue
        else:
            raise MeshParseError(f"{path}:{ln}: unknown OBJ directive {kind!r}")
    if not verts or not tris:
        raise MeshParseError(f"{path}: no vertices or faces found")
    return np.array(verts), np.array(tris, dtype=np.int64)


def load_mesh(path: str, format: str | None = None) -> Mesh:
    """Load an ASCII OFF or OBJ file as a generic closed mesh.

    Raises MeshParseError on malformed input and MeshTopologyError if the
    surface has a boundary or non-manifold edge.
    """
    fmt = format or ("obj" if str(path).lower().endswith(".obj") else "off")
    if fmt == "off":
        verts, tris = _parse_off(path)
    elif fmt == "obj":
        verts, tris = _parse_obj(path)
    else:
        raise ParameterError(f"unknown mesh format {fmt!r}")
    return Mesh(verts, tris, TAG_GENERIC)


def save_mesh(mesh: Mesh, path: str, format: str | None = None) -> None:
    """Write the mesh as ASCII OFF or OBJ (full double precision)."""
    fmt = format or ("obj" if str(path).lower().endswith(".obj") else "off")
    v, t = mesh.vertices, mesh.triangles
    with open(path, "w", encoding="ascii") as fh:
        if fmt == "off":
            fh.write("OFF\n")
            fh.write(f"{v.shape[0]} {t.shape[0]} 0\n")
            for p in v:
                fh.write(f"{p[0]:.17g} {p[1]:.17g} {p[2]:.17g}\n")
            for a, b, c in t:
                fh.write(f"3 {a} {b} {c}\n")
        elif fmt == "obj":
            for p in v:
                fh.write(f"v {p[0]:.17g} {p[1]:.17g} {p[2]:.17g}\n")
            for a, b, c in t:
                fh.write(f"f {a + 1} {b + 1} {c + 1}\n")
        else:
            raise ParameterError(f"unknown mesh format {fmt!r}")
