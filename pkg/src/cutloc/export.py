"""Deterministic artifact writers: legacy ASCII VTK, CSV, JSON report."""

from __future__ import annotations

import json

import numpy as np

from .mesh import Mesh


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def write_vtk(path: str, mesh: Mesh, name: str, values: np.ndarray) -> None:
    """Legacy ASCII VTK polydata with one POINT_DATA scalar array."""
    v, t = mesh.vertices, mesh.triangles
    with open(path, "w", encoding="ascii") as fh:
        fh.write("# vtk DataFile Version 3.0\n")
        fh.write(f"cutloc field {name}\n")
        fh.write("ASCII\n")
        fh.write("DATASET POLYDATA\n")
        fh.write(f"POINTS {v.shape[0]} double\n")
        for p in v:
            fh.write(f"{_fmt(p[0])} {_fmt(p[1])} {_fmt(p[2])}\n")
        fh.write(f"POLYGONS {t.shape[0]} {4 * t.shape[0]}\n")
        for a, b, c in t:
            fh.write(f"3 {a} {b} {c}\n")
        fh.write(f"POINT_DATA {v.shape[0]}\n")
        fh.write(f"SCALARS {name} double 1\n")
        fh.write("LOOKUP_TABLE default\n")
        for x in values:
            fh.write(f"{_fmt(x)}\n")


def write_csv(path: str, values: np.ndarray) -> None:
    """Per-vertex CSV: vertex_id,value."""
    with open(path, "w", encoding="ascii") as fh:
        fh.write("vertex_id,value\n")
        for i, x in enumerate(values):
            fh.write(f"{i},{_fmt(x)}\n")


def jsonable(obj):
    """Recursively convert numpy scalars/arrays for json.dump."""
    if isinstance(obj, dict):
        return {k: jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def write_report(path: str, report: dict) -> None:
    with open(path, "w", encoding="ascii") as fh:
        json.dump(jsonable(report), fh, indent=2, sort_keys=True)
        fh.write("\n")
