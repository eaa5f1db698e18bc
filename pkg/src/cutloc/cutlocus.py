"""Non-contact set extraction and inclusion scoring against analytic truth.

The solver's non-contact set {u < d - theta} is compared with the analytic
cut locus: on tagged surfaces the report scores how completely the set
covers the cut locus and how far it spills beyond it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import mesh as meshmod
from .errors import MeshMismatchError, ParameterError
from .geodesic import CutLocusTruth, DistanceField
from .obstacle import ObstacleSolution


@dataclass(frozen=True)
class CutLocusReport:
    noncontact: np.ndarray  # bool per vertex: d - u > theta
    theta: float
    coverage: float | None  # fraction of near-cut vertices flagged (tagged surfaces)
    excess_radius: float | None  # max distance-to-cut-locus over flagged vertices
    min_gap_on_cut: float | None  # min of d - u within h of the cut locus
    passed: bool


def detect(
    solution: ObstacleSolution,
    distance: DistanceField,
    truth: CutLocusTruth | None,
    theta: float,
) -> CutLocusReport:
    """Flag {d - u > theta} and score it against the analytic cut locus.

    With truth=None (generic meshes) only the raw flagged set is returned.
    Membership tolerance for scoring is h = max edge length.
    """
    if theta <= 0:
        raise ParameterError("theta must be positive")
    if solution.u.mesh_id != distance.field.mesh_id:
        raise MeshMismatchError("solution and distance fields index different meshes")
    gap = distance.field.values - solution.u.values
    noncontact = gap > theta

    if truth is None:
        return CutLocusReport(noncontact, theta, None, None, None, bool(noncontact.any()))

    if truth.mesh.mesh_id != distance.field.mesh_id:
        raise MeshMismatchError("truth belongs to a different mesh")
    h = meshmod.max_edge_length(truth.mesh)
    near = truth.vertex_distance <= h
    if not near.any():
        raise ParameterError("no vertices within h of the analytic cut locus")
    coverage = float(np.count_nonzero(noncontact & near)) / float(np.count_nonzero(near))
    min_gap = float(gap[near].min())
    excess = float(truth.vertex_distance[noncontact].max()) if noncontact.any() else 0.0
    return CutLocusReport(
        noncontact=noncontact,
        theta=theta,
        coverage=coverage,
        excess_radius=excess,
        min_gap_on_cut=min_gap,
        passed=min_gap > 0.0,
    )
