"""Obstacle problems with the geodesic distance as obstacle on closed
triangulated surfaces: cut-locus detection via the non-contact set, barrier
certification of the distance Laplacian blow-up, and smoothed surrogate
obstacles."""

from .barrier import (
    BarrierCertificate,
    BlowupRow,
    BlowupTable,
    blowup_probe,
    branch_gradients,
    build_barrier,
)
from .cutlocus import CutLocusReport, detect
from .fem import FemOperators, assemble, discrete_laplacian, energy
from .geodesic import (
    CutLocusTruth,
    DistanceField,
    analytic_cut_locus,
    analytic_distance,
    fast_marching,
)
from .mesh import (
    Mesh,
    ScalarField,
    SourcePoint,
    field_on,
    load_mesh,
    make_flat_torus,
    make_icosphere,
    save_mesh,
)
from .obstacle import (
    KktReport,
    ObstacleProblem,
    ObstacleSolution,
    SolverConfig,
    kkt_report,
    oracle_solve,
    solve,
)
from .smoothing import (
    SmoothedObstacle,
    build_smoothed,
    choose_epsilon,
    mollify,
    verify_equivalence,
)
from .sparsela import CgResult, SparseOperator, conjugate_gradient, matvec

__version__ = "0.1.0"

__all__ = [
    "BarrierCertificate",
    "BlowupRow",
    "BlowupTable",
    "CgResult",
    "CutLocusReport",
    "CutLocusTruth",
    "DistanceField",
    "FemOperators",
    "KktReport",
    "Mesh",
    "ObstacleProblem",
    "ObstacleSolution",
    "ScalarField",
    "SmoothedObstacle",
    "SolverConfig",
    "SourcePoint",
    "SparseOperator",
    "analytic_cut_locus",
    "analytic_distance",
    "assemble",
    "blowup_probe",
    "branch_gradients",
    "build_barrier",
    "build_smoothed",
    "choose_epsilon",
    "conjugate_gradient",
    "detect",
    "discrete_laplacian",
    "energy",
    "fast_marching",
    "field_on",
    "kkt_report",
    "load_mesh",
    "make_flat_torus",
    "make_icosphere",
    "matvec",
    "mollify",
    "oracle_solve",
    "save_mesh",
    "solve",
    "verify_equivalence",
]
