"""Command-line front end: configuration, end-to-end runs, artifact export.

Commands operate on one surface per run and write deterministic artifacts
(legacy ASCII VTK + CSV fields, one JSON report) into the output directory.
Exit status is 0 iff every invariant check of the executed modules passed.
"""

from __future__ import annotations

import argparse
import dataclasses
import os
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from . import barrier as barriermod
from . import cutlocus as cutlocusmod
from . import fem
from . import geodesic
from . import mesh as meshmod
from . import obstacle as obstaclemod
from . import smoothing as smoothingmod
from .errors import ConfigError, CutlocError
from .export import write_csv, write_report, write_vtk
from .mesh import TAG_FLAT_TORUS, TAG_UNIT_SPHERE, Mesh, SourcePoint

COMMANDS = ("solve", "detect", "barrier", "blowup", "smooth", "all")

DEFAULT_POINTS = ((0.5, 0.0), (0.5, 0.25), (0.3, 0.5))
DEFAULT_AMPLITUDES = (1.0, 10.0, 100.0)


@dataclass
class RunConfig:
    """Resolved run configuration (file defaults + overrides)."""

    surface: str = "torus 1 1 64 64"
    source_vertex: int = 0
    m: float = 1.0
    out: str = "cutloc_out"
    omega: float = 1.5
    tol_update: float = 1e-11
    tol_kkt: float = 1e-8
    max_sweeps: int = 200000
    theta: float | None = None  # default: max(10 tol_kkt, 1e-6)
    amplitudes: tuple = DEFAULT_AMPLITUDES
    points: tuple = DEFAULT_POINTS
    levels: int = 2
    passes: int = 20
    epsilon: float | None = None  # generic-mesh smoothing only

    def resolved_theta(self) -> float:
        return self.theta if self.theta is not None else max(10.0 * self.tol_kkt, 1e-6)

    def solver(self) -> obstaclemod.SolverConfig:
        return obstaclemod.SolverConfig(
            omega=self.omega,
            tol_update=self.tol_update,
            tol_kkt=self.tol_kkt,
            max_sweeps=self.max_sweeps,
        )


def _parse_float_list(text: str) -> tuple:
    return tuple(float(tok) for tok in text.split())


def _parse_points(text: str) -> tuple:
    pts = []
    for tok in text.split():
        parts = tok.split(",")
        if len(parts) != 2:
            raise ValueError(f"point {tok!r} is not 'u,v'")
        pts.append((float(parts[0]), float(parts[1])))
    return tuple(pts)


# full key -> (attribute, parser)
_KEYS = {
    "surface": ("surface", str),
    "source_vertex": ("source_vertex", int),
    "m": ("m", float),
    "out": ("out", str),
    "solver.omega": ("omega", float),
    "solver.tol_update": ("tol_update", float),
    "solver.tol_kkt": ("tol_kkt", float),
    "solver.max_sweeps": ("max_sweeps", int),
    "detect.theta": ("theta", float),
    "barrier.amplitudes": ("amplitudes", _parse_float_list),
    "barrier.points": ("points", _parse_points),
    "blowup.levels": ("levels", int),
    "smooth.passes": ("passes", int),
    "smooth.epsilon": ("epsilon", float),
}

_SECTIONS = ("solver", "detect", "barrier", "blowup", "smooth")


def _set_key(config: RunConfig, full_key: str, raw: str, where: str) -> None:
    if full_key not in _KEYS:
        raise ConfigError(f"{where}: unknown key {full_key!r}")
    attr, parser = _KEYS[full_key]
    try:
        value = parser(raw)
    except ValueError as exc:
        raise ConfigError(f"{where}: invalid value for {full_key!r}: {exc}") from exc
    setattr(config, attr, value)


def parse_config(path: str) -> RunConfig:
    """Parse a line-oriented `key = value` file with [section] headers.

    Unknown keys and duplicate keys are errors; all defaults are documented
    in ``cutloc --help``.
    """
    config = RunConfig()
    seen: set[str] = set()
    section = ""
    try:
        with open(path, "r", encoding="ascii") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    for ln, line in enumerate(lines, start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if body.startswith("["):
            if not body.endswith("]"):
                raise ConfigError(f"{path}:{ln}: malformed section header")
            section = body[1:-1].strip()
            if section not in _SECTIONS:
                raise ConfigError(f"{path}:{ln}: unknown section [{section}]")
            continue
        if "=" not in body:
            raise ConfigError(f"{path}:{ln}: expected 'key = value'")
        key, raw = (part.strip() for part in body.split("=", 1))
        full_key = f"{section}.{key}" if section else key
        if full_key in seen:
            raise ConfigError(f"{path}:{ln}: duplicate key {full_key!r}")
        seen.add(full_key)
        _set_key(config, full_key, raw, f"{path}:{ln}")
    validate_config(config)
    return config


def apply_overrides(config: RunConfig, overrides: list[str]) -> None:
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not 'key=value'")
        key, raw = item.split("=", 1)
        _set_key(config, key.strip(), raw.strip(), f"override {item!r}")
    validate_config(config)


def validate_config(config: RunConfig) -> None:
    if config.m <= 0:
        raise ConfigError("key 'm': must be positive")
    if not 0.0 < config.omega < 2.0:
        raise ConfigError("key 'solver.omega': must lie in (0, 2)")
    for name, attr in (
        ("solver.tol_update", "tol_update"),
        ("solver.tol_kkt", "tol_kkt"),
    ):
        if getattr(config, attr) <= 0:
            raise ConfigError(f"key {name!r}: must be positive")
    if config.max_sweeps < 1:
        raise ConfigError("key 'solver.max_sweeps': must be >= 1")
    if config.theta is not None and config.theta <= 0:
        raise ConfigError("key 'detect.theta': must be positive")
    if config.source_vertex < 0:
        raise ConfigError("key 'source_vertex': must be >= 0")
    if any(a <= 0 for a in config.amplitudes):
        raise ConfigError("key 'barrier.amplitudes': must be positive")
    if config.levels < 2:
        raise ConfigError("key 'blowup.levels': must be >= 2")
    if config.passes < 0:
        raise ConfigError("key 'smooth.passes': must be >= 0")
    if config.epsilon is not None and config.epsilon <= 0:
        raise ConfigError("key 'smooth.epsilon': must be positive")
    toks = config.surface.split()
    if not toks or toks[0] not in ("torus", "sphere", "mesh"):
        raise ConfigError("key 'surface': expected 'torus L1 L2 n1 n2', 'sphere k' or 'mesh path'")


# ---------------------------------------------------------------------------
# run orchestration


def _build_surface(config: RunConfig) -> Mesh:
    toks = config.surface.split()
    kind = toks[0]
    if kind == "torus":
        if len(toks) != 5:
            raise ConfigError("surface torus needs 'torus L1 L2 n1 n2'")
        return meshmod.make_flat_torus(float(toks[1]), float(toks[2]), int(toks[3]), int(toks[4]))
    if kind == "sphere":
        if len(toks) != 2:
            raise ConfigError("surface sphere needs 'sphere k'")
        return meshmod.make_icosphere(int(toks[1]))
    if len(toks) not in (2, 3):
        raise ConfigError("surface mesh needs 'mesh path [off|obj]'")
    return meshmod.load_mesh(toks[1], toks[2] if len(toks) == 3 else None)


def _refined_surfaces(config: RunConfig) -> list[Mesh]:
    toks = config.surface.split()
    if toks[0] == "torus":
        L1, L2, n1, n2 = float(toks[1]), float(toks[2]), int(toks[3]), int(toks[4])
        return [
            meshmod.make_flat_torus(L1, L2, n1 * 2**i, n2 * 2**i) for i in range(config.levels)
        ]
    if toks[0] == "sphere":
        k = int(toks[1])
        return [meshmod.make_icosphere(k + i) for i in range(config.levels)]
    raise ConfigError("blowup requires an analytic surface (torus or sphere)")


def _distance_field(mesh: Mesh, b: SourcePoint) -> geodesic.DistanceField:
    if mesh.surface_tag in (TAG_FLAT_TORUS, TAG_UNIT_SPHERE):
        return geodesic.analytic_distance(mesh, b)
    return geodesic.fast_marching(mesh, b)


class _Runner:
    def __init__(self, command: str, config: RunConfig, outdir: str):
        self.command = command
        self.config = config
        self.outdir = outdir
        self.report: dict = {
            "command": command,
            "config": {k: v for k, v in dataclasses.asdict(config).items()},
            "checks": {},
            "timings": {},
            "errors": [],
        }
        self.mesh: Mesh | None = None
        self.solution = None
        self.distance = None
        self.truth = None
        self.problem = None

    def _timed(self, name: str, fn):
        start = time.perf_counter()
        result = fn()
        self.report["timings"][name] = time.perf_counter() - start
        return result

    def _ensure_mesh(self):
        if self.mesh is None:
            self.mesh = self._timed("build_mesh", lambda: _build_surface(self.config))
            if self.config.source_vertex >= self.mesh.vertex_count:
                raise ConfigError("key 'source_vertex': out of range for this surface")
            self.report["surface"] = {
                "tag": self.mesh.surface_tag,
                "vertices": self.mesh.vertex_count,
                "triangles": self.mesh.triangle_count,
                "max_edge_length": meshmod.max_edge_length(self.mesh),
            }

    def _ensure_solve(self):
        if self.solution is not None:
            return
        self._ensure_mesh()
        b = SourcePoint(self.config.source_vertex)
        self.distance = self._timed("distance", lambda: _distance_field(self.mesh, b))
        if self.mesh.surface_tag in (TAG_FLAT_TORUS, TAG_UNIT_SPHERE):
            self.truth = geodesic.analytic_cut_locus(self.mesh, b)
        ops = self._timed("assemble", lambda: fem.assemble(self.mesh))
        self.problem = obstaclemod.ObstacleProblem(ops, self.distance.field, self.config.m)
        self.solution = self._timed(
            "solve", lambda: obstaclemod.solve(self.problem, self.config.solver())
        )
        sol = self.solution
        feas = int(np.count_nonzero(sol.u.values > self.distance.field.values))
        self.report["solver"] = {
            "converged": sol.converged,
            "sweeps": sol.iterations,
            "kkt_residual": sol.kkt_residual,
            "last_update": sol.last_update,
            "energy": sol.energy,
            "active_vertices": int(np.count_nonzero(sol.active)),
            "feasibility_violations": feas,
        }
        self.report["checks"]["solver_converged"] = bool(sol.converged)
        self.report["checks"]["feasible"] = feas == 0

    def do_solve(self):
        self._ensure_solve()
        write_vtk(os.path.join(self.outdir, "u.vtk"), self.mesh, "u", self.solution.u.values)
        write_csv(os.path.join(self.outdir, "u.csv"), self.solution.u.values)

    def do_detect(self):
        self._ensure_solve()
        theta = self.config.resolved_theta()
        rep = self._timed(
            "detect",
            lambda: cutlocusmod.detect(self.solution, self.distance, self.truth, theta),
        )
        self.report["cutlocus"] = {
            "theta": rep.theta,
            "coverage": rep.coverage,
            "excess_radius": rep.excess_radius,
            "min_gap_on_cut": rep.min_gap_on_cut,
            "noncontact_vertices": int(np.count_nonzero(rep.noncontact)),
            "passed": rep.passed,
        }
        if self.truth is not None:
            self.report["checks"]["inclusion_positive_gap"] = bool(rep.passed)

    def do_barrier(self):
        self._ensure_mesh()
        b = SourcePoint(self.config.source_vertex)
        certs = []
        ok = True
        for amp in self.config.amplitudes:
            for point in self.config.points:
                cert = barriermod.build_barrier(self.mesh, b, point, amp)
                certs.append(
                    {
                        "p": list(cert.p),
                        "v": cert.v.tolist(),
                        "w": cert.w.tolist(),
                        "C": cert.C,
                        "B": cert.B,
                        "A": cert.A,
                        "laplacian_at_p": cert.laplacian_at_p,
                        "local_min_margin": cert.local_min_margin,
                        "radius": cert.radius,
                        "subgradient_excess": cert.subgradient_excess,
                        "samples": cert.sample_count,
                    }
                )
                ok = ok and cert.local_min_margin >= -1e-12
        self.report["barriers"] = certs
        self.report["checks"]["barriers_dominate"] = ok

    def do_blowup(self):
        levels = self._timed("blowup_meshes", lambda: _refined_surfaces(self.config))
        sources = [SourcePoint(self.config.source_vertex) for _ in levels]
        table = self._timed("blowup", lambda: barriermod.blowup_probe(levels, sources))
        self.report["blowup"] = {
            "surface": table.surface_tag,
            "rows": [
                {"h": r.h, "min_laplacian_near_cut": r.min_laplacian_near_cut}
                for r in table.rows
            ],
            "monotone": table.monotone,
        }
        self.report["checks"]["blowup_monotone"] = bool(table.monotone)

    def do_smooth(self):
        self._ensure_solve()
        smoothed = self._timed(
            "build_smoothed",
            lambda: smoothingmod.build_smoothed(
                self.solution,
                self.distance,
                self.truth,
                passes=self.config.passes,
                epsilon=self.config.epsilon,
            ),
        )
        disc = self._timed(
            "verify_equivalence",
            lambda: smoothingmod.verify_equivalence(
                self.problem, smoothed, self.config.solver(), original_solution=self.solution
            ),
        )
        dev = float(
            np.abs(
                smoothed.mollified.values
                - (self.distance.field.values - 0.5 * smoothed.epsilon)
            ).max()
        )
        self.report["smoothing"] = {
            "epsilon": smoothed.epsilon,
            "near_b_radius": smoothed.near_b_radius,
            "sigma": smoothed.sigma,
            "passes": smoothed.passes,
            "mollify_deviation_max": dev,
            "crease_max": smoothed.crease_max,
            "away_median": smoothed.away_median,
            "crease_removed": smoothed.crease_removed,
            "equivalence_discrepancy": disc,
        }
        tol = max(10.0 * self.config.tol_kkt, 1e-6)
        self.report["checks"]["smoothing_invariants"] = True  # construction validates
        self.report["checks"]["mollify_bound"] = dev <= 0.49 * smoothed.epsilon
        self.report["checks"]["equivalence"] = disc <= tol
        write_vtk(
            os.path.join(self.outdir, "dtilde.vtk"), self.mesh, "dtilde", smoothed.field.values
        )
        write_csv(os.path.join(self.outdir, "dtilde.csv"), smoothed.field.values)

    def run(self) -> int:
        try:
            if self.command in ("solve", "all"):
                self.do_solve()
            if self.command in ("detect", "all"):
                self.do_detect()
            run_barrier = self.command == "barrier" or (
                self.command == "all" and self.mesh_tag() == TAG_FLAT_TORUS
            )
            if run_barrier:
                self.do_barrier()
            run_blowup = self.command == "blowup" or (
                self.command == "all" and self.surface_kind() != "mesh"
            )
            if run_blowup:
                self.do_blowup()
            if self.command in ("smooth", "all"):
                self.do_smooth()
        except CutlocError as exc:
            self.report["errors"].append(f"{type(exc).__name__}: {exc}")
            self.report["status"] = "error"
            return 1
        ok = all(self.report["checks"].values())
        self.report["status"] = "ok" if ok else "check_failed"
        return 0 if ok else 1

    def mesh_tag(self) -> str:
        self._ensure_mesh()
        return self.mesh.surface_tag

    def surface_kind(self) -> str:
        return self.config.surface.split()[0]


def run(command: str, config: RunConfig) -> int:
    """Execute one command; artifacts land in config.out.  Returns exit status."""
    if command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}")
    outdir = config.out
    os.makedirs(outdir, exist_ok=True)
    lock = os.path.join(outdir, ".cutloc.lock")
    try:
        fd = os.open(lock, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        raise ConfigError(
            f"output directory {outdir!r} is locked by another run (remove {lock} if stale)"
        ) from None
    os.close(fd)
    try:
        runner = _Runner(command, config, outdir)
        status = runner.run()
        write_report(os.path.join(outdir, "report.json"), runner.report)
        return status
    finally:
        os.remove(lock)


_EPILOG = """\
config file: line-oriented `key = value` with [section] headers; '#' comments.
keys and defaults:
  surface = torus 1 1 64 64     torus L1 L2 n1 n2 | sphere k | mesh path [off|obj]
  source_vertex = 0
  m = 1
  out = cutloc_out
  [solver]  omega = 1.5, tol_update = 1e-11, tol_kkt = 1e-8, max_sweeps = 200000
  [detect]  theta = max(10*tol_kkt, 1e-6)
  [barrier] amplitudes = 1 10 100, points = 0.5,0 0.5,0.25 0.3,0.5
  [blowup]  levels = 2
  [smooth]  passes = 20, epsilon (generic meshes only)
unknown or duplicate keys are errors.  --override key=value uses the same
names (sectioned keys as solver.omega etc.) and wins over the file.
"""


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="cutloc",
        description="Obstacle problems with geodesic-distance obstacles on closed "
        "triangulated surfaces: solve, detect the cut locus, certify barriers, "
        "probe Laplacian blow-up, build the smoothed obstacle.",
        epilog=_EPILOG,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, help="path to the run configuration file")
    parser.add_argument("--out", help="output directory (overrides the config)")
    parser.add_argument(
        "--override",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override a config key (repeatable)",
    )
    args = parser.parse_args(argv)
    try:
        config = parse_config(args.config)
        apply_overrides(config, args.override)
        if args.out:
            config.out = args.out
        return run(args.command, config)
    except CutlocError as exc:
        print(f"cutloc: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
