import numpy as np
import pytest

import cutloc as cl
from cutloc.barrier import torus_distance_to_points
from cutloc.errors import (
    AmbiguousCutPointError,
    ConstructionError,
    NotACutPointError,
    ParameterError,
    UnsupportedSurfaceError,
)

ACCEPTANCE_POINTS = [(0.5, 0.0), (0.5, 0.25), (0.3, 0.5)]


@pytest.fixture(scope="module")
def torus():
    return cl.make_flat_torus(1, 1, 64, 64)


@pytest.fixture(scope="module")
def source():
    return cl.SourcePoint(0)


class TestBranchGradients:
    def test_horizontal_cut_point(self, torus, source):
        v, w = cl.branch_gradients(torus, source, (0.5, 0.0))
        assert np.allclose(v, [-1.0, 0.0], atol=1e-15)
        assert np.allclose(w, [1.0, 0.0], atol=1e-15)

    def test_off_axis_cut_point(self, torus, source):
        v, w = cl.branch_gradients(torus, source, (0.5, 0.25))
        r = np.hypot(0.5, 0.25)
        assert np.allclose(v, [-0.5 / r, -0.25 / r], atol=1e-15)
        assert np.allclose(w, [0.5 / r, -0.25 / r], atol=1e-15)
        assert abs(np.linalg.norm(v) - 1.0) <= 1e-12
        assert abs(np.linalg.norm(w) - 1.0) <= 1e-12
        assert not np.allclose(v, w)

    def test_not_a_cut_point(self, torus, source):
        with pytest.raises(NotACutPointError):
            cl.branch_gradients(torus, source, (0.25, 0.25))

    def test_diagonal_corner_ambiguous(self, torus, source):
        with pytest.raises(AmbiguousCutPointError) as exc:
            cl.branch_gradients(torus, source, (0.5, 0.5))
        assert len(exc.value.minimizers) == 4

    def test_source_itself(self, torus, source):
        with pytest.raises(NotACutPointError):
            cl.branch_gradients(torus, source, (0.0, 0.0))

    def test_requires_torus(self):
        sphere = cl.make_icosphere(1)
        with pytest.raises(UnsupportedSurfaceError):
            cl.branch_gradients(sphere, cl.SourcePoint(0), (0.5, 0.0))


class TestBuildBarrier:
    def test_hand_example_a10(self, torus, source):
        cert = cl.build_barrier(torus, source, (0.5, 0.0), 10.0)
        assert cert.C == 5.0
        assert cert.B == 3.75
        assert cert.laplacian_at_p == -10.0
        assert cert.local_min_margin >= -1e-12

    def test_hand_example_a1(self, torus, source):
        cert = cl.build_barrier(torus, source, (0.5, 0.0), 1.0)
        assert cert.B == 21.0 / 8.0
        assert cert.laplacian_at_p == -1.0
        assert cert.local_min_margin >= -1e-12

    def test_zero_amplitude_rejected(self, torus, source):
        with pytest.raises(ParameterError):
            cl.build_barrier(torus, source, (0.5, 0.0), 0.0)

    @pytest.mark.parametrize("A", [1.0, 10.0, 100.0])
    @pytest.mark.parametrize("p", ACCEPTANCE_POINTS)
    def test_acceptance_grid(self, torus, source, A, p):
        cert = cl.build_barrier(torus, source, p, A)
        # exact algebraic Laplacian, FP formula within roundoff
        assert cert.laplacian_at_p == -A
        vw2 = float((cert.v - cert.w) @ (cert.v - cert.w))
        formula = 4.0 * cert.C - 2.0 * cert.B * vw2
        assert abs(formula + A) <= 1e-10 * (4.0 * cert.C + A)
        assert cert.local_min_margin >= -1e-12
        assert cert.subgradient_excess <= 1e-12
        assert cert.radius >= 1e-4
        assert cert.sample_count >= 10000

    def test_touching_value_exact(self, torus, source):
        # phi(p) - d_b(p) = 0 exactly: margin includes the x = 0 sample
        cert = cl.build_barrier(torus, source, (0.5, 0.25), 10.0)
        assert cert.local_min_margin <= 0.0
        d_p = torus_distance_to_points(torus, source, np.array([[0.5, 0.25]]))[0]
        phi_at_p = cert.C * 0.0 - (0.0 + cert.B * 0.0 - d_p)
        assert phi_at_p == d_p

    def test_radius_shrinks_for_large_amplitude(self, torus, source):
        small = cl.build_barrier(torus, source, (0.5, 0.0), 1.0)
        large = cl.build_barrier(torus, source, (0.5, 0.0), 100.0)
        assert large.radius < small.radius
        # shrunk exactly to the estimate's validity region
        vw = large.v - large.w
        expected = 1.0 / (2.0 * large.B * np.linalg.norm(vw))
        assert abs(large.radius - expected) <= 1e-12

    def test_radius_underflow_near_triple_point(self, torus, source):
        with pytest.raises(ConstructionError, match="radius"):
            cl.build_barrier(torus, source, (0.5, 0.5 - 1e-5), 1.0)

    def test_barrier_dominates_on_independent_grid(self, torus, source):
        # independent check of phi >= d_b on a regular grid (not the spiral)
        cert = cl.build_barrier(torus, source, (0.3, 0.5), 10.0)
        p = np.array([0.3, 0.5])
        g = np.linspace(-cert.radius, cert.radius, 101)
        xx, yy = np.meshgrid(g, g)
        pts = np.stack([xx.ravel(), yy.ravel()], axis=1)
        pts = pts[np.hypot(pts[:, 0], pts[:, 1]) <= cert.radius]
        d_vals = torus_distance_to_points(torus, source, p[None, :] + pts)
        d_p = torus_distance_to_points(torus, source, p[None, :])[0]
        sv, sw = pts @ cert.v, pts @ cert.w
        phi = cert.C * np.sum(pts * pts, axis=1) - (
            0.5 * (sv + sw) + cert.B * (sv - sw) ** 2 - d_p
        )
        assert (phi - d_vals).min() >= -1e-12


class TestBlowupProbe:
    def test_torus_crease_rate(self):
        levels = [cl.make_flat_torus(1, 1, n, n) for n in (64, 128)]
        table = cl.blowup_probe(levels, [cl.SourcePoint(0)] * 2)
        assert table.monotone
        for row in table.rows:
            assert row.min_laplacian_near_cut <= -1.0 / (4.0 * row.h)

    def test_sphere_conjugate_point(self):
        levels = [cl.make_icosphere(k) for k in (3, 4)]
        table = cl.blowup_probe(levels, [cl.SourcePoint(0)] * 2)
        vals = [r.min_laplacian_near_cut for r in table.rows]
        assert vals[0] < 0 and vals[1] < 0
        assert vals[1] < vals[0]
        assert table.monotone

    def test_needs_two_levels(self):
        with pytest.raises(ParameterError):
            cl.blowup_probe([cl.make_icosphere(2)], [cl.SourcePoint(0)])

    def test_rejects_mixed_families(self):
        with pytest.raises(UnsupportedSurfaceError):
            cl.blowup_probe(
                [cl.make_icosphere(2), cl.make_flat_torus(1, 1, 8, 8)],
                [cl.SourcePoint(0)] * 2,
            )

    def test_rejects_generic(self, tmp_path):
        path = str(tmp_path / "g.off")
        cl.save_mesh(cl.make_icosphere(1), path)
        g = cl.load_mesh(path)
        with pytest.raises(UnsupportedSurfaceError):
            cl.blowup_probe([g, g], [cl.SourcePoint(0)] * 2)
