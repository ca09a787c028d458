"""Rasterizer: coverage, fill-rule ownership, depth, interpolation, clipping,
order independence, and cross-backend agreement."""

import numpy as np
import pytest

from viewsynth import (BACKENDS, CameraIntrinsics, Mesh, Pose, RenderSettings,
                       make_phantom, render, render_depth, render_mask, ssim)

from oracles import coverage_oracle, random_front_mesh, raycast_oracle

IDENTITY = Pose(np.eye(3), np.zeros(3))

# identity-like intrinsics: at z=1 the screen position equals the camera x/y,
# so tests can place triangles directly in pixel coordinates
SCREEN_K = CameraIntrinsics(fx=1.0, fy=1.0, cx=0.0, cy=0.0, width=16, height=16)


def screen_mesh(tri_xy_list, colors=None):
    """Mesh whose triangles project exactly to the given screen triangles."""
    verts = []
    tris = []
    for tri in tri_xy_list:
        base = len(verts)
        verts.extend([[x, y, 1.0] for (x, y) in tri])
        tris.append([base, base + 1, base + 2])
    if colors is None:
        colors = np.full((len(verts), 3), 200, dtype=np.uint8)
    return Mesh(np.array(verts, dtype=np.float64), np.array(tris), colors=colors)


def settings(backend, **kw):
    return RenderSettings(backend=backend, **kw)


class TestCoverage:
    @pytest.mark.parametrize("backend", BACKENDS)
    def test_classic_right_triangle_matches_brute_force(self, backend):
        tri = [(0.0, 0.0), (4.0, 0.0), (0.0, 4.0)]
        k = CameraIntrinsics(fx=1.0, fy=1.0, cx=0.0, cy=0.0, width=8, height=8)
        mask = render_mask(screen_mesh([tri]), IDENTITY, k, settings(backend))
        expected = coverage_oracle(tri, 8, 8)
        assert np.array_equal(mask, expected)
        # the top-left rule keeps exactly the two catheti, not the hypotenuse
        assert mask.sum() == 6

    @pytest.mark.parametrize("backend", BACKENDS)
    def test_random_triangles_match_brute_force(self, backend):
        rng = np.random.default_rng(20)
        for _ in range(40):
            tri = [tuple(rng.uniform(-2.0, 18.0, size=2)) for _ in range(3)]
            mask = render_mask(screen_mesh([tri]), IDENTITY, SCREEN_K,
                               settings(backend))
            assert np.array_equal(mask, coverage_oracle(tri, 16, 16))

    @pytest.mark.parametrize("backend", BACKENDS)
    def test_vertex_on_pixel_center_cases(self, backend):
        # axis-aligned edges and vertices exactly on pixel centers force the
        # fill rule to decide every boundary pixel
        cases = [
            [(0.5, 0.5), (8.5, 0.5), (0.5, 8.5)],
            [(2.5, 2.5), (10.5, 2.5), (10.5, 10.5)],
            [(1.0, 1.0), (9.0, 1.0), (5.0, 9.0)],
            [(3.5, 1.5), (3.5, 9.5), (12.5, 5.5)],
        ]
        for tri in cases:
            mask = render_mask(screen_mesh([tri]), IDENTITY, SCREEN_K,
                               settings(backend))
            assert np.array_equal(mask, coverage_oracle(tri, 16, 16)), tri

    @pytest.mark.parametrize("backend", BACKENDS)
    def test_shared_edge_owned_by_exactly_one_triangle(self, backend):
        rng = np.random.default_rng(21)
        quads = [
            # diagonal split with integer and half-integer coordinates
            [(1.0, 1.0), (13.0, 2.0), (12.0, 12.0), (2.0, 11.0)],
            [(0.5, 0.5), (15.5, 0.5), (15.5, 15.5), (0.5, 15.5)],
        ]
        for _ in range(10):
            c = rng.uniform(2.0, 14.0, size=2)
            quads.append([tuple(c + rng.uniform(1.0, 7.0) * np.array(
                [np.cos(a), np.sin(a)])) for a in np.sort(rng.uniform(0, 2 * np.pi, 4))])
        for quad in quads:
            a, b, c, d = quad
            m1 = render_mask(screen_mesh([[a, b, c]]), IDENTITY, SCREEN_K,
                             settings(backend))
            m2 = render_mask(screen_mesh([[a, c, d]]), IDENTITY, SCREEN_K,
                             settings(backend))
            both = render_mask(screen_mesh([[a, b, c], [a, c, d]]), IDENTITY,
                               SCREEN_K, settings(backend))
            assert not (m1 & m2).any(), f"overlap on shared edge of {quad}"
            assert np.array_equal(m1 | m2, both), f"crack on shared edge of {quad}"

    @pytest.mark.parametrize("backend", BACKENDS)
    def test_degenerate_triangles_skipped(self, backend):
        verts = np.array([[0.0, 0.0, 1.0], [8.0, 0.0, 1.0], [4.0, 4.0, 1.0]])
        mesh = Mesh(verts, np.array([[0, 0, 1], [0, 1, 1]]),
                    colors=np.full((3, 3), 10, np.uint8))
        mask = render_mask(mesh, IDENTITY, SCREEN_K, settings(backend))
        assert not mask.any()

        collinear = screen_mesh([[(1.0, 1.0), (5.0, 5.0), (9.0, 9.0)]])
        assert not render_mask(collinear, IDENTITY, SCREEN_K,
                               settings(backend)).any()


class TestColorAndDepth:
    @pytest.mark.parametrize("backend", BACKENDS)
    def test_constant_quad_fills_frame(self, backend):
        quad = make_phantom("quad", scale=200.0)
        mesh = quad.with_colors(np.tile(np.array([10, 200, 30], np.uint8), (4, 1)))
        k = CameraIntrinsics(fx=10.0, fy=10.0, cx=8.0, cy=8.0, width=16, height=16)
        out = render(mesh, Pose(np.eye(3), np.array([0.0, 0.0, 5.0])), k,
                     settings(backend))
        assert out.mask.all()
        assert (out.color == [10, 200, 30]).all()

    @pytest.mark.parametrize("backend", BACKENDS)
    def test_nearer_triangle_wins(self, backend):
        near = [(2.0, 2.0), (14.0, 2.0), (8.0, 14.0)]
        mesh_near = screen_mesh([near], colors=np.full((3, 3), 50, np.uint8))
        far_verts = np.array([[x * 3, y * 3, 3.0] for (x, y) in near])
        verts = np.vstack([mesh_near.vertices, far_verts])
        colors = np.vstack([mesh_near.colors,
                            np.full((3, 3), 250, np.uint8)])
        mesh = Mesh(verts, np.array([[0, 1, 2], [3, 4, 5]]), colors=colors)
        out = render(mesh, IDENTITY, SCREEN_K, settings(backend))
        covered = out.mask
        assert (out.color[covered] == 50).all()
        assert np.allclose(out.depth[covered], 1.0)

    @pytest.mark.parametrize("backend", BACKENDS)
    def test_plane_depth_constant(self, backend):
        quad = make_phantom("quad", scale=100.0)
        k = CameraIntrinsics(fx=100.0, fy=100.0, cx=32.0, cy=32.0,
                             width=64, height=64)
        depth = render_depth(quad, Pose(np.eye(3), np.array([0.0, 0.0, 7.0])),
                             k, settings(backend))
        assert np.isfinite(depth).all()
        assert np.abs(depth - 7.0).max() < 1e-6

    @pytest.mark.parametrize("backend", BACKENDS)
    def test_perspective_correct_color_on_slanted_triangle(self, backend):
        # color is a linear field of world position, so perspective-correct
        # interpolation must reproduce it exactly (up to 8-bit quantization);
        # affine screen-space interpolation would be off by tens of levels
        verts = np.array([[-10.0, -10.0, 5.0], [10.0, -10.0, 9.0],
                          [0.0, 12.0, 14.0]])

        def field(p):
            return np.column_stack([128 + 4.0 * p[:, 0],
                                    100 + 3.0 * p[:, 1],
                                    20 + 10.0 * p[:, 2]])

        colors = np.clip(np.rint(field(verts)), 0, 255).astype(np.uint8)
        mesh = Mesh(verts, np.array([[0, 1, 2]]), colors=colors)
        k = CameraIntrinsics(fx=30.0, fy=30.0, cx=32.0, cy=32.0,
                             width=64, height=64)
        out = render(mesh, IDENTITY, k, settings(backend))
        depth, edge_dist = raycast_oracle(mesh, IDENTITY, k)
        interior = out.mask & (edge_dist > 0.5)
        assert interior.sum() > 200

        jj, ii = np.nonzero(interior)
        dirs = np.column_stack([(ii + 0.5 - k.cx) / k.fx,
                                (jj + 0.5 - k.cy) / k.fy,
                                np.ones(len(ii))])
        points = dirs * depth[interior][:, None]
        expected = field(points)
        got = out.color[interior].astype(np.float64)
        assert np.abs(got - expected).max() <= 1.5

    @pytest.mark.parametrize("backend", BACKENDS)
    def test_raycast_oracle_on_random_meshes(self, backend):
        rng = np.random.default_rng(22)
        k = CameraIntrinsics(fx=48.0, fy=48.0, cx=32.0, cy=32.0,
                             width=64, height=64)
        for _ in range(6):
            mesh = random_front_mesh(rng, n_triangles=rng.integers(3, 9))
            depth = render_depth(mesh, IDENTITY, k, settings(backend))
            oracle_depth, edge_dist = raycast_oracle(mesh, IDENTITY, k)
            compare = edge_dist > 0.5
            assert np.array_equal(np.isfinite(depth)[compare],
                                  np.isfinite(oracle_depth)[compare])
            hit = compare & np.isfinite(oracle_depth)
            rel = np.abs(depth[hit] - oracle_depth[hit]) / oracle_depth[hit]
            assert rel.max() < 1e-5


class TestClipping:
    @pytest.mark.parametrize("backend", BACKENDS)
    def test_triangle_straddling_near_plane(self, backend):
        verts = np.array([[0.0, 0.0, -2.0], [3.0, 0.5, 6.0], [-2.5, 1.0, 6.0]])
        mesh = Mesh(verts, np.array([[0, 1, 2]]),
                    colors=np.full((3, 3), 77, np.uint8))
        k = CameraIntrinsics(fx=40.0, fy=40.0, cx=32.0, cy=32.0,
                             width=64, height=64)
        depth = render_depth(mesh, IDENTITY, k, settings(backend))
        covered = np.isfinite(depth)
        assert covered.any()
        assert depth[covered].min() >= 1.0 - 1e-9

        oracle_depth, edge_dist = raycast_oracle(mesh, IDENTITY, k, near=1.0)
        compare = edge_dist > 0.5
        assert np.array_equal(covered[compare], np.isfinite(oracle_depth)[compare])

    @pytest.mark.parametrize("backend", BACKENDS)
    def test_fully_behind_camera_renders_nothing(self, backend):
        verts = np.array([[0.0, 0.0, -5.0], [1.0, 0.0, -5.0], [0.0, 1.0, -5.0]])
        mesh = Mesh(verts, np.array([[0, 1, 2]]),
                    colors=np.zeros((3, 3), np.uint8))
        mask = render_mask(mesh, IDENTITY, SCREEN_K, settings(backend))
        assert not mask.any()

    @pytest.mark.parametrize("backend", BACKENDS)
    def test_clip_produces_at_most_two_triangles_worth_of_coverage(self, backend):
        # one vertex behind the near plane yields a quad: coverage must be
        # contiguous along each row (single convex piece)
        verts = np.array([[0.0, -0.4, 0.2], [4.0, 0.3, 8.0], [-4.0, 0.6, 8.0]])
        mesh = Mesh(verts, np.array([[0, 1, 2]]),
                    colors=np.full((3, 3), 9, np.uint8))
        k = CameraIntrinsics(fx=30.0, fy=30.0, cx=32.0, cy=32.0,
                             width=64, height=64)
        mask = render_mask(mesh, IDENTITY, k, settings(backend))
        assert mask.any()
        for row in mask:
            cols = np.flatnonzero(row)
            if len(cols):
                assert cols[-1] - cols[0] + 1 == len(cols)


class TestOrderIndependence:
    @pytest.mark.parametrize("backend", BACKENDS)
    def test_submission_order_never_changes_output(self, backend):
        rng = np.random.default_rng(23)
        mesh = random_front_mesh(rng, n_triangles=10)
        k = CameraIntrinsics(fx=48.0, fy=48.0, cx=32.0, cy=32.0,
                             width=64, height=64)
        base = render(mesh, IDENTITY, k, settings(backend))
        for _ in range(4):
            perm = rng.permutation(mesh.n_triangles)
            shuffled = Mesh(mesh.vertices, mesh.triangles[perm], colors=mesh.colors)
            out = render(shuffled, IDENTITY, k, settings(backend))
            assert np.array_equal(out.color, base.color)
            assert np.array_equal(out.depth, base.depth)

    @pytest.mark.parametrize("backend", BACKENDS)
    def test_coplanar_tie_resolved_by_color(self, backend):
        # two identical triangles with different colors: the output must not
        # depend on which comes first in the index buffer
        tri = [(2.0, 2.0), (14.0, 3.0), (7.0, 13.0)]
        verts = np.array([[x, y, 1.0] for (x, y) in tri] * 2)
        colors = np.vstack([np.full((3, 3), 200, np.uint8),
                            np.full((3, 3), 40, np.uint8)])
        a = Mesh(verts, np.array([[0, 1, 2], [3, 4, 5]]), colors=colors)
        b = Mesh(verts, np.array([[3, 4, 5], [0, 1, 2]]), colors=colors)
        out_a = render(a, IDENTITY, SCREEN_K, settings(backend))
        out_b = render(b, IDENTITY, SCREEN_K, settings(backend))
        assert np.array_equal(out_a.color, out_b.color)
        assert (out_a.color[out_a.mask] == 40).all()


class TestBackendAgreement:
    def test_masks_identical_on_random_scenes(self):
        rng = np.random.default_rng(24)
        k = CameraIntrinsics(fx=48.0, fy=48.0, cx=32.0, cy=32.0,
                             width=64, height=64)
        for _ in range(8):
            mesh = random_front_mesh(rng, n_triangles=12)
            outs = [render(mesh, IDENTITY, k, settings(b)) for b in BACKENDS]
            assert np.array_equal(outs[0].mask, outs[1].mask)
            both = outs[0].mask
            diff = np.abs(outs[0].color[both].astype(int)
                          - outs[1].color[both].astype(int))
            assert diff.max() <= 1

    def test_phantom_ssim_between_backends(self):
        mesh = make_phantom("hemisphere_cavity", resolution=6, seed=5)
        pose = Pose(np.eye(3), np.array([0.0, 0.0, 40.0]))
        k = CameraIntrinsics(fx=120.0, fy=120.0, cx=64.0, cy=64.0,
                             width=128, height=128)
        imgs = [render(mesh, pose, k, settings(b)).color for b in BACKENDS]
        assert ssim(imgs[0], imgs[1]) >= 0.99


class TestContractBasics:
    def test_output_invariants(self):
        mesh = make_phantom("two_triangles")
        pose = Pose(np.eye(3), np.array([0.0, 0.0, 25.0]))
        k = CameraIntrinsics(fx=60.0, fy=60.0, cx=32.0, cy=32.0,
                             width=64, height=64)
        out = render(mesh, pose, k,
                     RenderSettings(background=(7, 8, 9)))
        assert np.array_equal(out.mask, np.isfinite(out.depth))
        assert (out.color[~out.mask] == [7, 8, 9]).all()
        assert np.array_equal(out.mask, render_mask(mesh, pose, k))
        assert np.array_equal(out.depth, render_depth(mesh, pose, k))

    def test_render_requires_colors(self):
        mesh = Mesh(np.array([[0.0, 0, 1], [1.0, 0, 1], [0.0, 1, 1]]),
                    np.array([[0, 1, 2]]))
        with pytest.raises(ValueError, match="color"):
            render(mesh, IDENTITY, SCREEN_K)
        # depth and mask passes work without colors
        assert render_depth(mesh, IDENTITY, SCREEN_K).shape == (16, 16)

    def test_settings_validation(self):
        with pytest.raises(ValueError, match="backend"):
            RenderSettings(backend="quadtree")
        with pytest.raises(ValueError, match="near_clip"):
            RenderSettings(near_clip=0.0)
        with pytest.raises(ValueError, match="background"):
            RenderSettings(background=(300, 0, 0))
        with pytest.raises(ValueError, match="shading"):
            RenderSettings(shading="phong")

    def test_non_renderable_mesh_rejected(self):
        mesh = Mesh(np.zeros((3, 3)), np.zeros((0, 3), dtype=np.int64))
        with pytest.raises(ValueError, match="renderable"):
            render_depth(mesh, IDENTITY, SCREEN_K)
