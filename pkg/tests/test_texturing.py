"""Bilinear sampling and per-vertex texturing with occlusion handling."""

import numpy as np
import pytest

from viewsynth import (CameraIntrinsics, FrameImage, Mesh, Pose, bilinear_sample,
                       make_phantom, render, texture_mesh)

from oracles import bilinear_oracle, vertex_occlusion_oracle

IDENTITY = Pose(np.eye(3), np.zeros(3))


def random_image(rng, w=20, h=14):
    return rng.integers(0, 256, size=(h, w, 3), dtype=np.uint8)


class TestBilinearSample:
    def test_exact_at_pixel_centers(self):
        rng = np.random.default_rng(0)
        img = random_image(rng)
        for i, j in [(0, 0), (5, 3), (19, 13), (10, 0)]:
            value, inside = bilinear_sample(img, i + 0.5, j + 0.5)
            assert inside
            assert np.array_equal(value, img[j, i].astype(float))

    def test_midpoint_average(self):
        img = np.zeros((1, 2, 3), dtype=np.uint8)
        img[0, 1] = 100
        value, inside = bilinear_sample(img, 1.0, 0.5)
        assert inside
        assert np.allclose(value, [50.0, 50.0, 50.0])

    def test_matches_textbook_oracle(self):
        rng = np.random.default_rng(1)
        img = random_image(rng, w=31, h=23)
        xs = rng.uniform(0.5, 30.5, size=1000)
        ys = rng.uniform(0.5, 22.5, size=1000)
        values, inside = bilinear_sample(img, xs, ys)
        assert inside.all()
        expected = np.array([bilinear_oracle(img, x, y) for x, y in zip(xs, ys)])
        np.testing.assert_allclose(values, expected, atol=1e-9)

    def test_out_of_bounds_marker(self):
        img = random_image(np.random.default_rng(2))
        for x, y in [(-10.0, 5.0), (0.49, 5.0), (19.51, 5.0), (5.0, 13.9),
                     (5.0, 0.0)]:
            value, inside = bilinear_sample(img, x, y)
            assert not inside
            assert np.isnan(value).all()

    def test_boundary_of_valid_box_is_inside(self):
        img = random_image(np.random.default_rng(3))
        h, w = img.shape[:2]
        for x, y in [(0.5, 0.5), (w - 0.5, h - 0.5), (0.5, h - 0.5)]:
            value, inside = bilinear_sample(img, x, y)
            assert inside
            assert not np.isnan(value).any()

    def test_vectorized_matches_scalar(self):
        rng = np.random.default_rng(4)
        img = random_image(rng)
        xs = rng.uniform(-2.0, 22.0, size=50)
        ys = rng.uniform(-2.0, 16.0, size=50)
        values, inside = bilinear_sample(img, xs, ys)
        for k in range(50):
            v, i = bilinear_sample(img, xs[k], ys[k])
            assert i == inside[k]
            if i:
                assert np.array_equal(v, values[k])

    def test_frame_image_wrapper(self):
        rng = np.random.default_rng(5)
        arr = random_image(rng)
        frame = FrameImage(arr.copy())
        assert frame.width == 20 and frame.height == 14
        v1, _ = bilinear_sample(frame, 3.3, 4.4)
        v2, _ = bilinear_sample(arr, 3.3, 4.4)
        assert np.array_equal(v1, v2)
        with pytest.raises(ValueError, match="uint8"):
            FrameImage(arr.astype(np.float32))
        assert FrameImage.from_array(arr.astype(np.float64)).pixels.dtype == np.uint8


def full_view_triangle():
    """One front-facing triangle whose vertices project inside the 32x32
    frame, at pixels (3,3), (29,3), (3,29)."""
    verts = np.array([[-13.0, -13.0, 40.0], [13.0, -13.0, 40.0],
                      [-13.0, 13.0, 40.0]])
    k = CameraIntrinsics(fx=40.0, fy=40.0, cx=16.0, cy=16.0, width=32, height=32)
    return Mesh(verts, np.array([[0, 1, 2]])), k


class TestTextureMesh:
    def test_constant_frame_paints_all_visible(self):
        mesh, k = full_view_triangle()
        frame = np.full((32, 32, 3), 128, dtype=np.uint8)
        textured, visible, report = texture_mesh(mesh, frame, IDENTITY, k)
        assert visible.all()
        assert report.visible_count == 3 and report.total == 3
        assert (textured.colors == 128).all()

    def test_occlusion_matches_ray_oracle(self):
        mesh = make_phantom("two_triangles", scale=30.0)
        pose = Pose(np.eye(3), np.array([0.0, 0.0, 40.0]))
        k = CameraIntrinsics(fx=60.0, fy=60.0, cx=32.0, cy=32.0,
                             width=64, height=64)
        frame = np.full((64, 64, 3), 200, dtype=np.uint8)
        _, visible, report = texture_mesh(mesh, frame, pose, k)
        occluded_oracle = vertex_occlusion_oracle(mesh, pose)
        assert report.occluded_count == occluded_oracle.sum() == 3
        assert not visible[occluded_oracle].any()
        assert visible[~occluded_oracle].all()

    def test_occluded_vertices_get_fallback(self):
        mesh = make_phantom("two_triangles", scale=30.0)
        pose = Pose(np.eye(3), np.array([0.0, 0.0, 40.0]))
        k = CameraIntrinsics(fx=60.0, fy=60.0, cx=32.0, cy=32.0,
                             width=64, height=64)
        frame = np.full((64, 64, 3), 200, dtype=np.uint8)
        textured, visible, _ = texture_mesh(mesh, frame, pose, k,
                                            fallback_color=(1, 2, 3))
        assert (textured.colors[~visible] == [1, 2, 3]).all()
        assert (textured.colors[visible] == 200).all()

    def test_out_of_frame_vertex_counted(self):
        mesh, k = full_view_triangle()
        verts = mesh.vertices.copy()
        verts[2, 0] = -400.0  # projects far left of the frame
        pushed = Mesh(verts, mesh.triangles)
        frame = np.full((32, 32, 3), 90, dtype=np.uint8)
        _, visible, report = texture_mesh(pushed, frame, IDENTITY, k)
        assert report.out_of_frame_count == 1
        assert not visible[2]

    def test_behind_camera_vertex_counted(self):
        mesh, k = full_view_triangle()
        verts = mesh.vertices.copy()
        verts[1, 2] = -5.0
        flipped = Mesh(verts, mesh.triangles)
        frame = np.full((32, 32, 3), 90, dtype=np.uint8)
        _, visible, report = texture_mesh(flipped, frame, IDENTITY, k)
        assert report.behind_camera_count == 1
        assert not visible[1]
        assert report.total == 3

    def test_dimension_mismatch_rejected(self):
        mesh, k = full_view_triangle()
        frame = np.full((16, 32, 3), 90, dtype=np.uint8)
        with pytest.raises(ValueError, match="intrinsics"):
            texture_mesh(mesh, frame, IDENTITY, k)

    def test_epsilon_monotonicity(self):
        mesh = make_phantom("hemisphere_cavity", resolution=4, seed=1)
        pose = Pose(np.eye(3), np.array([0.5, -0.3, 38.0]))
        k = CameraIntrinsics(fx=150.0, fy=150.0, cx=64.0, cy=64.0,
                             width=128, height=128)
        frame = np.full((128, 128, 3), 50, dtype=np.uint8)
        _, vis_small, _ = texture_mesh(mesh, frame, pose, k, depth_epsilon=0.01)
        _, vis_large, _ = texture_mesh(mesh, frame, pose, k, depth_epsilon=5.0)
        assert not (vis_small & ~vis_large).any()

    def test_vertex_order_independence(self):
        rng = np.random.default_rng(6)
        mesh = make_phantom("hemisphere_cavity", resolution=3, seed=2)
        pose = Pose(np.eye(3), np.array([0.0, 0.0, 36.0]))
        k = CameraIntrinsics(fx=100.0, fy=100.0, cx=48.0, cy=48.0,
                             width=96, height=96)
        gt = render(mesh, pose, k)
        blank = Mesh(mesh.vertices, mesh.triangles)
        textured, visible, _ = texture_mesh(blank, gt.color, pose, k)

        perm = rng.permutation(mesh.n_vertices)
        inverse = np.empty_like(perm)
        inverse[perm] = np.arange(len(perm))
        permuted = Mesh(mesh.vertices[perm], inverse[mesh.triangles])
        textured_p, visible_p, _ = texture_mesh(permuted, gt.color, pose, k)
        assert np.array_equal(visible_p, visible[perm])
        assert np.array_equal(textured_p.colors, textured.colors[perm])

    def test_round_trip_recovers_colors(self):
        gt = make_phantom("hemisphere_cavity", resolution=6, seed=3)
        pose = Pose(np.eye(3), np.array([0.0, 0.0, 36.0]))
        k = CameraIntrinsics(fx=160.0, fy=160.0, cx=96.0, cy=72.0,
                             width=192, height=144)
        ref = render(gt, pose, k)
        blank = Mesh(gt.vertices, gt.triangles)
        textured, visible, report = texture_mesh(blank, ref.color, pose, k)
        assert report.visible_count > 100
        diff = np.abs(textured.colors[visible].astype(int)
                      - gt.colors[visible].astype(int))
        assert diff.max() <= 2

    def test_uncovered_depth_pixel_means_visible(self):
        # vertex projects into a pixel the depth pre-pass leaves empty
        # (its triangles are thinner than a pixel): treated as visible
        verts = np.array([[0.0, 0.0, 10.0], [0.001, 0.0, 10.0],
                          [0.0, 0.001, 10.0]])
        mesh = Mesh(verts, np.array([[0, 1, 2]]))
        k = CameraIntrinsics(fx=10.0, fy=10.0, cx=8.0, cy=8.0,
                             width=16, height=16)
        frame = np.full((16, 16, 3), 33, dtype=np.uint8)
        _, visible, report = texture_mesh(mesh, frame, IDENTITY, k)
        assert visible.all()
        assert report.visible_count == 3
