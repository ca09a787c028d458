"""Vertex-color texturing: project each mesh vertex into a registered camera
frame and sample the image color it lands on.

The naive per-vertex back-projection would also paint self-occluded geometry
(e.g. the far wall of a cavity) with foreground colors.  To prevent that,
:func:`texture_mesh` first renders a depth pre-pass of the whole mesh at the
registration pose and only accepts a vertex's sampled color when the vertex is
no deeper than the pre-pass depth at its pixel, within ``depth_epsilon``.

Vertices are classified into exactly one of four buckets, tested in order:

1. ``behind_camera``: camera-space z <= 0;
2. ``out_of_frame``: the bilinear 4-neighborhood of the projected point
   exits the image (includes the outer half-pixel border);
3. ``occluded``: deeper than the depth pre-pass allows;
4. ``visible``: color sampled bilinearly and rounded to 8 bits.

Non-visible vertices receive ``fallback_color``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .camera import CameraIntrinsics, Pose, project_vertices
from .mesh import Mesh
from .rasterize import RenderSettings, render_depth

__all__ = ["FrameImage", "TexturingReport", "bilinear_sample", "texture_mesh"]


@dataclass(frozen=True)
class FrameImage:
    """One 8-bit RGB camera frame; ``pixels`` is row-major (height, width, 3)."""

    pixels: np.ndarray

    def __post_init__(self):
        px = self.pixels
        if not (isinstance(px, np.ndarray) and px.ndim == 3 and px.shape[2] == 3
                and px.dtype == np.uint8):
            raise ValueError("FrameImage.pixels must be a (height, width, 3) uint8 array")
        px.setflags(write=False)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @classmethod
    def from_array(cls, array) -> "FrameImage":
        arr = np.asarray(array)
        if arr.dtype != np.uint8:
            if arr.min() < 0 or arr.max() > 255:
                raise ValueError("frame values must lie in 0..255")
            arr = np.round(arr).astype(np.uint8)
        return cls(arr.copy())


@dataclass(frozen=True)
class TexturingReport:
    """How many vertices fell into each visibility bucket (sums to N_v)."""

    visible_count: int
    occluded_count: int
    out_of_frame_count: int
    behind_camera_count: int

    @property
    def total(self) -> int:
        return (self.visible_count + self.occluded_count
                + self.out_of_frame_count + self.behind_camera_count)

    def to_dict(self) -> dict:
        return {
            "visible_count": self.visible_count,
            "occluded_count": self.occluded_count,
            "out_of_frame_count": self.out_of_frame_count,
            "behind_camera_count": self.behind_camera_count,
        }


def _as_pixels(image) -> np.ndarray:
    if isinstance(image, FrameImage):
        return image.pixels
    arr = np.asarray(image)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ValueError(f"expected (height, width, 3) image, got shape {arr.shape}")
    return arr


def bilinear_sample(image, x, y):
    """Bilinearly interpolate ``image`` at continuous coordinates (x, y).

    Uses the half-integer-center convention: pixel (i, j) holds the value at
    (i + 0.5, j + 0.5).  A point is inside only while its 4-neighborhood stays
    in the image, i.e. x in [0.5, width - 0.5] and likewise for y; at the
    boundary of that box the interpolation degenerates to the edge pixels.

    Scalars in, ``(values (3,), inside bool)`` out; arrays in,
    ``(values (n, 3) float, inside (n,) bool)`` out.  Outside samples are NaN.
    """
    pixels = _as_pixels(image)
    h, w = pixels.shape[:2]
    scalar = np.isscalar(x) and np.isscalar(y)
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    y = np.atleast_1d(np.asarray(y, dtype=np.float64))
    if x.shape != y.shape:
        raise ValueError(f"x and y must have identical shapes, got {x.shape} vs {y.shape}")

    u = x - 0.5
    v = y - 0.5
    inside = (u >= 0.0) & (u <= w - 1) & (v >= 0.0) & (v <= h - 1)

    # clamp so that indexing stays legal even exactly at the far edge
    i0 = np.clip(np.floor(u), 0, max(w - 2, 0)).astype(np.int64)
    j0 = np.clip(np.floor(v), 0, max(h - 2, 0)).astype(np.int64)
    i1 = np.minimum(i0 + 1, w - 1)
    j1 = np.minimum(j0 + 1, h - 1)
    fu = np.where(inside, u - i0, 0.0)
    fv = np.where(inside, v - j0, 0.0)

    p = pixels.astype(np.float64)
    top = p[j0, i0] * (1.0 - fu)[:, None] + p[j0, i1] * fu[:, None]
    bot = p[j1, i0] * (1.0 - fu)[:, None] + p[j1, i1] * fu[:, None]
    values = top * (1.0 - fv)[:, None] + bot * fv[:, None]
    values[~inside] = np.nan

    if scalar:
        return values[0], bool(inside[0])
    return values, inside


def texture_mesh(mesh: Mesh, frame, registration_pose: Pose,
                 intrinsics: CameraIntrinsics,
                 fallback_color=(96, 96, 96), depth_epsilon: float = 0.5,
                 near_clip: float = 1.0):
    """Color every vertex of ``mesh`` from ``frame`` as seen at the
    registration pose.

    Returns ``(colored_mesh, visible, report)`` where ``visible`` is a boolean
    array over vertices.  Only vertices that project in front of the camera,
    land with a full bilinear neighborhood inside the frame, and pass the
    depth pre-pass occlusion test (vertex depth <= buffer + depth_epsilon,
    buffer probed at the pixel containing the projection) are painted from the
    image; everything else gets ``fallback_color``.
    """
    pixels = _as_pixels(frame)
    h, w = pixels.shape[:2]
    if (w, h) != (intrinsics.width, intrinsics.height):
        raise ValueError(
            f"frame is {w}x{h} but intrinsics expect "
            f"{intrinsics.width}x{intrinsics.height}")
    fallback = np.asarray(fallback_color, dtype=np.float64)
    if fallback.shape != (3,) or fallback.min() < 0 or fallback.max() > 255:
        raise ValueError(f"fallback_color must be an RGB triple in 0..255, "
                         f"got {fallback_color}")
    if depth_epsilon < 0:
        raise ValueError(f"depth_epsilon must be >= 0, got {depth_epsilon}")

    proj = project_vertices(mesh.vertices, registration_pose, intrinsics)
    behind = ~proj.valid

    samples, inside = bilinear_sample(pixels, np.where(behind, 0.0, proj.x),
                                      np.where(behind, 0.0, proj.y))
    out_of_frame = ~behind & ~inside

    depth_buf = render_depth(mesh, registration_pose, intrinsics,
                             RenderSettings(near_clip=near_clip))
    candidates = ~behind & inside
    occluded = np.zeros(mesh.n_vertices, dtype=bool)
    if candidates.any():
        ci = np.flatnonzero(candidates)
        px = np.floor(proj.x[ci]).astype(np.int64)
        py = np.floor(proj.y[ci]).astype(np.int64)
        px = np.clip(px, 0, w - 1)
        py = np.clip(py, 0, h - 1)
        # an uncovered buffer pixel (+inf) never occludes
        occluded[ci] = proj.depth[ci] > depth_buf[py, px] + depth_epsilon

    visible = candidates & ~occluded

    colors = np.empty((mesh.n_vertices, 3), dtype=np.uint8)
    colors[:] = np.round(fallback).astype(np.uint8)
    if visible.any():
        colors[visible] = np.clip(np.rint(samples[visible]), 0, 255).astype(np.uint8)

    report = TexturingReport(
        visible_count=int(visible.sum()),
        occluded_count=int(occluded.sum()),
        out_of_frame_count=int(out_of_frame.sum()),
        behind_camera_count=int(behind.sum()),
    )
    return mesh.with_colors(colors), visible, report
