"""Software rasterizer: z-buffered, Gouraud-shaded rendering of vertex-colored
triangle meshes, with two interchangeable fill backends.

Why two backends: downstream quality comparisons need an estimate of how much
of an image difference is mere rasterizer implementation variance.  The
``edge_function`` backend tests pixel centers against the three edge functions
inside the triangle's bounding box; the ``scanline`` backend walks rows,
intersecting triangle edges to get per-row spans.  Both implement the same
contract and agree exactly away from triangle edges.

Shared conventions (see :mod:`viewsynth.camera`): pixel (i, j) has its center
at (i + 0.5, j + 0.5); x grows rightward, y downward; camera looks along +z.

Rules pinned down by this module:

* Coverage is decided at pixel centers with the top-left fill rule, so a pixel
  on an edge shared by two triangles is owned by exactly one of them.
* Color is perspective-correct: color/w and 1/w interpolate linearly in screen
  space and are divided per pixel.  Depth is camera-space z recovered from the
  interpolated 1/w, which equals the analytic depth of the triangle's plane.
* Triangles crossing z = near_clip are clipped against that plane (at most two
  output triangles); triangles entirely in front of it are discarded, as are
  degenerate ones (repeated indices or near-zero projected area).
* The visible fragment per pixel is the lexicographic minimum of
  (depth, r, g, b), which makes output independent of triangle submission
  order even for exactly coplanar geometry.
* No lighting, no anti-aliasing: output color is the interpolated vertex
  color, already baked by texturing.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .camera import CameraIntrinsics, Pose
from .mesh import Mesh

__all__ = ["RenderSettings", "RenderOutput", "render", "render_depth", "render_mask",
           "BACKENDS"]

BACKENDS = ("edge_function", "scanline")

# projected triangles with |2*area| below this (px^2) are dropped
_DEGENERATE_AREA2 = 1e-12


@dataclass(frozen=True)
class RenderSettings:
    """Rendering knobs; defaults render on black with the edge-function backend."""

    background: tuple = (0, 0, 0)
    backend: str = "edge_function"
    near_clip: float = 1.0
    shading: str = "gouraud"

    def __post_init__(self):
        if self.backend not in BACKENDS:
            raise ValueError(f"unknown backend '{self.backend}'; expected one of {BACKENDS}")
        if not self.near_clip > 0:
            raise ValueError(f"near_clip must be > 0, got {self.near_clip}")
        if self.shading != "gouraud":
            raise ValueError(f"unsupported shading '{self.shading}'")
        bg = np.asarray(self.background)
        if bg.shape != (3,) or bg.min() < 0 or bg.max() > 255:
            raise ValueError(f"background must be an RGB triple in 0..255, "
                             f"got {self.background}")


@dataclass
class RenderOutput:
    """One rasterization pass: color, per-pixel depth (mm, +inf where empty),
    and the coverage mask (mask == depth being finite)."""

    color: np.ndarray
    depth: np.ndarray
    mask: np.ndarray


# --------------------------------------------------------------------------
# Geometry stage (shared by both backends)
# --------------------------------------------------------------------------

def _clip_near(pts, cols, near):
    """Sutherland-Hodgman clip of one camera-space triangle against z >= near.

    Returns a list of (points (3,3), colors (3,3)) triangles; attributes are
    interpolated linearly in camera space at the clip crossings.
    """
    inside = pts[:, 2] >= near
    n_in = int(inside.sum())
    if n_in == 0:
        return []
    if n_in == 3:
        return [(pts, cols)]
    out_pts, out_cols = [], []
    for i in range(3):
        j = (i + 1) % 3
        pi, pj = pts[i], pts[j]
        ci, cj = cols[i], cols[j]
        if inside[i]:
            out_pts.append(pi)
            out_cols.append(ci)
        if inside[i] != inside[j]:
            t = (near - pi[2]) / (pj[2] - pi[2])
            out_pts.append(pi + t * (pj - pi))
            out_cols.append(ci + t * (cj - ci))
    tris = []
    for k in range(1, len(out_pts) - 1):  # fan: 3 points -> 1 tri, 4 -> 2
        tris.append((np.array([out_pts[0], out_pts[k], out_pts[k + 1]]),
                     np.array([out_cols[0], out_cols[k], out_cols[k + 1]])))
    return tris


def _project_tri(pts, intrinsics):
    """Project camera-space triangle points to screen; returns (xy (3,2), invw (3,))."""
    z = pts[:, 2]
    invw = 1.0 / z
    x = (intrinsics.fx * pts[:, 0] + intrinsics.cx * z) * invw
    y = (intrinsics.fy * pts[:, 1] + intrinsics.cy * z) * invw
    return np.column_stack([x, y]), invw


def _prepare_triangles(mesh, pose, intrinsics, colors, near):
    """Transform, clip, project, cull, and orient all triangles.

    Yields (xy (3,2), invw (3,), colw (3,3)) per surviving screen triangle,
    where colw rows are vertex color * invw (premultiplied for
    perspective-correct interpolation).  Vertex order is normalized so the
    doubled signed area cross(v1-v0, v2-v0) is positive.
    """
    cam = mesh.vertices @ pose.rotation.T + pose.translation
    tris = mesh.triangles
    degenerate = (tris[:, 0] == tris[:, 1]) | (tris[:, 1] == tris[:, 2]) \
        | (tris[:, 0] == tris[:, 2])
    out = []
    for ti in np.flatnonzero(~degenerate):
        idx = tris[ti]
        pts = cam[idx]
        cols = colors[idx]
        if pts[:, 2].min() >= near:
            pieces = [(pts, cols)]
        else:
            pieces = _clip_near(pts, cols, near)
        for ppts, pcols in pieces:
            xy, invw = _project_tri(ppts, intrinsics)
            d1 = xy[1] - xy[0]
            d2 = xy[2] - xy[0]
            area2 = d1[0] * d2[1] - d1[1] * d2[0]
            if abs(area2) <= _DEGENERATE_AREA2:
                continue
            if area2 < 0:
                xy = xy[[0, 2, 1]]
                invw = invw[[0, 2, 1]]
                pcols = pcols[[0, 2, 1]]
                area2 = -area2
            out.append((xy, invw, pcols * invw[:, None], area2))
    return out


# --------------------------------------------------------------------------
# Fragment merge
# --------------------------------------------------------------------------

def _merge_fragments(color_buf, depth_buf, rows, cols, z, rgb):
    """Keep the per-pixel lexicographic minimum of (depth, r, g, b).

    Callers guarantee (rows, cols) pairs are unique within one call, so the
    vectorized read-compare-write has no intra-call collisions.
    """
    zb = depth_buf[rows, cols]
    better = z < zb
    ties = z == zb
    if ties.any():
        cb = color_buf[rows, cols]
        c_less = (rgb[:, 0] < cb[:, 0]) | (
            (rgb[:, 0] == cb[:, 0]) & (
                (rgb[:, 1] < cb[:, 1]) | (
                    (rgb[:, 1] == cb[:, 1]) & (rgb[:, 2] < cb[:, 2]))))
        better |= ties & c_less
    if better.any():
        depth_buf[rows[better], cols[better]] = z[better]
        color_buf[rows[better], cols[better]] = rgb[better]


def _quantize(rgbf):
    return np.clip(np.rint(rgbf), 0, 255).astype(np.uint8)


# --------------------------------------------------------------------------
# Backend: edge functions
# --------------------------------------------------------------------------

def _edge_top_left(a, b):
    # top edge: exactly horizontal, pointing right; left edge: pointing up
    # (y decreasing), assuming area-positive vertex order in y-down coords
    return (a[1] == b[1] and b[0] > a[0]) or (b[1] < a[1])


def _canonical(a, b):
    """Order two screen points lexicographically so both triangles sharing an
    edge evaluate it with bit-identical arithmetic (exact negation keeps the
    sides complementary; anything else can leave crack pixels owned by
    neither triangle)."""
    if (a[0], a[1]) <= (b[0], b[1]):
        return a, b, 1.0
    return b, a, -1.0


def _fill_edge_function(color_buf, depth_buf, xy, invw, colw, area2, width, height):
    lo = np.ceil(xy.min(axis=0) - 0.5)
    hi = np.floor(xy.max(axis=0) - 0.5)
    i0 = max(int(lo[0]), 0)
    i1 = min(int(hi[0]), width - 1)
    j0 = max(int(lo[1]), 0)
    j1 = min(int(hi[1]), height - 1)
    if i0 > i1 or j0 > j1:
        return
    px = np.arange(i0, i1 + 1) + 0.5
    py = np.arange(j0, j1 + 1) + 0.5
    pxg, pyg = np.meshgrid(px, py)

    inside = None
    edges = []
    for (a, b) in ((1, 2), (2, 0), (0, 1)):  # edge k is opposite vertex k
        p, q, sign = _canonical(xy[a], xy[b])
        e = sign * ((q[0] - p[0]) * (pyg - p[1]) - (q[1] - p[1]) * (pxg - p[0]))
        accept = (e > 0) | ((e == 0) & _edge_top_left(xy[a], xy[b]))
        inside = accept if inside is None else (inside & accept)
        edges.append(e)
    if not inside.any():
        return

    lam0 = edges[0][inside] / area2
    lam1 = edges[1][inside] / area2
    lam2 = edges[2][inside] / area2
    invw_p = lam0 * invw[0] + lam1 * invw[1] + lam2 * invw[2]
    z = 1.0 / invw_p
    rgbf = (lam0[:, None] * colw[0] + lam1[:, None] * colw[1]
            + lam2[:, None] * colw[2]) / invw_p[:, None]

    jj, ii = np.nonzero(inside)
    _merge_fragments(color_buf, depth_buf, jj + j0, ii + i0, z, _quantize(rgbf))


# --------------------------------------------------------------------------
# Backend: scanline
# --------------------------------------------------------------------------

def _fill_scanline(color_buf, depth_buf, xy, invw, colw, area2, width, height):
    ys = xy[:, 1]
    j0 = max(int(np.ceil(ys.min() - 0.5)), 0)
    j1 = min(int(np.ceil(ys.max() - 0.5)) - 1, height - 1)
    if j0 > j1:
        return
    yc = np.arange(j0, j1 + 1) + 0.5
    nrows = len(yc)

    # per-vertex attributes to interpolate: (1/w, r/w, g/w, b/w)
    attrs = np.column_stack([invw, colw])

    # each edge covers scanlines with y in [min(py, qy), max(py, qy));
    # crossings use the canonical endpoint order so adjacent triangles get
    # bit-identical span boundaries on shared edges (no cracks/overlaps)
    cross_x = np.empty((3, nrows))
    cross_a = np.empty((3, nrows, 4))
    valid = np.zeros((3, nrows), dtype=bool)
    for k in range(3):
        a, b = k, (k + 1) % 3
        _, _, sign = _canonical(xy[a], xy[b])
        if sign > 0:
            p, q, ap, aq = xy[a], xy[b], attrs[a], attrs[b]
        else:
            p, q, ap, aq = xy[b], xy[a], attrs[b], attrs[a]
        ylo, yhi = (p[1], q[1]) if p[1] <= q[1] else (q[1], p[1])
        v = (yc >= ylo) & (yc < yhi)
        valid[k] = v
        dy = q[1] - p[1]
        t = np.where(v, (yc - p[1]) / (dy if dy != 0 else 1.0), 0.0)
        cross_x[k] = p[0] + t * (q[0] - p[0])
        cross_a[k] = ap + t[:, None] * (aq - ap)

    enough = valid.sum(axis=0) >= 2
    if not enough.any():
        return
    xl_pick = np.where(valid, cross_x, np.inf).argmin(axis=0)
    xr_pick = np.where(valid, cross_x, -np.inf).argmax(axis=0)
    ridx = np.arange(nrows)
    x_l = cross_x[xl_pick, ridx]
    x_r = cross_x[xr_pick, ridx]
    a_l = cross_a[xl_pick, ridx]
    a_r = cross_a[xr_pick, ridx]

    i0 = np.maximum(np.ceil(x_l - 0.5).astype(np.int64), 0)
    i1 = np.minimum(np.ceil(x_r - 0.5).astype(np.int64) - 1, width - 1)
    counts = np.where(enough, i1 - i0 + 1, 0)
    keep = counts > 0
    if not keep.any():
        return
    i0, x_l, x_r = i0[keep], x_l[keep], x_r[keep]
    a_l, a_r = a_l[keep], a_r[keep]
    counts = counts[keep]
    row_j = (np.arange(j0, j1 + 1))[keep]

    total = int(counts.sum())
    offsets = np.repeat(np.cumsum(counts) - counts, counts)
    cols = np.repeat(i0, counts) + (np.arange(total) - offsets)
    rows = np.repeat(row_j, counts)
    span = x_r - x_l
    s = (cols + 0.5 - np.repeat(x_l, counts)) / np.repeat(span, counts)
    attr = np.repeat(a_l, counts, axis=0) + s[:, None] * np.repeat(a_r - a_l, counts, axis=0)

    invw_p = attr[:, 0]
    z = 1.0 / invw_p
    rgbf = attr[:, 1:4] / invw_p[:, None]
    _merge_fragments(color_buf, depth_buf, rows, cols, z, _quantize(rgbf))


_FILLERS = {"edge_function": _fill_edge_function, "scanline": _fill_scanline}


# --------------------------------------------------------------------------
# Public entry points
# --------------------------------------------------------------------------

def _render_buffers(mesh, pose, intrinsics, settings, colors):
    if not mesh.is_renderable():
        raise ValueError(f"mesh is not renderable: {mesh!r} "
                         "(need >= 3 vertices and >= 1 triangle)")
    w, h = intrinsics.width, intrinsics.height
    bg = np.asarray(settings.background, dtype=np.uint8)
    color_buf = np.empty((h, w, 3), dtype=np.uint8)
    color_buf[:] = bg
    depth_buf = np.full((h, w), np.inf)
    fill = _FILLERS[settings.backend]
    for xy, invw, colw, area2 in _prepare_triangles(
            mesh, pose, intrinsics, colors, settings.near_clip):
        fill(color_buf, depth_buf, xy, invw, colw, area2, w, h)
    return color_buf, depth_buf


def render(mesh: Mesh, pose: Pose, intrinsics: CameraIntrinsics,
           settings: RenderSettings = RenderSettings()) -> RenderOutput:
    """Render a vertex-colored mesh to color + depth + coverage buffers.

    Each covered pixel shows the nearest triangle at its center with
    perspective-correct interpolated vertex color; everything else is the
    background color with depth +inf.
    """
    if not mesh.has_colors:
        raise ValueError("render requires a mesh with vertex colors; "
                         "use render_depth/render_mask for geometry-only passes")
    colors = mesh.colors.astype(np.float64)
    color_buf, depth_buf = _render_buffers(mesh, pose, intrinsics, settings, colors)
    return RenderOutput(color=color_buf, depth=depth_buf,
                        mask=np.isfinite(depth_buf))


def render_depth(mesh: Mesh, pose: Pose, intrinsics: CameraIntrinsics,
                 settings: RenderSettings = RenderSettings()) -> np.ndarray:
    """Depth raster of :func:`render` without needing vertex colors."""
    colors = np.zeros((mesh.n_vertices, 3))
    _, depth_buf = _render_buffers(mesh, pose, intrinsics, settings, colors)
    return depth_buf


def render_mask(mesh: Mesh, pose: Pose, intrinsics: CameraIntrinsics,
                settings: RenderSettings = RenderSettings()) -> np.ndarray:
    """Boolean coverage raster: True wherever any triangle covers the pixel."""
    return np.isfinite(render_depth(mesh, pose, intrinsics, settings))
