"""Procedural phantom meshes for tests, demos, and acceptance runs.

Real inputs to this pipeline are patient-specific surfaces that cannot ship
with the code, so phantoms stand in: small, deterministic, watertight-enough
surfaces with a smooth ground-truth color field.

Kinds:

* ``hemisphere_cavity``: a bowl (hemisphere shell) whose opening faces the
  -z side, so a camera looking along +z at it sees a concave cavity with the
  far wall at the pole.  ``resolution`` r gives 2r latitude rings and 4r
  azimuthal segments; exact count formulas are on :func:`make_phantom`.
* ``quad``: two coplanar triangles forming a square in the z=0 plane.
* ``two_triangles``: a large near triangle at z=0 and a 0.4x copy behind it
  at z=scale/3, for occlusion tests.

Geometry depends only on (kind, resolution, scale); ``seed`` drives only the
color field, so the same surface can carry different ground-truth paint jobs.
"""

from __future__ import annotations

import numpy as np

from .mesh import Mesh

__all__ = ["PHANTOM_KINDS", "make_phantom"]

PHANTOM_KINDS = ("hemisphere_cavity", "quad", "two_triangles")


def _quad(scale):
    h = scale / 2.0
    vertices = np.array([[-h, -h, 0.0], [h, -h, 0.0], [h, h, 0.0], [-h, h, 0.0]])
    triangles = np.array([[0, 1, 2], [0, 2, 3]])
    return vertices, triangles


def _two_triangles(scale):
    h = scale / 2.0
    near = np.array([[-h, -h, 0.0], [h, -h, 0.0], [0.0, h, 0.0]])
    far = 0.4 * near + np.array([0.0, 0.0, scale / 3.0])
    vertices = np.vstack([near, far])
    triangles = np.array([[0, 1, 2], [3, 4, 5]])
    return vertices, triangles


def _hemisphere_cavity(resolution, scale):
    rings = 2 * resolution
    segments = 4 * resolution
    r = scale

    verts = [np.array([0.0, 0.0, r])]  # pole
    for k in range(1, rings + 1):
        theta = (np.pi / 2.0) * k / rings
        z = r * np.cos(theta)
        rho = r * np.sin(theta)
        phi = 2.0 * np.pi * np.arange(segments) / segments
        ring = np.column_stack([rho * np.cos(phi), rho * np.sin(phi),
                                np.full(segments, z)])
        verts.append(ring)
    vertices = np.vstack([verts[0][None, :], *verts[1:]])

    def ring_index(k, j):
        return 1 + (k - 1) * segments + (j % segments)

    tris = []
    for j in range(segments):  # cap fan, wound to match the bands (inward)
        tris.append([0, ring_index(1, j + 1), ring_index(1, j)])
    for k in range(1, rings):  # quad bands, two triangles each
        for j in range(segments):
            a = ring_index(k, j)
            b = ring_index(k, j + 1)
            c = ring_index(k + 1, j + 1)
            d = ring_index(k + 1, j)
            tris.append([a, b, c])
            tris.append([a, c, d])
    return vertices, np.array(tris)


def _color_field(vertices, seed):
    """Smooth sinusoidal RGB field over the surface, deterministic per seed.

    Each channel is 127.5 + 100*sin(2*pi*(p.a)/L + phase) with a random unit
    direction a, wavelength L comparable to the bounding-box diagonal, and a
    random phase, so neighboring vertices get similar but not equal colors.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    lo = vertices.min(axis=0)
    hi = vertices.max(axis=0)
    diag = float(np.linalg.norm(hi - lo))
    if diag == 0.0:
        diag = 1.0
    channels = []
    for _ in range(3):
        axis = rng.normal(size=3)
        axis /= np.linalg.norm(axis)
        wavelength = diag * (1.2 + 0.3 * rng.uniform())
        phase = rng.uniform(0.0, 2.0 * np.pi)
        t = vertices @ axis
        channels.append(127.5 + 100.0 * np.sin(2.0 * np.pi * t / wavelength + phase))
    field = np.column_stack(channels)
    return np.clip(np.rint(field), 0, 255).astype(np.uint8)


def make_phantom(kind: str, resolution: int = 10, seed: int = 0,
                 scale: float = 30.0) -> Mesh:
    """Build a colored phantom mesh.

    ``scale`` is the overall size in millimeters (hemisphere radius, quad edge
    length).  Vertex/triangle counts for ``hemisphere_cavity`` at resolution
    r: N_v = 1 + (2r)(4r), N_t = (4r)(2*(2r) - 1).

    The returned mesh carries the ground-truth color field; strip it with
    ``Mesh(m.vertices, m.triangles)`` to get the blank variant.
    """
    if kind not in PHANTOM_KINDS:
        raise ValueError(f"unknown phantom kind '{kind}'; expected one of {PHANTOM_KINDS}")
    if resolution < 1:
        raise ValueError(f"resolution must be >= 1, got {resolution}")
    if not scale > 0:
        raise ValueError(f"scale must be > 0, got {scale}")

    if kind == "quad":
        vertices, triangles = _quad(scale)
    elif kind == "two_triangles":
        vertices, triangles = _two_triangles(scale)
    else:
        vertices, triangles = _hemisphere_cavity(resolution, scale)
    return Mesh(vertices, triangles, colors=_color_field(vertices, seed))
