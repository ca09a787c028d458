"""Pinhole camera model: intrinsics, rigid poses, projection, pose sampling.

Conventions used everywhere in this package:

* Camera space is right-handed with +z pointing forward (in front of the
  camera has z > 0), x rightward, y downward.
* A pose (R, t) maps world points to camera space: ``p_cam = R @ p + t``.
* Image coordinates are continuous pixels with x rightward and y downward;
  the center of pixel (i, j) sits at (i + 0.5, j + 0.5).
* A world point projects to ``x = (fx*px + cx*pz) / pz``,
  ``y = (fy*py + cy*pz) / pz`` with depth ``pz`` (millimeters).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "CameraIntrinsics", "Pose", "ProjectedPoints",
    "project_vertices", "compose", "invert", "sample_poses",
    "load_intrinsics", "save_intrinsics", "load_pose", "save_pose",
]

_ORTHO_TOL = 1e-9


@dataclass(frozen=True)
class CameraIntrinsics:
    """Focal lengths and principal point in pixels, plus image size."""

    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self):
        if not (self.fx > 0 and self.fy > 0):
            raise ValueError(f"focal lengths must be positive, got fx={self.fx}, fy={self.fy}")
        if not (self.width >= 1 and self.height >= 1):
            raise ValueError(f"image size must be at least 1x1, got "
                             f"{self.width}x{self.height}")

    @property
    def matrix(self):
        """3x4 projection matrix ((fx,0,cx,0),(0,fy,cy,0),(0,0,1,0))."""
        return np.array([
            [self.fx, 0.0, self.cx, 0.0],
            [0.0, self.fy, self.cy, 0.0],
            [0.0, 0.0, 1.0, 0.0],
        ])

    def to_dict(self):
        return {"fx": self.fx, "fy": self.fy, "cx": self.cx, "cy": self.cy,
                "width": self.width, "height": self.height}

    @classmethod
    def from_dict(cls, d):
        return cls(fx=float(d["fx"]), fy=float(d["fy"]),
                   cx=float(d["cx"]), cy=float(d["cy"]),
                   width=int(d["width"]), height=int(d["height"]))


class Pose:
    """Rigid transform in SE(3): 3x3 rotation plus translation in millimeters.

    The rotation must be orthonormal (R^T R = I within 1e-9 elementwise) with
    determinant +1 within 1e-9; construction enforces both.
    """

    __slots__ = ("rotation", "translation")

    def __init__(self, rotation, translation):
        rotation = np.ascontiguousarray(rotation, dtype=np.float64)
        translation = np.ascontiguousarray(translation, dtype=np.float64)
        if rotation.shape != (3, 3):
            raise ValueError(f"rotation must be 3x3, got {rotation.shape}")
        if translation.shape != (3,):
            raise ValueError(f"translation must be a 3-vector, got {translation.shape}")
        if not np.isfinite(rotation).all() or not np.isfinite(translation).all():
            raise ValueError("pose contains non-finite values")
        err = np.abs(rotation.T @ rotation - np.eye(3)).max()
        if err > _ORTHO_TOL:
            raise ValueError(f"rotation is not orthonormal (max |R^T R - I| = {err:.3e})")
        det = np.linalg.det(rotation)
        if abs(det - 1.0) > _ORTHO_TOL:
            raise ValueError(f"rotation determinant is {det!r}, expected +1")
        rotation.flags.writeable = False
        translation.flags.writeable = False
        self.rotation = rotation
        self.translation = translation

    @classmethod
    def identity(cls):
        return cls(np.eye(3), np.zeros(3))

    def apply(self, points):
        """Map world points (..., 3) into camera space: R @ p + t."""
        points = np.asarray(points, dtype=np.float64)
        return points @ self.rotation.T + self.translation

    @property
    def matrix(self):
        """4x4 homogeneous extrinsic matrix ((R, t), (0, 1))."""
        m = np.eye(4)
        m[:3, :3] = self.rotation
        m[:3, 3] = self.translation
        return m

    def to_dict(self):
        return {"rotation": self.rotation.tolist(),
                "translation": self.translation.tolist()}

    @classmethod
    def from_dict(cls, d):
        return cls(np.array(d["rotation"], dtype=np.float64),
                   np.array(d["translation"], dtype=np.float64))

    def __repr__(self):
        return f"Pose(rotation={self.rotation.tolist()}, translation={self.translation.tolist()})"


@dataclass(frozen=True)
class ProjectedPoints:
    """Projection results as parallel arrays.

    ``x``/``y`` are continuous pixel coordinates (NaN where invalid), ``depth``
    is camera-space z in millimeters (kept even when non-positive), and
    ``valid`` is False for points on or behind the camera plane (depth <= 0).
    A behind-camera point is data, not an error.
    """

    x: np.ndarray
    y: np.ndarray
    depth: np.ndarray
    valid: np.ndarray

    def __len__(self):
        return len(self.depth)


def project_vertices(vertices, pose: Pose, intrinsics: CameraIntrinsics) -> ProjectedPoints:
    """Project world-space points through a pose and pinhole intrinsics.

    Each point X maps to camera space p = R @ X + t, then to homogeneous image
    coordinates u = fx*p.x + cx*p.z, v = fy*p.y + cy*p.z, w = p.z, and finally
    to pixels (u/w, v/w) with depth w.  Points with w <= 0 keep their depth but
    get NaN pixels and valid=False.
    """
    pts = np.asarray(vertices, dtype=np.float64).reshape(-1, 3)
    cam = pts @ pose.rotation.T + pose.translation
    w = cam[:, 2].copy()
    valid = w > 0
    u = intrinsics.fx * cam[:, 0] + intrinsics.cx * w
    v = intrinsics.fy * cam[:, 1] + intrinsics.cy * w
    x = np.full(len(pts), np.nan)
    y = np.full(len(pts), np.nan)
    np.divide(u, w, out=x, where=valid)
    np.divide(v, w, out=y, where=valid)
    return ProjectedPoints(x=x, y=y, depth=w, valid=valid)


def compose(a: Pose, b: Pose) -> Pose:
    """Pose applying ``b`` first, then ``a``: compose(a, b).apply(p) == a(b(p))."""
    return Pose(a.rotation @ b.rotation,
                a.rotation @ b.translation + a.translation)


def invert(p: Pose) -> Pose:
    """Inverse rigid transform: (R^T, -R^T t)."""
    rt = p.rotation.T
    return Pose(rt, -rt @ p.translation)


def _rotation_about_axis(axis, angle):
    """Rodrigues rotation about a unit axis."""
    x, y, z = axis
    c, s = math.cos(angle), math.sin(angle)
    k = np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])
    return np.eye(3) + s * k + (1.0 - c) * (k @ k)


def sample_poses(reference: Pose, count, max_rotation, max_translation, seed):
    """Sample random poses around a reference view.

    Each sample is ``compose(perturbation, reference)`` where the perturbation
    rotates by an angle drawn uniformly from [0, max_rotation] degrees about a
    uniformly random unit axis and translates by a vector drawn uniformly from
    the cube [-max_translation, max_translation]^3 millimeters.  The
    perturbation acts in the reference camera frame, so views stay anchored
    near the original one.

    Draws come from numpy's PCG64 generator seeded with ``seed``; the output
    list is deterministic for a given seed regardless of platform or thread
    count.
    """
    count = int(count)
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    if not 0.0 <= max_rotation <= 180.0:
        raise ValueError(f"max_rotation must be in [0, 180] degrees, got {max_rotation}")
    if max_translation < 0.0:
        raise ValueError(f"max_translation must be >= 0, got {max_translation}")
    rng = np.random.Generator(np.random.PCG64(seed))
    max_rad = math.radians(max_rotation)
    poses = []
    for _ in range(count):
        axis = rng.normal(size=3)
        norm = np.linalg.norm(axis)
        while norm < 1e-12:  # essentially unreachable, kept for determinism
            axis = rng.normal(size=3)
            norm = np.linalg.norm(axis)
        angle = rng.uniform(0.0, max_rad)
        shift = rng.uniform(-max_translation, max_translation, size=3)
        perturbation = Pose(_rotation_about_axis(axis / norm, angle), shift)
        poses.append(compose(perturbation, reference))
    return poses


# --------------------------------------------------------------------------
# JSON files
# --------------------------------------------------------------------------

def load_intrinsics(path) -> CameraIntrinsics:
    with open(path, "r", encoding="utf-8") as f:
        return CameraIntrinsics.from_dict(json.load(f))


def save_intrinsics(intrinsics: CameraIntrinsics, path):
    with open(path, "w", encoding="utf-8") as f:
        json.dump(intrinsics.to_dict(), f, indent=2)
        f.write("\n")


def load_pose(path) -> Pose:
    with open(path, "r", encoding="utf-8") as f:
        return Pose.from_dict(json.load(f))


def save_pose(pose: Pose, path):
    with open(path, "w", encoding="utf-8") as f:
        json.dump(pose.to_dict(), f, indent=2)
        f.write("\n")
