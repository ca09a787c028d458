"""Image- and distribution-level similarity metrics.

Three metrics, matching the usual evaluation trio for synthesized views:

* :func:`ssim`: structural similarity computed directly on 8-bit images
  (RGB is reduced to BT.601 luma first), 11x11 Gaussian window with sigma 1.5,
  stabilizers C1 = (0.01 * 255)^2 and C2 = (0.03 * 255)^2.  Only windows fully
  inside the image contribute; with a mask, only windows whose *center* pixel
  is in-mask contribute.
* :func:`fid`: Frechet distance between Gaussians fitted to two feature-
  embedding sets (sample mean and covariance, ddof=1).
* :func:`kid`: unbiased squared MMD with the degree-3 polynomial kernel
  k(x, y) = (x.y/d + 1)^3.

Feature extraction is out of scope: embeddings arrive as files (float32
binary with a JSON header line, or CSV) and are wrapped in :class:`FeatureSet`.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.ndimage import correlate1d

__all__ = ["FeatureSet", "MetricReport", "ssim", "fid", "kid", "evaluate_set",
           "load_features", "save_features"]

_WIN = 11
_SIGMA = 1.5
_HALF = _WIN // 2
_C1 = (0.01 * 255.0) ** 2
_C2 = (0.03 * 255.0) ** 2

_LUMA = np.array([0.299, 0.587, 0.114])  # BT.601


@dataclass(frozen=True)
class FeatureSet:
    """A set of same-dimensional real feature vectors, shape (count, dim)."""

    vectors: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vectors, dtype=np.float64)
        if v.ndim != 2:
            raise ValueError(f"feature vectors must form a 2-D (count, dim) array, "
                             f"got ndim={v.ndim}")
        if v.shape[0] < 1 or v.shape[1] < 1:
            raise ValueError(f"feature set must be non-empty, got shape {v.shape}")
        if not np.isfinite(v).all():
            raise ValueError("feature vectors contain non-finite entries")
        v.setflags(write=False)
        object.__setattr__(self, "vectors", v)

    @property
    def count(self) -> int:
        return self.vectors.shape[0]

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]


@dataclass(frozen=True)
class MetricReport:
    """Bundle of metric values for one real-vs-synthetic comparison.

    ``fid``/``kid`` are None when no feature sets were supplied.
    """

    ssim_mean: float
    per_pair_ssim: tuple
    fid: Optional[float] = None
    kid: Optional[float] = None

    def to_dict(self) -> dict:
        return {
            "ssim_mean": self.ssim_mean,
            "per_pair_ssim": list(self.per_pair_ssim),
            "fid": self.fid,
            "kid": self.kid,
        }


# --------------------------------------------------------------------------
# SSIM
# --------------------------------------------------------------------------

def _gaussian_kernel():
    k = np.arange(_WIN) - _HALF
    g = np.exp(-(k ** 2) / (2.0 * _SIGMA ** 2))
    return g / g.sum()


_KERNEL_1D = _gaussian_kernel()


def _to_luma(img) -> np.ndarray:
    arr = np.asarray(img)
    if arr.ndim == 3 and arr.shape[2] == 3:
        return arr.astype(np.float64) @ _LUMA
    if arr.ndim == 2:
        return arr.astype(np.float64)
    raise ValueError(f"expected (H, W) grayscale or (H, W, 3) RGB image, "
                     f"got shape {arr.shape}")


def _filter(img):
    # separable Gaussian; border values are discarded by the valid-crop below
    tmp = correlate1d(img, _KERNEL_1D, axis=0, mode="constant")
    return correlate1d(tmp, _KERNEL_1D, axis=1, mode="constant")


def ssim(a, b, mask=None) -> float:
    """Mean local structural similarity between two same-size 8-bit images.

    ``mask``, when given, restricts the mean to windows centered on in-mask
    pixels.  Windows always stay fully inside the image, so pixels closer than
    5 to the border never host a window center.
    """
    x = _to_luma(a)
    y = _to_luma(b)
    if x.shape != y.shape:
        raise ValueError(f"image shapes differ: {x.shape} vs {y.shape}")
    h, w = x.shape
    if h < _WIN or w < _WIN:
        raise ValueError(f"images must be at least {_WIN}x{_WIN} for SSIM, got {w}x{h}")

    ux = _filter(x)
    uy = _filter(y)
    uxx = _filter(x * x)
    uyy = _filter(y * y)
    uxy = _filter(x * y)
    vx = uxx - ux * ux
    vy = uyy - uy * uy
    vxy = uxy - ux * uy

    s = ((2.0 * ux * uy + _C1) * (2.0 * vxy + _C2)) \
        / ((ux * ux + uy * uy + _C1) * (vx + vy + _C2))
    s = s[_HALF:h - _HALF, _HALF:w - _HALF]

    if mask is None:
        return float(s.mean())
    m = np.asarray(mask)
    if m.shape != (h, w):
        raise ValueError(f"mask shape {m.shape} does not match image shape {(h, w)}")
    m = m.astype(bool)[_HALF:h - _HALF, _HALF:w - _HALF]
    if not m.any():
        raise ValueError("mask excludes every SSIM window center")
    return float(s[m].mean())


# --------------------------------------------------------------------------
# FID / KID
# --------------------------------------------------------------------------

def _moments(fs: FeatureSet):
    mu = fs.vectors.mean(axis=0)
    if fs.count < 2:
        raise ValueError(f"need at least 2 feature vectors, got {fs.count}")
    sigma = np.atleast_2d(np.cov(fs.vectors, rowvar=False, ddof=1))
    return mu, sigma


def _check_pair(real: FeatureSet, synthetic: FeatureSet):
    if real.dim != synthetic.dim:
        raise ValueError(f"feature dimensions differ: {real.dim} vs {synthetic.dim}")


def fid(real: FeatureSet, synthetic: FeatureSet) -> float:
    """Frechet distance between Gaussians fitted to the two feature sets.

    The covariance-product square root goes through an eigendecomposition of
    the symmetric form S1^(1/2) S2 S1^(1/2); tiny negative eigenvalues from
    round-off are clamped to zero, so near-singular covariances (few samples,
    high dimension) stay finite.
    """
    _check_pair(real, synthetic)
    mu1, s1 = _moments(real)
    mu2, s2 = _moments(synthetic)

    lam, u = np.linalg.eigh(s1)
    root1 = (u * np.sqrt(np.clip(lam, 0.0, None))) @ u.T
    inner = root1 @ s2 @ root1
    lam2 = np.linalg.eigvalsh(0.5 * (inner + inner.T))
    trace_sqrt = np.sqrt(np.clip(lam2, 0.0, None)).sum()

    diff = mu1 - mu2
    return float(diff @ diff + np.trace(s1) + np.trace(s2) - 2.0 * trace_sqrt)


def _poly3(x, y, d):
    return (x @ y.T / d + 1.0) ** 3


def kid(real: FeatureSet, synthetic: FeatureSet) -> float:
    """Unbiased squared maximum mean discrepancy, degree-3 polynomial kernel.

    Computed on the full sets in one shot (no subset averaging), so the value
    is deterministic.  The unbiased estimator can be slightly negative.
    """
    _check_pair(real, synthetic)
    x = real.vectors
    y = synthetic.vectors
    m, n = x.shape[0], y.shape[0]
    if m < 2 or n < 2:
        raise ValueError(f"need at least 2 vectors per set, got {m} and {n}")
    d = real.dim

    kxx = _poly3(x, x, d)
    kyy = _poly3(y, y, d)
    kxy = _poly3(x, y, d)
    term_x = (kxx.sum() - np.trace(kxx)) / (m * (m - 1))
    term_y = (kyy.sum() - np.trace(kyy)) / (n * (n - 1))
    term_xy = 2.0 * kxy.mean()
    return float(term_x + term_y - term_xy)


# --------------------------------------------------------------------------
# Batch evaluation
# --------------------------------------------------------------------------

def evaluate_set(real_images, synthetic_images, masks=None,
                 real_features: Optional[FeatureSet] = None,
                 synthetic_features: Optional[FeatureSet] = None) -> MetricReport:
    """Score paired image lists (and optional feature sets) in one report.

    Images are paired by position.  ``masks``, when given, must parallel the
    image lists.  FID/KID appear only when both feature sets are supplied.
    """
    if len(real_images) != len(synthetic_images):
        raise ValueError(f"image counts differ: {len(real_images)} real vs "
                         f"{len(synthetic_images)} synthetic")
    if len(real_images) == 0:
        raise ValueError("need at least one image pair")
    if masks is not None and len(masks) != len(real_images):
        raise ValueError(f"mask count {len(masks)} does not match "
                         f"image count {len(real_images)}")
    if (real_features is None) != (synthetic_features is None):
        raise ValueError("supply both feature sets or neither")

    pairs = []
    for i, (ra, sb) in enumerate(zip(real_images, synthetic_images)):
        mask = masks[i] if masks is not None else None
        pairs.append(ssim(ra, sb, mask=mask))

    fid_val = kid_val = None
    if real_features is not None:
        fid_val = fid(real_features, synthetic_features)
        kid_val = kid(real_features, synthetic_features)
    return MetricReport(ssim_mean=float(np.mean(pairs)),
                        per_pair_ssim=tuple(pairs), fid=fid_val, kid=kid_val)


# --------------------------------------------------------------------------
# Feature file I/O
# --------------------------------------------------------------------------

def load_features(path) -> FeatureSet:
    """Read a feature file: binary (JSON header line + float32 payload) or CSV.

    The binary header is one JSON object on the first line with keys
    ``count``, ``dim``, and optionally ``dtype`` (must be ``<f4``); the
    payload is count*dim little-endian float32 values, row-major.
    """
    path = str(path)
    with open(path, "rb") as fh:
        head = fh.read(1).decode("ascii", errors="replace")
        fh.seek(0)
        if head == "{":
            header_line = fh.readline()
            try:
                header = json.loads(header_line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}: bad feature header: {exc}") from exc
            try:
                count = int(header["count"])
                dim = int(header["dim"])
            except KeyError as exc:
                raise ValueError(f"{path}: feature header missing {exc}") from exc
            dtype = header.get("dtype", "<f4")
            if dtype != "<f4":
                raise ValueError(f"{path}: unsupported feature dtype '{dtype}' "
                                 "(expected little-endian float32 '<f4')")
            payload = fh.read()
            expected = count * dim * 4
            if len(payload) != expected:
                raise ValueError(f"{path}: payload is {len(payload)} bytes, "
                                 f"expected {expected} for {count}x{dim} float32")
            vec = np.frombuffer(payload, dtype="<f4").reshape(count, dim)
            return FeatureSet(vec.astype(np.float64))
    vec = np.loadtxt(path, delimiter=",", dtype=np.float64, ndmin=2)
    return FeatureSet(vec)


def save_features(features: FeatureSet, path) -> None:
    """Write the binary feature format understood by :func:`load_features`."""
    header = {"count": features.count, "dim": features.dim, "dtype": "<f4"}
    with open(str(path), "wb") as fh:
        fh.write((json.dumps(header) + "\n").encode("ascii"))
        fh.write(np.ascontiguousarray(features.vectors, dtype="<f4").tobytes())
