"""Raster file I/O: PNG color frames, PNG masks, and raw float32 depth dumps.

Color frames are 8-bit RGB arrays of shape (height, width, 3); an alpha
channel in the source PNG is dropped.  Depth rasters are stored as a single
JSON header line (width, height, dtype, row-major order) followed by
little-endian float32 samples; uncovered pixels hold +inf.
"""

from __future__ import annotations

import json

import numpy as np
from PIL import Image

__all__ = ["load_image", "save_image", "load_mask", "save_mask",
           "load_depth", "save_depth"]


def load_image(path):
    """Read a PNG as an (H, W, 3) uint8 RGB array (alpha ignored)."""
    with Image.open(path) as img:
        return np.asarray(img.convert("RGB"), dtype=np.uint8)


def save_image(pixels, path):
    """Write an (H, W, 3) uint8 array as a PNG."""
    pixels = np.asarray(pixels)
    if pixels.ndim != 3 or pixels.shape[2] != 3 or pixels.dtype != np.uint8:
        raise ValueError(f"expected (H, W, 3) uint8 pixels, got {pixels.dtype} "
                         f"{pixels.shape}")
    Image.fromarray(pixels, mode="RGB").save(path, format="PNG")


def load_mask(path):
    """Read a mask PNG as an (H, W) bool array; pixels >= 128 count as in-mask."""
    with Image.open(path) as img:
        return np.asarray(img.convert("L")) >= 128


def save_mask(mask, path):
    """Write an (H, W) bool array as an 8-bit grayscale PNG (0 / 255)."""
    mask = np.asarray(mask)
    if mask.ndim != 2 or mask.dtype != np.bool_:
        raise ValueError(f"expected (H, W) bool mask, got {mask.dtype} {mask.shape}")
    Image.fromarray(np.where(mask, 255, 0).astype(np.uint8), mode="L").save(
        path, format="PNG")


def save_depth(depth, path):
    """Write an (H, W) depth raster: JSON header line + float32 LE samples."""
    depth = np.asarray(depth, dtype=np.float64)
    if depth.ndim != 2:
        raise ValueError(f"expected (H, W) depth raster, got shape {depth.shape}")
    h, w = depth.shape
    header = {"width": w, "height": h, "dtype": "<f4", "order": "row-major"}
    with open(path, "wb") as f:
        f.write((json.dumps(header) + "\n").encode("ascii"))
        f.write(np.ascontiguousarray(depth, dtype="<f4").tobytes())


def load_depth(path):
    """Read a depth raster written by :func:`save_depth` as (H, W) float64."""
    with open(path, "rb") as f:
        header_line = f.readline()
        try:
            header = json.loads(header_line.decode("ascii"))
            w, h = int(header["width"]), int(header["height"])
        except (ValueError, KeyError) as exc:
            raise ValueError(f"{path}: malformed depth header: {exc}") from None
        payload = f.read()
    expected = w * h * 4
    if len(payload) != expected:
        raise ValueError(f"{path}: depth payload has {len(payload)} bytes, "
                         f"expected {expected}")
    return np.frombuffer(payload, dtype="<f4").reshape(h, w).astype(np.float64)
