"""End-to-end orchestration: texture a mesh from a registered frame, render a
synthetic multi-view dataset with ground-truth poses, mask frames, evaluate.

Every run is a pure function of its :class:`PipelineConfig` plus the input
files: rerunning with the same config and inputs reproduces every output byte,
regardless of thread count.  Dataset images are named ``frame_{index:06}.png``
and described by ``manifest.json``, which is the single source of truth for
image-to-pose association.
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields, replace

import numpy as np

from ._version import __version__
from .camera import (CameraIntrinsics, Pose, load_intrinsics, load_pose,
                     sample_poses)
from .images import load_image, load_mask, save_image, save_mask
from .mesh import Mesh, demean, load_mesh, save_mesh
from .metrics import MetricReport, evaluate_set, load_features
from .phantoms import make_phantom
from .rasterize import BACKENDS, RenderSettings, render, render_mask
from .texturing import TexturingReport, texture_mesh

__all__ = ["PipelineConfig", "DatasetManifest", "ManifestEntry",
           "run_texture", "run_dataset", "run_mask", "run_metrics",
           "resolve_threads", "make_phantom"]

THREADS_ENV_VAR = "VIEWSYNTH_THREADS"


@dataclass(frozen=True)
class PipelineConfig:
    """All knobs for the texture/dataset/mask stages.

    Paths are input artifacts; the rest mirror the underlying library calls.
    Thread count is deliberately absent: it may change scheduling but never
    output bytes, so it is a runtime argument, not configuration.
    """

    mesh_path: str = ""
    frame_path: str = ""
    pose_path: str = ""
    intrinsics_path: str = ""
    output_dir: str = "out"
    demean_mesh: bool = False
    pose_count: int = 30
    max_rotation: float = 10.0
    max_translation: float = 5.0
    seed: int = 0
    backend: str = "edge_function"
    fallback_color: tuple = (96, 96, 96)
    depth_epsilon: float = 0.5
    background: tuple = (0, 0, 0)

    def __post_init__(self):
        if self.pose_count < 1:
            raise ValueError(f"pose_count must be >= 1, got {self.pose_count}")
        if self.backend not in BACKENDS:
            raise ValueError(f"unknown backend '{self.backend}'; "
                             f"expected one of {BACKENDS}")
        object.__setattr__(self, "fallback_color", tuple(self.fallback_color))
        object.__setattr__(self, "background", tuple(self.background))

    @classmethod
    def from_json(cls, path, overrides: dict = None) -> "PipelineConfig":
        """Load config JSON, then apply non-None overrides (CLI flags win)."""
        with open(path) as fh:
            try:
                raw = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}: bad config JSON: {exc}") from exc
        if not isinstance(raw, dict):
            raise ValueError(f"{path}: config must be a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise ValueError(f"{path}: unknown config keys {sorted(unknown)}")
        cfg = cls(**raw)
        if overrides:
            cfg = replace(cfg, **{k: v for k, v in overrides.items() if v is not None})
        return cfg

    def to_dict(self) -> dict:
        return {
            "mesh_path": self.mesh_path,
            "frame_path": self.frame_path,
            "pose_path": self.pose_path,
            "intrinsics_path": self.intrinsics_path,
            "output_dir": self.output_dir,
            "demean_mesh": self.demean_mesh,
            "pose_count": self.pose_count,
            "max_rotation": self.max_rotation,
            "max_translation": self.max_translation,
            "seed": self.seed,
            "backend": self.backend,
            "fallback_color": list(self.fallback_color),
            "depth_epsilon": self.depth_epsilon,
            "background": list(self.background),
        }


@dataclass(frozen=True)
class ManifestEntry:
    index: int
    image_file: str
    pose: Pose

    def to_dict(self) -> dict:
        return {"index": self.index, "image_file": self.image_file,
                "pose": self.pose.to_dict()}


@dataclass(frozen=True)
class DatasetManifest:
    """Everything needed to reproduce or consume a rendered dataset."""

    entries: tuple
    intrinsics: CameraIntrinsics
    registration_pose: Pose
    config_echo: dict
    tool_version: str

    def to_dict(self) -> dict:
        return {
            "tool_version": self.tool_version,
            "intrinsics": self.intrinsics.to_dict(),
            "registration_pose": self.registration_pose.to_dict(),
            "config_echo": self.config_echo,
            "entries": [e.to_dict() for e in self.entries],
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "DatasetManifest":
        entries = tuple(
            ManifestEntry(index=int(e["index"]), image_file=e["image_file"],
                          pose=Pose.from_dict(e["pose"]))
            for e in raw["entries"])
        return cls(entries=entries,
                   intrinsics=CameraIntrinsics.from_dict(raw["intrinsics"]),
                   registration_pose=Pose.from_dict(raw["registration_pose"]),
                   config_echo=raw["config_echo"],
                   tool_version=raw["tool_version"])

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "DatasetManifest":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def resolve_threads(flag_value=None) -> int:
    """Worker count: CLI flag beats the VIEWSYNTH_THREADS env var beats 1.

    0 means "use all CPUs".  The choice affects wall time only, never bytes.
    """
    value = flag_value
    if value is None:
        env = os.environ.get(THREADS_ENV_VAR)
        if env is not None:
            try:
                value = int(env)
            except ValueError:
                raise ValueError(f"{THREADS_ENV_VAR} must be an integer, got '{env}'")
    if value is None:
        value = 1
    if value < 0:
        raise ValueError(f"thread count must be >= 0, got {value}")
    return value if value > 0 else (os.cpu_count() or 1)


def _load_inputs(config: PipelineConfig):
    """Load mesh/frame/pose/intrinsics; apply demeaning with the matching
    pose correction t' = t + R*c so the camera sees identical geometry."""
    for name in ("mesh_path", "frame_path", "pose_path", "intrinsics_path"):
        if not getattr(config, name):
            raise ValueError(f"config.{name} is required but empty")
    mesh = load_mesh(config.mesh_path)
    frame = load_image(config.frame_path)
    pose = load_pose(config.pose_path)
    intrinsics = load_intrinsics(config.intrinsics_path)
    centroid = None
    if config.demean_mesh:
        mesh, centroid = demean(mesh)
        pose = Pose(pose.rotation, pose.translation + pose.rotation @ centroid)
    return mesh, frame, pose, intrinsics, centroid


def _prepare_output_dir(config: PipelineConfig) -> str:
    out = config.output_dir
    if not out:
        raise ValueError("config.output_dir is required but empty")
    os.makedirs(out, exist_ok=True)
    return out


def _write_json(path, payload) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _texture_stage(config, mesh, frame, pose, intrinsics, centroid, out):
    textured, visible, report = texture_mesh(
        mesh, frame, pose, intrinsics,
        fallback_color=config.fallback_color,
        depth_epsilon=config.depth_epsilon)

    save_mesh(textured, os.path.join(out, "textured_mesh.ply"), format="ply")
    _write_json(os.path.join(out, "visibility.json"),
                [int(v) for v in visible])
    _write_json(os.path.join(out, "texture_report.json"), report.to_dict())
    if centroid is not None:
        _write_json(os.path.join(out, "centroid.json"),
                    {"centroid": [float(c) for c in centroid]})
    return textured, visible, report


def run_texture(config: PipelineConfig):
    """Texture the input mesh from the registered frame.

    Writes ``textured_mesh.ply`` (binary, vertex colors), ``visibility.json``
    (one 0/1 per vertex), ``texture_report.json``, and ``centroid.json`` when
    demeaning was requested.  Returns (textured mesh, visibility, report).
    """
    mesh, frame, pose, intrinsics, centroid = _load_inputs(config)
    out = _prepare_output_dir(config)
    return _texture_stage(config, mesh, frame, pose, intrinsics, centroid, out)


def _render_entry(mesh, pose, intrinsics, settings, path):
    out = render(mesh, pose, intrinsics, settings)
    save_image(out.color, path)


def run_dataset(config: PipelineConfig, threads: int = 1) -> DatasetManifest:
    """Texture, sample poses, render every view, and write the manifest.

    Pose i perturbs the registration pose by a seeded random rotation
    (uniform angle up to ``max_rotation`` degrees, uniform axis) and
    translation (uniform in the ``max_translation`` cube).  ``threads``
    parallelizes rendering across poses; images are independent, so the
    output is identical for any thread count.
    """
    mesh, frame, pose, intrinsics, centroid = _load_inputs(config)
    out = _prepare_output_dir(config)
    textured, _, _ = _texture_stage(config, mesh, frame, pose, intrinsics,
                                    centroid, out)

    poses = sample_poses(pose, config.pose_count, config.max_rotation,
                         config.max_translation, config.seed)
    settings = RenderSettings(background=config.background,
                              backend=config.backend)
    entries = tuple(
        ManifestEntry(index=i, image_file=f"frame_{i:06d}.png", pose=p)
        for i, p in enumerate(poses))

    workers = max(1, int(threads))
    if workers == 1:
        for e in entries:
            _render_entry(textured, e.pose, intrinsics, settings,
                          os.path.join(out, e.image_file))
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(_render_entry, textured, e.pose, intrinsics,
                            settings, os.path.join(out, e.image_file))
                for e in entries]
            for f in futures:
                f.result()

    manifest = DatasetManifest(entries=entries, intrinsics=intrinsics,
                               registration_pose=pose,
                               config_echo=config.to_dict(),
                               tool_version=__version__)
    manifest.save(os.path.join(out, "manifest.json"))
    return manifest


def run_mask(config: PipelineConfig):
    """Black out every frame pixel the registered mesh does not cover.

    Writes ``masked_frame.png`` and ``coverage_mask.png``; returns the masked
    frame and the boolean mask.
    """
    mesh, frame, pose, intrinsics, _ = _load_inputs(config)
    out = _prepare_output_dir(config)

    mask = render_mask(mesh, pose, intrinsics)
    masked = np.where(mask[:, :, None], frame, np.uint8(0))
    save_image(masked, os.path.join(out, "masked_frame.png"))
    save_mask(mask, os.path.join(out, "coverage_mask.png"))
    return masked, mask


def _sorted_pngs(directory):
    names = sorted(n for n in os.listdir(directory)
                   if n.lower().endswith(".png"))
    if not names:
        raise ValueError(f"{directory}: no PNG files found")
    return [os.path.join(directory, n) for n in names]


def run_metrics(real_dir, synth_dir, mask_dir=None,
                real_features_path=None, synthetic_features_path=None,
                output_path=None) -> MetricReport:
    """Score two image directories (paired by sorted filename) and write JSON.

    Masks, when given, pair with the image lists the same way.  Feature files
    enable FID/KID; otherwise those fields are null in the report.
    """
    real_paths = _sorted_pngs(real_dir)
    synth_paths = _sorted_pngs(synth_dir)
    if len(real_paths) != len(synth_paths):
        raise ValueError(f"image counts differ: {len(real_paths)} in {real_dir} "
                         f"vs {len(synth_paths)} in {synth_dir}")
    real_images = [load_image(p) for p in real_paths]
    synth_images = [load_image(p) for p in synth_paths]

    masks = None
    if mask_dir is not None:
        from .images import load_mask
        mask_paths = _sorted_pngs(mask_dir)
        if len(mask_paths) != len(real_paths):
            raise ValueError(f"mask count {len(mask_paths)} does not match "
                             f"image count {len(real_paths)}")
        masks = [load_mask(p) for p in mask_paths]

    if (real_features_path is None) != (synthetic_features_path is None):
        raise ValueError("supply both feature files or neither")
    real_features = synth_features = None
    if real_features_path is not None:
        real_features = load_features(real_features_path)
        synth_features = load_features(synthetic_features_path)

    report = evaluate_set(real_images, synth_images, masks=masks,
                          real_features=real_features,
                          synthetic_features=synth_features)
    if output_path is not None:
        _write_json(output_path, report.to_dict())
    return report
