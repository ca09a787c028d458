"""Command-line front end.

Subcommands: ``texture``, ``dataset``, ``mask``, ``metrics``, ``phantom``,
``render``.  The config-driven commands (texture/dataset/mask) accept
``--config <json>`` plus flags that override individual fields; flags win.

Exit codes are a stable scripting contract: 0 success, 2 input or validation
error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import sys

from ._version import __version__
from .camera import load_intrinsics, load_pose
from .images import save_depth, save_image
from .mesh import load_mesh, save_mesh
from .phantoms import PHANTOM_KINDS, make_phantom
from .pipeline import (PipelineConfig, resolve_threads, run_dataset,
                       run_mask, run_metrics, run_texture)
from .rasterize import BACKENDS, RenderSettings, render

__all__ = ["main"]


def _rgb(text: str):
    parts = text.split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(
            f"expected R,G,B (three comma-separated integers), got '{text}'")
    try:
        rgb = tuple(int(p) for p in parts)
    except ValueError:
        raise argparse.ArgumentTypeError(f"non-integer channel in '{text}'")
    if min(rgb) < 0 or max(rgb) > 255:
        raise argparse.ArgumentTypeError(f"channels must be 0..255, got '{text}'")
    return rgb


def _add_input_flags(p, with_texture_knobs):
    p.add_argument("--config", help="JSON file of config fields; flags override it")
    p.add_argument("--mesh", dest="mesh_path", help="input mesh (.ply or .obj)")
    p.add_argument("--frame", dest="frame_path", help="registered camera frame PNG")
    p.add_argument("--pose", dest="pose_path", help="registration pose JSON")
    p.add_argument("--intrinsics", dest="intrinsics_path",
                   help="camera intrinsics JSON")
    p.add_argument("--output-dir", dest="output_dir", help="output directory")
    p.add_argument("--demean", dest="demean_mesh", action="store_const",
                   const=True, help="center the mesh before use "
                   "(pose is corrected to compensate)")
    p.add_argument("--no-demean", dest="demean_mesh", action="store_const",
                   const=False, help="keep mesh coordinates as loaded")
    if with_texture_knobs:
        p.add_argument("--fallback-color", dest="fallback_color", type=_rgb,
                       metavar="R,G,B", help="color for non-visible vertices")
        p.add_argument("--depth-epsilon", dest="depth_epsilon", type=float,
                       help="occlusion-test slack in millimeters")


def _add_dataset_flags(p):
    p.add_argument("--count", dest="pose_count", type=int,
                   help="number of views to render")
    p.add_argument("--max-rotation", dest="max_rotation", type=float,
                   help="max perturbation angle, degrees")
    p.add_argument("--max-translation", dest="max_translation", type=float,
                   help="max perturbation shift per axis, millimeters")
    p.add_argument("--seed", type=int, help="pose-sampling seed")
    p.add_argument("--backend", choices=BACKENDS, help="rasterizer backend")
    p.add_argument("--background", type=_rgb, metavar="R,G,B",
                   help="background color")


_CONFIG_KEYS = ("mesh_path", "frame_path", "pose_path", "intrinsics_path",
                "output_dir", "demean_mesh", "pose_count", "max_rotation",
                "max_translation", "seed", "backend", "fallback_color",
                "depth_epsilon", "background")


def _build_config(args) -> PipelineConfig:
    overrides = {k: getattr(args, k, None) for k in _CONFIG_KEYS}
    if args.config:
        return PipelineConfig.from_json(args.config, overrides)
    return PipelineConfig(**{k: v for k, v in overrides.items() if v is not None})


def _cmd_texture(args) -> int:
    config = _build_config(args)
    _, _, report = run_texture(config)
    print(f"textured mesh written to {config.output_dir}; "
          f"visible {report.visible_count}, occluded {report.occluded_count}, "
          f"out of frame {report.out_of_frame_count}, "
          f"behind camera {report.behind_camera_count}")
    return 0


def _cmd_dataset(args) -> int:
    config = _build_config(args)
    threads = resolve_threads(args.threads)
    manifest = run_dataset(config, threads=threads)
    print(f"rendered {len(manifest.entries)} views into {config.output_dir} "
          f"({threads} thread{'s' if threads != 1 else ''})")
    return 0


def _cmd_mask(args) -> int:
    config = _build_config(args)
    _, mask = run_mask(config)
    print(f"masked frame written to {config.output_dir}; "
          f"coverage {int(mask.sum())} of {mask.size} pixels")
    return 0


def _cmd_metrics(args) -> int:
    report = run_metrics(args.real, args.synthetic, mask_dir=args.masks,
                         real_features_path=args.real_features,
                         synthetic_features_path=args.synthetic_features,
                         output_path=args.output)
    line = f"ssim_mean {report.ssim_mean:.6f} over {len(report.per_pair_ssim)} pairs"
    if report.fid is not None:
        line += f"; fid {report.fid:.6f}; kid {report.kid:.6f}"
    print(line)
    return 0


def _cmd_phantom(args) -> int:
    mesh = make_phantom(args.kind, resolution=args.resolution, seed=args.seed,
                        scale=args.scale)
    save_mesh(mesh, args.output, format="ply")
    print(f"{args.kind} phantom: {mesh.n_vertices} vertices, "
          f"{mesh.n_triangles} triangles -> {args.output}")
    return 0


def _cmd_render(args) -> int:
    mesh = load_mesh(args.mesh)
    pose = load_pose(args.pose)
    intrinsics = load_intrinsics(args.intrinsics)
    settings = RenderSettings(background=args.background, backend=args.backend)
    out = render(mesh, pose, intrinsics, settings)
    save_image(out.color, args.output)
    if args.depth:
        save_depth(out.depth, args.depth)
    print(f"rendered {intrinsics.width}x{intrinsics.height} view -> {args.output}")
    return 0


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="viewsynth",
        description="Texture a mesh from one registered frame and synthesize "
                    "pose-annotated novel views.")
    parser.add_argument("--version", action="version",
                        version=f"viewsynth {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("texture", help="back-project frame colors onto the mesh")
    _add_input_flags(p, with_texture_knobs=True)
    p.set_defaults(func=_cmd_texture)

    p = sub.add_parser("dataset", help="render a synthetic multi-view dataset")
    _add_input_flags(p, with_texture_knobs=True)
    _add_dataset_flags(p)
    p.add_argument("--threads", type=int, default=None,
                   help="render workers (0 = all CPUs; VIEWSYNTH_THREADS "
                        "honored when flag absent)")
    p.set_defaults(func=_cmd_dataset)

    p = sub.add_parser("mask", help="black out frame pixels the mesh does not cover")
    _add_input_flags(p, with_texture_knobs=False)
    p.set_defaults(func=_cmd_mask)

    p = sub.add_parser("metrics", help="score paired image directories")
    p.add_argument("--real", required=True, help="directory of reference PNGs")
    p.add_argument("--synthetic", required=True, help="directory of rendered PNGs")
    p.add_argument("--masks", help="directory of mask PNGs (optional)")
    p.add_argument("--real-features", help="feature file for the real set")
    p.add_argument("--synthetic-features", help="feature file for the synthetic set")
    p.add_argument("--output", help="write the report JSON here")
    p.set_defaults(func=_cmd_metrics)

    p = sub.add_parser("phantom", help="generate a procedural test mesh")
    p.add_argument("--kind", choices=PHANTOM_KINDS, default="hemisphere_cavity")
    p.add_argument("--resolution", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--scale", type=float, default=30.0,
                   help="overall size in millimeters")
    p.add_argument("--output", required=True, help="output PLY path")
    p.set_defaults(func=_cmd_phantom)

    p = sub.add_parser("render", help="render one view of a colored mesh")
    p.add_argument("--mesh", required=True, help="colored mesh (.ply)")
    p.add_argument("--pose", required=True, help="camera pose JSON")
    p.add_argument("--intrinsics", required=True, help="camera intrinsics JSON")
    p.add_argument("--output", required=True, help="output PNG path")
    p.add_argument("--depth", help="also write the depth raster here")
    p.add_argument("--backend", choices=BACKENDS, default="edge_function")
    p.add_argument("--background", type=_rgb, metavar="R,G,B", default=(0, 0, 0))
    p.set_defaults(func=_cmd_render)
    return parser


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        return args.func(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
