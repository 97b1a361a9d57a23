"""
Command Line Entry Point

vp-sphere commands:
- precompute: build (or reuse) the mapping table cache for a camera
- detect: vanishing points of one image as JSON on stdout
- synth: render a seeded synthetic dataset with its manifest
- eval: evaluate a detector on a manifest (report JSON + curves CSV)
- sweep: quantization sweep over angle bins and lattice size (one CSV)
"""

import argparse
import json
import sys
from pathlib import Path
from typing import Any, Optional, Sequence

from structlog import get_logger

from ..camera.models import CameraIntrinsics, FocalSource
from ..config import RunConfig, get_settings, resolve_run_config
from ..errors import ConfigError, IoError, VPError
from ..logging import configure_logging
from ..shared_services.run_context import RunContext, clear_run_context, set_run_context

logger = get_logger()

DEFAULT_SWEEP_N_THETA = "45,90,180"
DEFAULT_SWEEP_N_POINTS = "8192,16384,32768"


class UsageError(VPError):
    """Bad command line."""


class _Parser(argparse.ArgumentParser):
    """Argument parser raising UsageError (exit code 1) instead of exiting with 2."""

    def error(self, message: str) -> None:  # type: ignore[override]
        raise UsageError(f"{self.prog}: {message}")


def _int_list(text: str) -> list[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected comma separated integers, got '{text}'") from e


def _float_list(text: str) -> list[float]:
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected comma separated numbers, got '{text}'") from e


def _parse_set(pairs: Optional[Sequence[str]]) -> dict[str, Any]:
    """--set key=value pairs; values are JSON when they parse, strings otherwise."""
    overrides: dict[str, Any] = {}
    for pair in pairs or []:
        key, sep, value = pair.partition("=")
        if not sep or not key:
            raise UsageError(f"--set expects key=value, got '{pair}'")
        try:
            overrides[key] = json.loads(value)
        except json.JSONDecodeError:
            overrides[key] = value
    return overrides


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="vp-sphere", description="Vanishing point detection on the Gaussian sphere")
    parser.add_argument("--log-level", default=None, help="DEBUG, INFO, WARNING or ERROR")
    parser.add_argument("--log-json", action="store_true", default=None, help="JSON log lines")

    common = _Parser(add_help=False)
    common.add_argument("--config", type=Path, default=None, help="JSON run configuration")
    common.add_argument(
        "--set", action="append", metavar="KEY=VALUE", help="Override, e.g. hough.n_theta=90"
    )
    common.add_argument("--cache-dir", type=Path, default=None, help="Mapping cache directory")

    detector = _Parser(add_help=False)
    detector.add_argument("--detector", choices=["sphere", "nms"], default="sphere")
    detector.add_argument("--mode", choices=["manhattan", "multi"], default=None)
    detector.add_argument("--workers", type=int, default=None, help="Worker processes")

    subparsers = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    precompute = subparsers.add_parser(
        "precompute", parents=[common], help="Build the mapping table for a camera"
    )
    _add_camera_args(precompute)
    precompute.add_argument("--width", type=int, default=None, help="Image width (default: grid side)")
    precompute.add_argument("--height", type=int, default=None, help="Image height (default: grid side)")

    detect = subparsers.add_parser(
        "detect", parents=[common, detector], help="Detect vanishing points in one image"
    )
    detect.add_argument("image", type=Path)
    _add_camera_args(detect)
    detect.add_argument("--out", type=Path, default=None, help="Write JSON here instead of stdout")
    detect.add_argument("--overlay", type=Path, default=None, help="PNG with lines colored by VP")
    detect.add_argument("--hough-dump", type=Path, default=None, help="PGM of the filtered Hough grid")
    detect.add_argument("--run-log", type=Path, default=None, help="Append an execution record")
    detect.add_argument("--no-cache", action="store_true", help="Build the mapping in memory")

    synth = subparsers.add_parser("synth", help="Render a synthetic dataset")
    synth.add_argument("spec", type=Path, help="JSON scene or dataset spec")
    synth.add_argument("--out", type=Path, required=True, help="Output directory")

    evaluate = subparsers.add_parser(
        "eval", parents=[common, detector], help="Evaluate a detector on a manifest"
    )
    evaluate.add_argument("manifest", type=Path)
    evaluate.add_argument("--thresholds", type=_float_list, default=None, help="e.g. 3,5,10")
    evaluate.add_argument("--out", type=Path, default=None, help="Report JSON (default: stdout)")
    evaluate.add_argument("--curves", type=Path, default=None, help="AA / recall curves CSV")
    evaluate.add_argument("--run-log", type=Path, default=None, help="Append execution records")

    sweep = subparsers.add_parser(
        "sweep", parents=[common, detector], help="Quantization sweep over Nθ and N"
    )
    sweep.add_argument("manifest", type=Path)
    sweep.add_argument("--n-theta", type=_int_list, default=_int_list(DEFAULT_SWEEP_N_THETA))
    sweep.add_argument("--n-points", type=_int_list, default=_int_list(DEFAULT_SWEEP_N_POINTS))
    sweep.add_argument("--thresholds", type=_float_list, default=None)
    sweep.add_argument("--out", type=Path, required=True, help="Sweep CSV")
    return parser


def _add_camera_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--focal", type=float, default=None, help="Focal length in pixels")
    parser.add_argument("--cx", type=float, default=None, help="Principal point x")
    parser.add_argument("--cy", type=float, default=None, help="Principal point y")


def _run_config(args: argparse.Namespace) -> RunConfig:
    overrides = _parse_set(getattr(args, "set", None))
    if getattr(args, "mode", None):
        overrides["detector.mode"] = args.mode
    if getattr(args, "thresholds", None):
        overrides["evaluation.thresholds_deg"] = args.thresholds
    return resolve_run_config(args.config, overrides)


def _cache_dir(args: argparse.Namespace) -> Path:
    return (args.cache_dir or get_settings().resolved_cache_dir).expanduser()


def _workers(args: argparse.Namespace) -> int:
    workers = args.workers if args.workers is not None else get_settings().resolved_workers
    if workers < 1:
        raise UsageError(f"--workers must be positive, got {workers}")
    return workers


def _emit(payload: dict[str, Any], out: Optional[Path] = None) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if out is None:
        sys.stdout.write(text)
        return
    try:
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text, encoding="utf-8")
    except OSError as e:
        raise IoError(f"Cannot write {out}: {e}") from e


def _camera(
    args: argparse.Namespace, width: int, height: int, config: RunConfig
) -> tuple[CameraIntrinsics, FocalSource]:
    try:
        intrinsics, source = CameraIntrinsics.from_record(
            width, height, args.focal, args.cx, args.cy, config.camera.default_focal
        )
    except ValueError as e:
        raise ConfigError(f"invalid camera: {e}") from e
    if source == FocalSource.DEFAULT:
        logger.warning("focal_defaulted", focal=intrinsics.focal, width=width, height=height)
    return intrinsics, source


def cmd_precompute(args: argparse.Namespace, config: RunConfig) -> int:
    """Build or reuse the mapping table for the camera's working grid and print its stats."""
    from detectors.sphere_voting import grid_intrinsics, shared_lattice

    from ..imaging.io import grid_transform
    from ..sphere.cache import MappingCacheService

    side = config.hough.grid_side
    width, height = args.width or side, args.height or side
    intrinsics, source = _camera(args, width, height, config)
    grid_camera = grid_intrinsics(intrinsics, grid_transform(width, height, side), side)

    lattice = shared_lattice(config.lattice.n_points, config.lattice.k, config.lattice.variant)
    cache = MappingCacheService(_cache_dir(args))
    table = cache.get_or_build(config.hough, lattice, grid_camera, config.mapping)
    key = cache.cache_key(config.hough, lattice, grid_camera, config.mapping)
    counts = table.counts

    _emit(
        {
            "cache_file": str(cache.path_for(config.hough, lattice, grid_camera, config.mapping)),
            "cache_hash": key,
            "config_hash": config.config_hash(),
            "bins": int(counts.size),
            "entries": int(counts.sum()),
            "entries_per_bin": {
                "min": int(counts.min()),
                "mean": round(float(counts.mean()), 3),
                "max": int(counts.max()),
            },
            "eps_map": table.eps_map,
            "focal_source": source.value,
            "lattice_points": lattice.n_points,
        }
    )
    return 0


def cmd_detect(args: argparse.Namespace, config: RunConfig) -> int:
    """Detect on one image; Detection JSON on stdout (or --out)."""
    from detectors import build_detector

    from ..detect.assignment import assign_lines, render_overlay
    from ..hough.transform import grid_heatmap
    from ..imaging.io import grid_transform, load_image, save_image
    from ..pipeline.base_detector import DetectionRequest, DetectionStatus
    from ..pipeline.run_log import RunLogService
    from ..sphere.cache import MappingCacheService

    image = load_image(args.image)
    intrinsics, source = _camera(args, image.width, image.height, config)
    cache = None if args.no_cache else MappingCacheService(_cache_dir(args))
    run_log = RunLogService(args.run_log) if args.run_log else None
    detector = build_detector(args.detector, config, cache=cache, run_log=run_log)

    result = detector.execute(
        DetectionRequest(
            image=image, intrinsics=intrinsics, focal_source=source, image_id=str(args.image)
        )
    )
    if result.status != DetectionStatus.SUCCESS:
        logger.error("detect_failed", status=result.status.value, error=result.error)
        return result.error_code or 1

    detection = result.output
    if args.hough_dump or args.overlay:
        grid, grid_camera = detector.prepare_grid(image, intrinsics)
        if args.hough_dump:
            save_image(grid_heatmap(grid), args.hough_dump)
        if args.overlay:
            transform = grid_transform(image.width, image.height, config.hough.grid_side)
            assignment = assign_lines(grid, grid_camera, detection.vps)
            save_image(render_overlay(image, transform, grid, grid_camera, assignment), args.overlay)

    _emit(
        {
            "image": str(args.image),
            "detector": detector.get_description(),
            "config_hash": config.config_hash(),
            "cache_hash": getattr(detector, "last_cache_hash", None),
            "config": config.model_dump(mode="json"),
            "detection": detection.to_json(),
        },
        args.out,
    )
    return 0


def cmd_synth(args: argparse.Namespace) -> int:
    """Render a dataset from a JSON spec."""
    from pydantic import ValidationError

    from ..config import load_config_file
    from ..synth.generator import write_dataset
    from ..synth.models import DatasetSpec

    try:
        spec = DatasetSpec.from_payload(load_config_file(args.spec))
    except ValidationError as e:
        first = e.errors()[0]
        location = ".".join(str(part) for part in first["loc"])
        raise ConfigError(f"invalid synth spec at '{location}': {first['msg']}") from e

    records = write_dataset(spec, args.out)
    _emit(
        {
            "out_dir": str(args.out),
            "scenes": len(records),
            "manifest": str(args.out / "manifest.jsonl"),
            "spec": spec.model_dump(mode="json"),
        }
    )
    return 0


def cmd_eval(args: argparse.Namespace, config: RunConfig) -> int:
    """Evaluate a manifest; report JSON to --out or stdout, curves CSV to --curves."""
    from ..evaluation.runner import evaluate_manifest, write_curves_csv, write_report

    report = evaluate_manifest(
        args.manifest,
        config,
        detector_name=args.detector,
        workers=_workers(args),
        cache_dir=_cache_dir(args),
        run_log_path=args.run_log,
    )
    if args.out is not None:
        write_report(report, args.out)
    else:
        sys.stdout.write(report.model_dump_json(indent=2) + "\n")
    if args.curves is not None:
        write_curves_csv(report, args.curves, config.evaluation)
    return 0


def cmd_sweep(args: argparse.Namespace, config: RunConfig) -> int:
    """Quantization sweep over the angle-bin and lattice-size axes."""
    from ..evaluation.runner import run_sweep, write_sweep_csv

    axes = {"n_theta": args.n_theta, "n_points": args.n_points}
    rows = run_sweep(
        args.manifest,
        config,
        {axis: values for axis, values in axes.items() if values},
        detector_name=args.detector,
        workers=_workers(args),
        cache_dir=_cache_dir(args),
    )
    write_sweep_csv(rows, args.out)
    logger.info("sweep_written", path=str(args.out), rows=len(rows))
    return 0


def run(argv: Optional[Sequence[str]] = None) -> int:
    """
    Parse arguments and run a command.

    Returns:
        Process exit code: 0 success, 1 usage or configuration, 2 IO, 3 no evidence or
        infeasible spec, 4 cache mismatch
    """
    try:
        args = build_parser().parse_args(argv)
    except UsageError as e:
        sys.stderr.write(f"{e}\n")
        return e.exit_code

    configure_logging(args.log_level, args.log_json)
    try:
        if args.command == "synth":
            set_run_context(RunContext(command="synth", config_hash=""))
            return cmd_synth(args)

        config = _run_config(args)
        set_run_context(RunContext(command=args.command, config_hash=config.config_hash()))
        logger.info("command_started", command=args.command)
        handler = {
            "precompute": cmd_precompute,
            "detect": cmd_detect,
            "eval": cmd_eval,
            "sweep": cmd_sweep,
        }[args.command]
        return handler(args, config)
    except VPError as e:
        logger.error("command_failed", command=args.command, error=str(e), type=type(e).__name__)
        return e.exit_code
    finally:
        clear_run_context()


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
