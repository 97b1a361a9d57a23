"""
Synthetic Scene Generator

Renders families of 3D segments parallel to known directions through a pinhole camera,
giving images with exact vanishing points.
"""

from pathlib import Path
from typing import Optional

import cv2
import numpy as np
from numpy.typing import NDArray
from scipy.spatial.transform import Rotation
from structlog import get_logger
from tenacity import RetryError, Retrying, retry_if_exception_type, stop_after_attempt

from ..camera.models import CameraIntrinsics
from ..camera.projection import canonicalize, normalize
from ..errors import InfeasibleSpec
from ..evaluation.manifest import write_manifest
from ..evaluation.models import ManifestRecord
from ..imaging.io import save_image
from ..imaging.models import GrayImage
from .models import DatasetSpec, Rasterizer, SceneSpec, SceneTruth, Segment

logger = get_logger()

MAX_ATTEMPTS = 100
DEPTH_RANGE = (3.0, 8.0)
LENGTH_RANGE = (1.0, 3.0)
# fractional bits for subpixel cv2 drawing
_SHIFT = 4


class _Rejected(Exception):
    """A sample violated a scene constraint and is redrawn."""


def _retrying() -> Retrying:
    return Retrying(
        stop=stop_after_attempt(MAX_ATTEMPTS),
        retry=retry_if_exception_type(_Rejected),
    )


def sample_directions(spec: SceneSpec, rng: np.random.Generator) -> NDArray[np.float64]:
    """
    Canonical family directions: a random rotation's rows for Manhattan scenes, otherwise
    random directions pairwise at least min_separation_deg apart.

    Raises:
        InfeasibleSpec: Separation cannot be met
    """
    if spec.manhattan:
        return canonicalize(Rotation.random(random_state=rng).as_matrix())

    min_cos = np.cos(np.radians(spec.min_separation_deg))
    directions: list[NDArray[np.float64]] = []

    def draw() -> NDArray[np.float64]:
        candidate = canonicalize(normalize(rng.normal(size=3)))
        if any(abs(float(candidate @ d)) > min_cos for d in directions):
            raise _Rejected()
        return candidate

    for _ in range(spec.n_directions):
        try:
            directions.append(_retrying()(draw))
        except RetryError as e:
            raise InfeasibleSpec(
                f"cannot place {spec.n_directions} directions "
                f"{spec.min_separation_deg} degrees apart"
            ) from e
    return np.array(directions)


def project(points: NDArray[np.float64], intrinsics: CameraIntrinsics) -> NDArray[np.float64]:
    """Pixel coordinates of camera-frame points (z > 0)."""
    return np.stack(
        [
            intrinsics.focal * points[..., 0] / points[..., 2] + intrinsics.cx,
            intrinsics.focal * points[..., 1] / points[..., 2] + intrinsics.cy,
        ],
        axis=-1,
    )


def clip_segment(
    a: NDArray[np.float64], b: NDArray[np.float64], width: float, height: float
) -> Optional[tuple[NDArray[np.float64], NDArray[np.float64]]]:
    """Part of segment ab inside [0, width] x [0, height], or None."""
    d = b - a
    t0, t1 = 0.0, 1.0
    for p, q in (
        (-d[0], a[0]),
        (d[0], width - a[0]),
        (-d[1], a[1]),
        (d[1], height - a[1]),
    ):
        if p == 0:
            if q < 0:
                return None
            continue
        t = q / p
        if p < 0:
            t0 = max(t0, t)
        else:
            t1 = min(t1, t)
        if t0 > t1:
            return None
    return a + t0 * d, a + t1 * d


def _family_segment(
    direction: NDArray[np.float64],
    spec: SceneSpec,
    intrinsics: CameraIntrinsics,
    rng: np.random.Generator,
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    side = spec.image_size
    pixel = rng.uniform(0.1 * side, 0.9 * side, size=2)
    depth = rng.uniform(*DEPTH_RANGE)
    center = depth * np.array(
        [(pixel[0] - intrinsics.cx) / intrinsics.focal, (pixel[1] - intrinsics.cy) / intrinsics.focal, 1.0]
    )
    half = 0.5 * rng.uniform(*LENGTH_RANGE) * direction
    ends = np.stack([center - half, center + half])
    if np.any(ends[:, 2] < 0.1):
        raise _Rejected()
    a, b = project(ends, intrinsics)
    clipped = clip_segment(a, b, side, side)
    if clipped is None or np.linalg.norm(clipped[1] - clipped[0]) < spec.min_segment_px:
        raise _Rejected()
    return clipped


def _outlier_segment(
    spec: SceneSpec, rng: np.random.Generator
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    side = spec.image_size
    a, b = rng.uniform(0, side, size=(2, 2))
    if np.linalg.norm(b - a) < spec.min_segment_px:
        raise _Rejected()
    return a, b


def rasterize(segments: list[Segment], side: int, rasterizer: Rasterizer) -> GrayImage:
    """
    White-on-black rendering of segments.

    ANTIALIASED draws coverage-weighted lines, HARD draws 8-connected binary lines. Pixel
    values are multiples of 1/255.
    """
    canvas = np.zeros((side, side), dtype=np.uint8)
    line_type = cv2.LINE_AA if rasterizer == Rasterizer.ANTIALIASED else cv2.LINE_8
    scale = 1 << _SHIFT
    for segment in segments:
        # pixel centers sit at +0.5 in image coordinates, at integers for OpenCV
        a = np.round((np.asarray(segment.start) - 0.5) * scale).astype(int)
        b = np.round((np.asarray(segment.end) - 0.5) * scale).astype(int)
        cv2.line(canvas, tuple(a.tolist()), tuple(b.tolist()), 255, 1, line_type, _SHIFT)
    return GrayImage(canvas.astype(np.float64) / 255.0)


def generate_scene(spec: SceneSpec) -> tuple[GrayImage, SceneTruth]:
    """
    Render a seeded synthetic scene.

    Each family's 3D segments run parallel to its direction at depths 3 to 8 in front of
    the camera; projections are clipped to the image and must be at least
    min_segment_px long. Endpoint jitter and outlier segments are applied afterwards.

    Args:
        spec: Scene specification

    Returns:
        Tuple of (image, ground truth); identical for identical specs

    Raises:
        InfeasibleSpec: A constraint fails 100 draws in a row
    """
    rng = np.random.default_rng(spec.seed)
    intrinsics = spec.intrinsics
    directions = sample_directions(spec, rng)

    segments: list[Segment] = []
    try:
        for family, direction in enumerate(directions):
            for _ in range(spec.lines_per_direction):
                a, b = _retrying()(_family_segment, direction, spec, intrinsics, rng)
                segments.append(Segment(family=family, start=tuple(a), end=tuple(b)))

        if spec.jitter_sigma > 0:
            segments = [_jittered(s, spec, rng) for s in segments]

        n_outliers = int(round(spec.outlier_fraction * len(segments)))
        for _ in range(n_outliers):
            a, b = _retrying()(_outlier_segment, spec, rng)
            segments.append(Segment(family=-1, start=tuple(a), end=tuple(b)))
    except RetryError as e:
        raise InfeasibleSpec(
            f"scene seed {spec.seed}: no valid segment after {MAX_ATTEMPTS} attempts"
        ) from e

    image = rasterize(segments, spec.image_size, spec.rasterizer)
    truth = SceneTruth(
        directions=[tuple(d) for d in directions],
        segments=segments,
        intrinsics=intrinsics,
        manhattan=spec.manhattan,
    )
    logger.debug("scene_generated", seed=spec.seed, segments=len(segments))
    return image, truth


def _jittered(segment: Segment, spec: SceneSpec, rng: np.random.Generator) -> Segment:
    side = spec.image_size
    noise = rng.normal(scale=spec.jitter_sigma, size=(2, 2))
    start = np.clip(np.asarray(segment.start) + noise[0], 0, side)
    end = np.clip(np.asarray(segment.end) + noise[1], 0, side)
    return Segment(family=segment.family, start=tuple(start), end=tuple(end))


def scene_seed(dataset_seed: int, index: int) -> int:
    """Independent per-scene seed derived from the dataset seed."""
    return int(np.random.SeedSequence([dataset_seed, index]).generate_state(1)[0])


def dataset_scenes(spec: DatasetSpec) -> list[SceneSpec]:
    """Scene specs of a dataset, in output order."""
    rng = np.random.default_rng(spec.seed)
    scenes = []
    for i in range(spec.count):
        update: dict = {"seed": scene_seed(spec.seed, i)}
        if spec.n_directions_range and not spec.scene.manhattan:
            low, high = spec.n_directions_range
            update["n_directions"] = int(rng.integers(low, high + 1))
        scenes.append(spec.scene.model_copy(update=update))
    return scenes


def write_dataset(spec: DatasetSpec, out_dir: str | Path) -> list[ManifestRecord]:
    """
    Render a dataset: scene_NNNNN.png images plus manifest.jsonl in out_dir.

    Raises:
        IoError: Output not writable
        InfeasibleSpec: A scene cannot be generated
    """
    out_dir = Path(out_dir)
    records = []
    for i, scene in enumerate(dataset_scenes(spec)):
        image, truth = generate_scene(scene)
        name = f"scene_{i:05d}.png"
        save_image(image, out_dir / name)
        k = truth.intrinsics
        records.append(
            ManifestRecord(
                image=name,
                width=k.width,
                height=k.height,
                focal=k.focal,
                cx=k.cx,
                cy=k.cy,
                vps=truth.directions,
                manhattan=truth.manhattan,
            )
        )
    write_manifest(records, out_dir / "manifest.jsonl")
    logger.info("dataset_written", out_dir=str(out_dir), scenes=len(records))
    return records
