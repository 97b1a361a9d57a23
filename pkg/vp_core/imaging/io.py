"""
Image Input/Output

Reading images into normalized luminance, writing 8-bit renders, and resampling onto the
square working grid.
"""

from pathlib import Path

import cv2
import numpy as np
from numpy.typing import NDArray
from structlog import get_logger

from ..errors import FormatError, IoError
from .models import GrayImage, GridTransform

logger = get_logger()

# ITU-R BT.601 luma, applied to (R, G, B)
LUMA_WEIGHTS = np.array([0.299, 0.587, 0.114])


def _to_unit_range(raw: NDArray, path: Path) -> NDArray[np.float64]:
    if raw.dtype == np.uint8:
        return raw.astype(np.float64) / 255.0
    if raw.dtype == np.uint16:
        return raw.astype(np.float64) / 65535.0
    if raw.dtype in (np.float32, np.float64):
        return np.clip(raw.astype(np.float64), 0.0, 1.0)
    raise FormatError(f"Unsupported pixel type {raw.dtype} in {path}")


def load_image(path: str | Path) -> GrayImage:
    """
    Load an image file as luminance in [0, 1].

    Color images are converted with fixed weights 0.299/0.587/0.114; alpha is dropped.

    Args:
        path: PGM, PPM or PNG file (any format OpenCV decodes is accepted)

    Returns:
        Normalized luminance image

    Raises:
        IoError: File missing or unreadable
        FormatError: File present but not a decodable image
    """
    path = Path(path)
    if not path.is_file():
        raise IoError(f"Image not found: {path}")
    try:
        buffer = np.fromfile(path, dtype=np.uint8)
    except OSError as e:
        raise IoError(f"Cannot read {path}: {e}") from e

    raw = cv2.imdecode(buffer, cv2.IMREAD_UNCHANGED) if buffer.size else None
    if raw is None:
        raise FormatError(f"Unsupported or corrupt image encoding: {path}")

    values = _to_unit_range(raw, path)
    if values.ndim == 3:
        if values.shape[2] == 1:
            values = values[..., 0]
        elif values.shape[2] in (3, 4):
            # OpenCV decodes to BGR(A)
            rgb = values[..., 2::-1] if values.shape[2] == 3 else values[..., [2, 1, 0]]
            values = np.clip(rgb @ LUMA_WEIGHTS, 0.0, 1.0)
        else:
            raise FormatError(f"Unsupported channel count {values.shape[2]} in {path}")

    logger.debug("image_loaded", path=str(path), width=values.shape[1], height=values.shape[0])
    return GrayImage(values)


def quantize_8bit(values: NDArray[np.float64]) -> NDArray[np.float64]:
    """Round values to the nearest k/255 so they survive an 8-bit file round trip."""
    return np.round(np.clip(values, 0.0, 1.0) * 255.0) / 255.0


def save_image(image: GrayImage | NDArray, path: str | Path) -> Path:
    """
    Write an 8-bit grayscale (or BGR, for 3-channel arrays) image.

    The format follows the file suffix (.png, .pgm, .ppm).

    Raises:
        IoError: Directory not writable or encoder failure
    """
    path = Path(path)
    values = image.values if isinstance(image, GrayImage) else np.asarray(image)
    data = np.round(np.clip(values, 0.0, 1.0) * 255.0).astype(np.uint8)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        ok, encoded = cv2.imencode(path.suffix or ".png", data)
        if not ok:
            raise IoError(f"Encoder rejected {path}")
        encoded.tofile(path)
    except (OSError, cv2.error) as e:
        raise IoError(f"Cannot write {path}: {e}") from e
    return path


def grid_transform(width: int, height: int, side: int) -> GridTransform:
    """Transform taking a width x height image onto a side x side grid, long edge spanning it."""
    if side <= 0:
        raise ValueError(f"side must be positive, got {side}")
    if width == side and height == side:
        return GridTransform(1.0, 0.0, 0.0, (0, 0, side, side))

    long_edge = max(width, height)
    scale = side / long_edge
    new_w = side if width == long_edge else max(1, round(width * scale))
    new_h = side if height == long_edge else max(1, round(height * scale))
    offset_x = (side - new_w) // 2
    offset_y = (side - new_h) // 2
    return GridTransform(
        scale=scale,
        offset_x=float(offset_x),
        offset_y=float(offset_y),
        content_box=(offset_x, offset_y, offset_x + new_w, offset_y + new_h),
    )


def resize_to_grid(image: GrayImage, side: int) -> tuple[GrayImage, GridTransform]:
    """
    Resample an image onto a side x side working grid.

    Downscaling averages pixel areas, upscaling is bilinear. Non-square inputs are scaled
    uniformly so the long edge spans the grid and then centered; the padding is filled with
    the image mean and reported through the content box.

    Args:
        image: Source image
        side: Grid side in pixels

    Returns:
        Tuple of (grid image, transform from source to grid coordinates)
    """
    width, height = image.width, image.height
    transform = grid_transform(width, height, side)
    if (width, height) == (side, side):
        return image, transform

    x0, y0, x1, y1 = transform.content_box
    new_w, new_h = x1 - x0, y1 - y0
    interpolation = cv2.INTER_AREA if transform.scale < 1.0 else cv2.INTER_LINEAR
    resized = cv2.resize(image.values, (new_w, new_h), interpolation=interpolation)
    if (new_w, new_h) != (side, side):
        canvas = np.full((side, side), float(image.values.mean()))
        canvas[y0:y1, x0:x1] = resized
        resized = canvas

    logger.debug("image_resized", source=(width, height), side=side, scale=transform.scale)
    return GrayImage(np.clip(resized, 0.0, 1.0)), transform
