"""
Edge Evidence

Canny edge extraction with quantile thresholds, producing the feature map for the Hough
transform.
"""

from typing import Optional

import cv2
import numpy as np
from structlog import get_logger

from .models import EdgeConfig, EdgeMap, EdgeMethod, GrayImage

logger = get_logger()

# int16 derivative range handed to cv2.Canny
_DERIVATIVE_SCALE = 16000.0


def _mask_outside(
    values: np.ndarray, content_box: tuple[int, int, int, int], margin: int
) -> np.ndarray:
    x0, y0, x1, y1 = content_box
    height, width = values.shape
    if (x0, y0, x1, y1) == (0, 0, width, height):
        return values
    masked = np.zeros_like(values)
    masked[y0 + margin : y1 - margin, x0 + margin : x1 - margin] = values[
        y0 + margin : y1 - margin, x0 + margin : x1 - margin
    ]
    return masked


def detect_edges(
    image: GrayImage,
    config: Optional[EdgeConfig] = None,
    content_box: Optional[tuple[int, int, int, int]] = None,
) -> EdgeMap:
    """
    Extract edge evidence from a luminance image.

    Canny: Gaussian smoothing, Sobel gradients, non-maximum suppression along the gradient
    direction and double-threshold hysteresis. Kept pixels carry their gradient magnitude
    relative to the image maximum.

    Args:
        image: Input image
        config: Edge settings (defaults when omitted)
        content_box: Valid region of a letterboxed grid; evidence outside it is zeroed

    Returns:
        Edge map with strengths in [0, 1]
    """
    config = config or EdgeConfig()

    if config.method == EdgeMethod.INTENSITY:
        values = image.values.copy()
    else:
        values = _canny(image, config)

    if content_box is not None:
        values = _mask_outside(values, content_box, config.border_margin)
    return EdgeMap(values)


def _canny(image: GrayImage, config: EdgeConfig) -> np.ndarray:
    smoothed = cv2.GaussianBlur(
        image.values, (0, 0), sigmaX=config.sigma, borderType=cv2.BORDER_REPLICATE
    )
    gx = cv2.Sobel(smoothed, cv2.CV_64F, 1, 0, ksize=3, borderType=cv2.BORDER_REPLICATE)
    gy = cv2.Sobel(smoothed, cv2.CV_64F, 0, 1, ksize=3, borderType=cv2.BORDER_REPLICATE)
    magnitude = np.hypot(gx, gy)

    peak = float(magnitude.max())
    if peak <= 1e-9:
        return np.zeros_like(image.values)

    scale = _DERIVATIVE_SCALE / peak
    dx = np.round(gx * scale).astype(np.int16)
    dy = np.round(gy * scale).astype(np.int16)
    quantized = np.hypot(dx.astype(np.float64), dy.astype(np.float64))

    positive = quantized[quantized > 0]
    if positive.size == 0:
        return np.zeros_like(image.values)
    low, high = np.quantile(positive, [config.low_quantile, config.high_quantile])
    # Canny seeds on magnitudes strictly above high
    high = min(float(high), float(positive.max()) - 0.5)
    low = min(float(low), high)

    mask = cv2.Canny(dx, dy, float(low), float(high), L2gradient=True) > 0
    strengths = np.where(mask, quantized / quantized.max(), 0.0)

    logger.debug(
        "edges_detected",
        edge_pixels=int(mask.sum()),
        low=float(low),
        high=float(high),
    )
    return strengths
