"""
Imaging Data Models

Luminance images, edge evidence maps and the edge extraction configuration.
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np
from numpy.typing import NDArray
from pydantic import BaseModel, Field, model_validator


@dataclass(frozen=True)
class GrayImage:
    """Row-major luminance image with values in [0, 1]."""

    values: NDArray[np.float64]

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise ValueError(f"GrayImage expects a 2D array, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("GrayImage values must be finite")
        if values.size and (values.min() < 0.0 or values.max() > 1.0):
            raise ValueError("GrayImage values must lie in [0, 1]")
        object.__setattr__(self, "values", values)

    @property
    def width(self) -> int:
        return int(self.values.shape[1])

    @property
    def height(self) -> int:
        return int(self.values.shape[0])


@dataclass(frozen=True)
class EdgeMap:
    """Non-negative edge evidence in [0, 1]; the feature map the Hough transform consumes."""

    values: NDArray[np.float64]

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise ValueError(f"EdgeMap expects a 2D array, got shape {values.shape}")
        if values.size and values.min() < 0.0:
            raise ValueError("EdgeMap values must be non-negative")
        object.__setattr__(self, "values", values)

    @property
    def width(self) -> int:
        return int(self.values.shape[1])

    @property
    def height(self) -> int:
        return int(self.values.shape[0])


@dataclass(frozen=True)
class GridTransform:
    """
    Mapping from source pixel coordinates to the working grid.

    grid = source * scale + (offset_x, offset_y); the resized content occupies the
    half-open pixel box [x0, x1) x [y0, y1) of the grid.
    """

    scale: float
    offset_x: float
    offset_y: float
    content_box: tuple[int, int, int, int]


class EdgeMethod(str, Enum):
    """Evidence extractor."""

    CANNY = "canny"
    INTENSITY = "intensity"  # luminance used as-is, for line drawings


class EdgeConfig(BaseModel):
    """
    Edge extraction settings.

    Thresholds are quantiles of the positive gradient magnitudes, which makes the detector
    invariant to global affine intensity changes.
    """

    method: EdgeMethod = Field(default=EdgeMethod.CANNY)
    sigma: float = Field(default=1.4, gt=0.0, description="Gaussian pre-smoothing in pixels")
    low_quantile: float = Field(default=0.7, ge=0.0, le=1.0)
    high_quantile: float = Field(default=0.9, ge=0.0, le=1.0)
    border_margin: int = Field(
        default=2, ge=0, description="Pixels zeroed inside the content box edge of letterboxed grids"
    )

    @model_validator(mode="after")
    def validate_thresholds(self) -> "EdgeConfig":
        """Ensure low <= high."""
        if self.low_quantile > self.high_quantile:
            raise ValueError("low_quantile must not exceed high_quantile")
        return self
