"""
Hough Module

Discrete Hough transform of edge evidence and peak filtering.
"""

from .models import HoughGrid, HoughParams
from .transform import (
    bin_to_line,
    grid_heatmap,
    hough_accumulate,
    hough_filter,
    hough_peaks,
    pixel_centers,
    rasterize_line,
    rho_bin,
)

__all__ = [
    "HoughGrid",
    "HoughParams",
    "bin_to_line",
    "grid_heatmap",
    "hough_accumulate",
    "hough_filter",
    "hough_peaks",
    "pixel_centers",
    "rasterize_line",
    "rho_bin",
]
