"""
Imaging Module

Image ingestion, grid resampling and edge evidence extraction.
"""

from .edges import detect_edges
from .io import grid_transform, load_image, quantize_8bit, resize_to_grid, save_image
from .models import EdgeConfig, EdgeMap, EdgeMethod, GrayImage, GridTransform

__all__ = [
    "EdgeConfig",
    "EdgeMap",
    "EdgeMethod",
    "GrayImage",
    "GridTransform",
    "detect_edges",
    "grid_transform",
    "load_image",
    "quantize_8bit",
    "resize_to_grid",
    "save_image",
]
