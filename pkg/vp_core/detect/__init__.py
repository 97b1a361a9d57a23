"""
Detect Module

Scoring of sphere fields into ranked vanishing points:
- k-NN smoothing and density clustering
- Manhattan triple selection and frame snapping
- Coarse-to-fine refinement on local Fibonacci patches
- Line-to-vanishing-point assignment for overlays
"""

from .assignment import LineAssignment, assign_lines, render_overlay
from .clustering import cluster_field, sphere_nms
from .manhattan import ManhattanTriple, nearest_orthonormal_frame, select_manhattan_triple
from .models import (
    DEFAULT_SCALES,
    ClusterConfig,
    Detection,
    DetectionMode,
    DetectorConfig,
    ScaleSpec,
    VanishingPoint,
)
from .multiscale import (
    Refinement,
    grid_lines,
    hemisphere_candidates,
    polish_candidates,
    refine_multiscale,
)
from .smoothing import smooth_field

__all__ = [
    "DEFAULT_SCALES",
    "ClusterConfig",
    "Detection",
    "DetectionMode",
    "DetectorConfig",
    "LineAssignment",
    "ManhattanTriple",
    "Refinement",
    "ScaleSpec",
    "VanishingPoint",
    "assign_lines",
    "cluster_field",
    "grid_lines",
    "hemisphere_candidates",
    "nearest_orthonormal_frame",
    "polish_candidates",
    "refine_multiscale",
    "render_overlay",
    "select_manhattan_triple",
    "smooth_field",
    "sphere_nms",
]
