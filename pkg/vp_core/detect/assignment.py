"""
Line Assignment

Labels filtered Hough lines with the vanishing point their great circle passes closest to,
and draws the labelled line bundles over the source image.
"""

import math
from dataclasses import dataclass

import cv2
import numpy as np
from numpy.typing import NDArray

from ..camera.models import CameraIntrinsics
from ..hough.models import HoughGrid
from ..imaging.models import GrayImage, GridTransform
from ..sphere.geometry import line_endpoints
from .models import VanishingPoint
from .multiscale import grid_lines

UNASSIGNED = -1

# BGR colors per vanishing point index
PALETTE = [
    (60, 60, 230),
    (60, 200, 60),
    (230, 120, 40),
    (40, 200, 230),
    (200, 60, 200),
    (200, 200, 60),
]


@dataclass(frozen=True)
class LineAssignment:
    """Active bins with their assigned vanishing point index (or UNASSIGNED)."""

    rho_idx: NDArray[np.int64]
    theta_idx: NDArray[np.int64]
    labels: NDArray[np.int64]
    residuals: NDArray[np.float64]


def assign_lines(
    grid: HoughGrid,
    intrinsics: CameraIntrinsics,
    vps: list[VanishingPoint],
    max_residual_deg: float = 2.0,
) -> LineAssignment:
    """
    Assign each active bin to the vanishing point nearest its great circle.

    The residual of a line for direction d is the angle between d and the line's
    great circle, asin |n . d|. Lines farther than max_residual_deg from every point stay
    unassigned.
    """
    active = grid.active_bins()
    rho_idx, theta_idx = np.divmod(active, grid.params.n_theta)
    lines = grid_lines(grid, intrinsics)
    if not vps or active.size == 0:
        return LineAssignment(
            rho_idx, theta_idx, np.full(active.size, UNASSIGNED), np.full(active.size, np.inf)
        )

    directions = np.array([vp.vector for vp in vps])
    residual = np.arcsin(np.clip(np.abs(lines.normals @ directions.T), 0.0, 1.0))
    labels = np.argmin(residual, axis=1)
    best = residual[np.arange(active.size), labels]
    labels = np.where(best <= math.radians(max_residual_deg), labels, UNASSIGNED)
    return LineAssignment(rho_idx, theta_idx, labels, best)


def render_overlay(
    image: GrayImage,
    transform: GridTransform,
    grid: HoughGrid,
    intrinsics: CameraIntrinsics,
    assignment: LineAssignment,
) -> NDArray[np.float64]:
    """
    Color image (BGR, [0, 1]) with each assigned line drawn in its vanishing point's color.

    Lines are mapped from grid coordinates back to source pixels through the grid transform.
    """
    canvas = cv2.cvtColor((image.values * 255).astype(np.uint8), cv2.COLOR_GRAY2BGR)
    params = grid.params
    for rho_idx, theta_idx, label in zip(
        assignment.rho_idx, assignment.theta_idx, assignment.labels
    ):
        if label == UNASSIGNED:
            continue
        a, b = line_endpoints(params.rhos()[rho_idx], params.thetas()[theta_idx], intrinsics)
        start = (a - (transform.offset_x, transform.offset_y)) / transform.scale
        end = (b - (transform.offset_x, transform.offset_y)) / transform.scale
        cv2.line(
            canvas,
            (int(round(start[0])), int(round(start[1]))),
            (int(round(end[0])), int(round(end[1]))),
            PALETTE[int(label) % len(PALETTE)],
            1,
            cv2.LINE_AA,
        )
    return canvas.astype(np.float64) / 255.0
