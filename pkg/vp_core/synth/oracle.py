"""
Vanishing Point Oracle

Recovers family directions straight from segment endpoints, independent of the Hough and
lattice stages.
"""

import numpy as np
from numpy.typing import NDArray

from ..camera.models import CameraIntrinsics
from ..errors import DegenerateFamily
from .models import SceneTruth

_RANK_TOLERANCE = 1e-12


def oracle_vps(truth: SceneTruth, intrinsics: CameraIntrinsics) -> list[NDArray[np.float64]]:
    """
    One direction per family, as the smallest eigenvector of the family's normal scatter.

    Each segment's interpretation-plane normal is the cross product of its back-projected
    endpoints; the vanishing direction is the unit vector most orthogonal to all of them.

    Raises:
        DegenerateFamily: Fewer than two segments, or all normals parallel
    """
    inverse = np.linalg.inv(
        np.array(
            [
                [intrinsics.focal, 0.0, intrinsics.cx],
                [0.0, intrinsics.focal, intrinsics.cy],
                [0.0, 0.0, 1.0],
            ]
        )
    )

    directions = []
    for family in range(len(truth.directions)):
        segments = truth.family(family)
        if len(segments) < 2:
            raise DegenerateFamily(f"family {family} has {len(segments)} segment(s)")

        starts = np.array([[*s.start, 1.0] for s in segments]) @ inverse.T
        ends = np.array([[*s.end, 1.0] for s in segments]) @ inverse.T
        normals = np.cross(starts, ends)
        normals /= np.linalg.norm(normals, axis=1, keepdims=True)

        eigenvalues, eigenvectors = np.linalg.eigh(normals.T @ normals)
        if eigenvalues[1] <= _RANK_TOLERANCE * eigenvalues[2]:
            raise DegenerateFamily(f"family {family} lines all lie in one plane")

        vp = eigenvectors[:, 0]
        # canonical hemisphere: z, then y, then x positive
        for axis in (2, 1, 0):
            if vp[axis] != 0:
                vp = vp if vp[axis] > 0 else -vp
                break
        directions.append(vp)
    return directions
