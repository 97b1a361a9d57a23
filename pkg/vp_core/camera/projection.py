"""
Camera Projection

Conversions between pixels, camera rays, the (alpha, beta) chart and canonical hemisphere
representatives. All functions accept a single vector of shape (3,) or a stack (..., 3).
"""

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .models import CameraIntrinsics, SphericalCoord

Vec3 = NDArray[np.float64]

HALF_PI = np.pi / 2
POLE_TOLERANCE = 1e-12


def normalize(v: ArrayLike) -> Vec3:
    """Scale vectors to unit length; zero vectors are returned unchanged."""
    v = np.asarray(v, dtype=np.float64)
    norm = np.linalg.norm(v, axis=-1, keepdims=True)
    return np.divide(v, norm, out=np.zeros_like(v), where=norm > 0)


def lift_pixel(pixel: ArrayLike, intrinsics: CameraIntrinsics) -> Vec3:
    """
    Lift pixel coordinates to unit rays through the camera center.

    Args:
        pixel: (x, y) or a stack (..., 2) of pixel coordinates
        intrinsics: Camera intrinsics

    Returns:
        Unit rays normalize((x - cx, y - cy, f)), always with positive z
    """
    p = np.asarray(pixel, dtype=np.float64)
    rays = np.stack(
        [
            p[..., 0] - intrinsics.cx,
            p[..., 1] - intrinsics.cy,
            np.full(p.shape[:-1], intrinsics.focal),
        ],
        axis=-1,
    )
    return normalize(rays)


def sph_to_vec(azimuth: ArrayLike, elevation: ArrayLike) -> Vec3:
    """Unit vectors (cos b sin a, sin b, cos b cos a) for azimuth a and elevation b."""
    a = np.asarray(azimuth, dtype=np.float64)
    b = np.asarray(elevation, dtype=np.float64)
    cos_b = np.cos(b)
    return np.stack([cos_b * np.sin(a), np.sin(b), cos_b * np.cos(a)], axis=-1)


def vec_to_sph(v: ArrayLike) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """
    Chart coordinates of unit vectors, folded into alpha in [-pi/2, pi).

    Vectors whose natural azimuth falls outside the chart are represented by their antipode.
    Poles (y = +-1) return alpha = 0.

    Returns:
        Tuple of (azimuth, elevation) arrays
    """
    v = np.asarray(v, dtype=np.float64)
    x, y, z = v[..., 0], v[..., 1], v[..., 2]
    alpha = np.arctan2(x, z)
    beta = np.arcsin(np.clip(y, -1.0, 1.0))

    flip = (alpha < -HALF_PI) | (alpha >= np.pi)
    alpha = np.where(flip, np.arctan2(-x, -z), alpha)
    beta = np.where(flip, -beta, beta)

    pole = np.abs(y) >= 1.0 - POLE_TOLERANCE
    alpha = np.where(pole, 0.0, alpha)
    beta = np.where(pole, np.sign(y) * HALF_PI, beta)
    return alpha, beta


def to_spherical(v: ArrayLike) -> SphericalCoord:
    """Chart coordinates of a single unit vector as a validated model."""
    alpha, beta = vec_to_sph(v)
    return SphericalCoord(azimuth=float(alpha), elevation=float(beta))


def hemisphere_sign(v: ArrayLike) -> NDArray[np.float64]:
    """+1 where v satisfies the canonical hemisphere predicate, -1 where -v does."""
    v = np.asarray(v, dtype=np.float64)
    x, y, z = v[..., 0], v[..., 1], v[..., 2]
    return np.where(
        z > 0,
        1.0,
        np.where(
            z < 0,
            -1.0,
            np.where(y > 0, 1.0, np.where(y < 0, -1.0, np.where(x >= 0, 1.0, -1.0))),
        ),
    )


def canonicalize(v: ArrayLike) -> Vec3:
    """Representative of +-v on the canonical hemisphere (z, then y, then x positive)."""
    v = np.asarray(v, dtype=np.float64)
    return v * hemisphere_sign(v)[..., None]


def is_canonical(v: ArrayLike) -> NDArray[np.bool_]:
    """Hemisphere predicate: z > 0, or z = 0 and y > 0, or z = y = 0 and x > 0."""
    v = np.asarray(v, dtype=np.float64)
    x, y, z = v[..., 0], v[..., 1], v[..., 2]
    return (z > 0) | ((z == 0) & (y > 0)) | ((z == 0) & (y == 0) & (x > 0))


def angular_distance(a: ArrayLike, b: ArrayLike) -> NDArray[np.float64]:
    """Angle in radians between the lines spanned by a and b (antipodes are identical)."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    cross = np.linalg.norm(np.cross(a, b), axis=-1)
    dot = np.abs(np.sum(a * b, axis=-1))
    return np.arctan2(cross, dot)
