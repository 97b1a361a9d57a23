"""
Line Geometry on the Gaussian Sphere

An image line and the camera center span a plane; its normal identifies the line, and the
great circle orthogonal to the normal holds every vanishing direction the line can point to.
"""

import numpy as np
from numpy.typing import ArrayLike, NDArray

from ..camera.models import CameraIntrinsics
from ..camera.projection import HALF_PI, POLE_TOLERANCE, canonicalize, lift_pixel, normalize
from ..errors import DegenerateLine

_PARALLEL_TOLERANCE = 1e-15


def line_endpoints(
    rho: ArrayLike, theta: ArrayLike, intrinsics: CameraIntrinsics
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """
    Two distinct pixel positions on each line x cos(theta) + y sin(theta) = rho.

    (x, y) is measured from the image center; the returned points are in image pixel
    coordinates, half the image diagonal away from the foot of the perpendicular.
    """
    rho = np.asarray(rho, dtype=np.float64)
    theta = np.asarray(theta, dtype=np.float64)
    cos_t, sin_t = np.cos(theta), np.sin(theta)
    reach = 0.5 * np.hypot(intrinsics.width, intrinsics.height)
    center_x = intrinsics.width / 2.0
    center_y = intrinsics.height / 2.0
    foot_x = rho * cos_t + center_x
    foot_y = rho * sin_t + center_y
    a = np.stack([foot_x - reach * sin_t, foot_y + reach * cos_t], axis=-1)
    b = np.stack([foot_x + reach * sin_t, foot_y - reach * cos_t], axis=-1)
    return a, b


def line_normals(
    rho: ArrayLike, theta: ArrayLike, intrinsics: CameraIntrinsics
) -> NDArray[np.float64]:
    """Canonical unit normals of the interpretation planes of many lines at once."""
    a, b = line_endpoints(rho, theta, intrinsics)
    cross = np.cross(lift_pixel(a, intrinsics), lift_pixel(b, intrinsics))
    if np.any(np.linalg.norm(cross, axis=-1) < _PARALLEL_TOLERANCE):
        raise DegenerateLine("line endpoints lift to parallel rays")
    return canonicalize(normalize(cross))


def line_normal(rho: float, theta: float, intrinsics: CameraIntrinsics) -> NDArray[np.float64]:
    """
    Normal of the plane through the camera center and an image line.

    Args:
        rho: Signed offset of the line from the image center in pixels
        theta: Angle of the line normal in the image, radians
        intrinsics: Camera intrinsics in the same pixel frame as the line

    Returns:
        Canonical unit normal

    Raises:
        DegenerateLine: The two lifted line points are parallel rays
    """
    return line_normals(rho, theta, intrinsics)


def great_circle_elevation(alpha: ArrayLike, normal: ArrayLike) -> NDArray[np.float64]:
    """
    Elevation of the point at azimuth alpha on the great circle orthogonal to normal.

    Solves n . (cos b sin a, sin b, cos b cos a) = 0 with a two-argument arctangent, so
    b lies in [-pi/2, pi/2]. When n_y vanishes the circle passes through the poles and the
    result is +-pi/2 by the sign of the numerator (pi/2 when it is zero too).
    """
    alpha = np.asarray(alpha, dtype=np.float64)
    n = np.asarray(normal, dtype=np.float64)
    nx, ny, nz = n[..., 0], n[..., 1], n[..., 2]
    numerator = -nx * np.sin(alpha) - nz * np.cos(alpha)
    denominator = np.broadcast_to(ny, numerator.shape)

    flip = denominator < 0
    numerator = np.where(flip, -numerator, numerator)
    denominator = np.where(flip, -denominator, denominator)

    beta = np.arctan2(numerator, denominator)
    pole = np.abs(denominator) < POLE_TOLERANCE
    pole_beta = np.where(numerator < 0, -HALF_PI, HALF_PI)
    return np.where(pole, pole_beta, beta)


def circle_basis(normal: ArrayLike) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Orthonormal (u, w) spanning the great circle orthogonal to each normal."""
    n = np.asarray(normal, dtype=np.float64)
    helper = np.zeros_like(n)
    axis = np.argmin(np.abs(n), axis=-1)
    np.put_along_axis(helper, axis[..., None], 1.0, axis=-1)
    u = normalize(np.cross(n, helper))
    return u, np.cross(n, u)


def arc_samples(normal: ArrayLike, m: int) -> NDArray[np.float64]:
    """m points spaced pi / m apart along each great circle (half a turn covers every line)."""
    u, w = circle_basis(normal)
    t = np.arange(m) * (np.pi / m)
    return np.cos(t)[:, None] * u[..., None, :] + np.sin(t)[:, None] * w[..., None, :]
