"""
Camera Module

Pinhole intrinsics and Gaussian sphere coordinate conversions.
"""

from .models import CameraDefaults, CameraIntrinsics, FocalSource, SphericalCoord
from .projection import (
    angular_distance,
    canonicalize,
    hemisphere_sign,
    is_canonical,
    lift_pixel,
    normalize,
    sph_to_vec,
    to_spherical,
    vec_to_sph,
)

__all__ = [
    "CameraDefaults",
    "CameraIntrinsics",
    "FocalSource",
    "SphericalCoord",
    "angular_distance",
    "canonicalize",
    "hemisphere_sign",
    "is_canonical",
    "lift_pixel",
    "normalize",
    "sph_to_vec",
    "to_spherical",
    "vec_to_sph",
]
