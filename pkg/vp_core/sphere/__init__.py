"""
Sphere Module

Fibonacci hemisphere lattices, line-to-great-circle geometry and the precomputed mapping
from Hough bins onto the lattice.
"""

from .cache import MappingCacheService, decode_mapping, encode_mapping, load_mapping, save_mapping
from .geometry import arc_samples, great_circle_elevation, line_normal, line_normals
from .lattice import (
    covering_radius,
    fibonacci_hemisphere,
    fibonacci_sphere,
    local_patch,
    nearest_points,
    sampled_covering_radius,
)
from .mapping import accumulate_field, bin_normals, build_mapping, epsilon, map_normals
from .models import (
    LatticeConfig,
    LatticeVariant,
    MappingConfig,
    MappingSampling,
    MappingTable,
    SphereField,
    SphereLattice,
)

__all__ = [
    "LatticeConfig",
    "LatticeVariant",
    "MappingCacheService",
    "MappingConfig",
    "MappingSampling",
    "MappingTable",
    "SphereField",
    "SphereLattice",
    "accumulate_field",
    "arc_samples",
    "bin_normals",
    "build_mapping",
    "covering_radius",
    "decode_mapping",
    "encode_mapping",
    "epsilon",
    "fibonacci_hemisphere",
    "fibonacci_sphere",
    "great_circle_elevation",
    "line_normal",
    "line_normals",
    "load_mapping",
    "local_patch",
    "map_normals",
    "nearest_points",
    "sampled_covering_radius",
    "save_mapping",
]
