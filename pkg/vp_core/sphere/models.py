"""
Sphere Data Models

Lattices on the canonical hemisphere, the Hough-to-sphere mapping table and vote fields.
"""

import hashlib
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from numpy.typing import NDArray
from pydantic import BaseModel, Field

from ..hough.models import HoughParams


class LatticeVariant(str, Enum):
    """How a full-sphere Fibonacci spiral is restricted to the hemisphere."""

    TRUNCATE = "truncate"  # keep the upper half of a 2N-point spiral
    FOLD = "fold"  # canonicalize an N-point spiral, drop collisions


class MappingSampling(str, Enum):
    """Sampling of each bin's great circle when building the mapping table."""

    AZIMUTH = "azimuth"  # m azimuths over [-pi/2, pi) through the elevation formula
    AZIMUTH_ARC = "azimuth_arc"  # azimuth samples plus m arc-length-uniform samples


class LatticeConfig(BaseModel):
    """Hemisphere lattice settings."""

    n_points: int = Field(default=32768, ge=1, description="Number of lattice points (N)")
    k: int = Field(default=16, ge=1, description="Neighbors per point in the k-NN graph")
    variant: LatticeVariant = Field(default=LatticeVariant.TRUNCATE)


class MappingConfig(BaseModel):
    """Mapping table settings."""

    m_samples: int = Field(default=1024, ge=2, description="Samples per great circle (M)")
    sampling: MappingSampling = Field(default=MappingSampling.AZIMUTH_ARC)


def _hash64(*parts: bytes) -> int:
    digest = hashlib.blake2b(digest_size=8)
    for part in parts:
        digest.update(part)
    return int.from_bytes(digest.digest(), "little")


@dataclass(frozen=True)
class SphereLattice:
    """
    Canonical unit vectors with a directed k-NN graph.

    Neighbors are measured by line angle, so a point near the hemisphere boundary has
    neighbors whose antipodes are close to it.
    """

    points: NDArray[np.float64]
    knn: NDArray[np.int64]
    variant: LatticeVariant = LatticeVariant.TRUNCATE
    collisions: int = 0

    def __post_init__(self) -> None:
        points = np.asarray(self.points, dtype=np.float64)
        knn = np.asarray(self.knn, dtype=np.int64)
        if points.ndim != 2 or points.shape[1] != 3:
            raise ValueError(f"points must have shape (N, 3), got {points.shape}")
        if knn.ndim != 2 or knn.shape[0] != points.shape[0]:
            raise ValueError(f"knn must have shape (N, k), got {knn.shape}")
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "knn", knn)

    @property
    def n_points(self) -> int:
        return int(self.points.shape[0])

    @property
    def k(self) -> int:
        return int(self.knn.shape[1])

    @property
    def spacing(self) -> float:
        """Characteristic spacing sqrt(2 pi / N) in radians."""
        return math.sqrt(2.0 * math.pi / self.n_points)

    def content_hash(self) -> int:
        return _hash64(
            np.ascontiguousarray(self.points).tobytes(),
            np.ascontiguousarray(self.knn).tobytes(),
            self.variant.value.encode(),
        )


@dataclass(frozen=True)
class MappingTable:
    """
    Per-bin lattice index lists in compressed row layout.

    Bin b = rho_idx * n_theta + theta_idx owns indices[offsets[b]:offsets[b + 1]], sorted
    and without duplicates.
    """

    hough_params: HoughParams
    intrinsics_hash: int
    n_points: int
    k: int
    lattice_hash: int
    m_samples: int
    sampling: MappingSampling
    eps_map: float
    offsets: NDArray[np.int64]
    indices: NDArray[np.int32]

    def __post_init__(self) -> None:
        offsets = np.asarray(self.offsets, dtype=np.int64)
        indices = np.asarray(self.indices, dtype=np.int32)
        if offsets.shape != (self.hough_params.n_bins + 1,):
            raise ValueError("offsets must hold one entry per bin plus one")
        if offsets[0] != 0 or offsets[-1] != indices.size or np.any(np.diff(offsets) < 0):
            raise ValueError("offsets are not a valid partition of indices")
        object.__setattr__(self, "offsets", offsets)
        object.__setattr__(self, "indices", indices)

    @property
    def counts(self) -> NDArray[np.int64]:
        return np.diff(self.offsets)

    def bin_index(self, rho_idx: int, theta_idx: int) -> int:
        return rho_idx * self.hough_params.n_theta + theta_idx

    def entry(self, rho_idx: int, theta_idx: int) -> NDArray[np.int32]:
        """Lattice indices mapped from one Hough bin."""
        b = self.bin_index(rho_idx, theta_idx)
        return self.indices[self.offsets[b] : self.offsets[b + 1]]

    def same_structure(self, other: "MappingTable") -> bool:
        """Field-by-field equality, arrays included."""
        return (
            self.hough_params == other.hough_params
            and self.intrinsics_hash == other.intrinsics_hash
            and self.n_points == other.n_points
            and self.k == other.k
            and self.lattice_hash == other.lattice_hash
            and self.m_samples == other.m_samples
            and self.sampling == other.sampling
            and self.eps_map == other.eps_map
            and np.array_equal(self.offsets, other.offsets)
            and np.array_equal(self.indices, other.indices)
        )


@dataclass(frozen=True)
class SphereField:
    """Non-negative score per lattice point."""

    lattice: SphereLattice
    values: NDArray[np.float64]

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64)
        if values.shape != (self.lattice.n_points,):
            raise ValueError(
                f"field has {values.shape} values for a lattice of {self.lattice.n_points}"
            )
        if not np.all(np.isfinite(values)) or (values.size and values.min() < 0):
            raise ValueError("field values must be finite and non-negative")
        object.__setattr__(self, "values", values)

    @property
    def total(self) -> float:
        return float(self.values.sum())

    def scaled(self, factor: float) -> "SphereField":
        return SphereField(self.lattice, self.values * factor)
