"""
Hough-to-Sphere Mapping

Precomputes, for every Hough bin, the lattice points on the great circle of the bin's line,
and accumulates Hough votes onto the lattice through that table.
"""

import math
import time
from typing import Optional

import numpy as np
from numpy.typing import NDArray
from scipy.spatial import cKDTree
from structlog import get_logger

from ..camera.models import CameraIntrinsics
from ..camera.projection import sph_to_vec
from ..errors import CacheMismatch, ParamsMismatch
from ..hough.models import HoughGrid, HoughParams
from .geometry import arc_samples, great_circle_elevation, line_normals
from .lattice import covering_radius
from .models import MappingConfig, MappingSampling, MappingTable, SphereField, SphereLattice

logger = get_logger()

# samples snapped per chunk
_CHUNK_SAMPLES = 1 << 21


def azimuth_samples(m: int) -> NDArray[np.float64]:
    """m azimuths uniform over [-pi/2, pi)."""
    return -math.pi / 2 + np.arange(m) * (1.5 * math.pi / m)


def circle_samples(
    normals: NDArray[np.float64], m: int, sampling: MappingSampling
) -> NDArray[np.float64]:
    """
    Points on the great circle of each normal.

    Returns:
        (B, S, 3) samples, S = m for AZIMUTH and 2m for AZIMUTH_ARC
    """
    alpha = azimuth_samples(m)
    beta = great_circle_elevation(alpha, normals[:, None, :])
    samples = sph_to_vec(np.broadcast_to(alpha, beta.shape), beta)
    if sampling == MappingSampling.AZIMUTH_ARC:
        samples = np.concatenate([samples, arc_samples(normals, m)], axis=1)
    return samples


def bin_normals(params: HoughParams, intrinsics: CameraIntrinsics) -> NDArray[np.float64]:
    """Plane normals of all bins in flat order rho_idx * n_theta + theta_idx."""
    rho, theta = np.meshgrid(params.rhos(), params.thetas(), indexing="ij")
    return line_normals(rho.ravel(), theta.ravel(), intrinsics)


def dedup_rows(rows: NDArray[np.int64]) -> tuple[NDArray[np.int64], NDArray[np.int64]]:
    """
    Sorted unique values of each row.

    Returns:
        Tuple of (per-row counts, concatenated unique values in row order)
    """
    if rows.shape[1] == 0:
        return np.zeros(rows.shape[0], dtype=np.int64), np.zeros(0, dtype=np.int64)
    ordered = np.sort(rows, axis=1)
    first = np.ones_like(ordered, dtype=bool)
    first[:, 1:] = ordered[:, 1:] != ordered[:, :-1]
    return first.sum(axis=1), ordered[first]


def map_normals(
    normals: NDArray[np.float64],
    lattice_points: NDArray[np.float64],
    m: int,
    sampling: MappingSampling,
) -> tuple[NDArray[np.int64], NDArray[np.int32]]:
    """
    Snap each normal's great circle onto its nearest lattice points.

    Returns:
        Tuple of (offsets, indices) in compressed row layout
    """
    n = lattice_points.shape[0]
    tree = cKDTree(np.vstack([lattice_points, -lattice_points]))
    per_bin = m * (2 if sampling == MappingSampling.AZIMUTH_ARC else 1)
    chunk = max(1, _CHUNK_SAMPLES // per_bin)

    counts = []
    indices = []
    for start in range(0, normals.shape[0], chunk):
        block = normals[start : start + chunk]
        samples = circle_samples(block, m, sampling)
        _, idx = tree.query(samples.reshape(-1, 3), k=1, workers=-1)
        row_counts, unique = dedup_rows(np.asarray(idx).reshape(block.shape[0], -1) % n)
        counts.append(row_counts)
        indices.append(unique.astype(np.int32))

    offsets = np.zeros(normals.shape[0] + 1, dtype=np.int64)
    if counts:
        offsets[1:] = np.cumsum(np.concatenate(counts))
    flat = np.concatenate(indices) if indices else np.zeros(0, dtype=np.int32)
    return offsets, flat


def epsilon(lattice: SphereLattice, m: int, radius: Optional[float] = None) -> float:
    """Incidence bound sin(covering radius) + pi / m of a mapping table."""
    radius = covering_radius(lattice.points) if radius is None else radius
    return math.sin(min(radius, math.pi / 2)) + math.pi / m


def build_mapping(
    params: HoughParams,
    lattice: SphereLattice,
    intrinsics: CameraIntrinsics,
    config: Optional[MappingConfig] = None,
) -> MappingTable:
    """
    Precompute the lattice indices hit by each Hough bin's great circle.

    For every bin the line normal is computed, its great circle is sampled (m azimuths
    through the elevation formula, plus m arc-uniform samples for AZIMUTH_ARC), each sample
    is assigned to the nearest lattice point by line angle and the indices are deduplicated.

    Args:
        params: Hough discretization
        lattice: Hemisphere lattice
        intrinsics: Camera intrinsics in grid pixel coordinates
        config: Sample count and sampling mode

    Returns:
        Deterministic mapping table
    """
    config = config or MappingConfig()
    started = time.perf_counter()

    normals = bin_normals(params, intrinsics)
    offsets, indices = map_normals(normals, lattice.points, config.m_samples, config.sampling)
    eps_map = epsilon(lattice, config.m_samples)

    table = MappingTable(
        hough_params=params,
        intrinsics_hash=intrinsics.content_hash(),
        n_points=lattice.n_points,
        k=lattice.k,
        lattice_hash=lattice.content_hash(),
        m_samples=config.m_samples,
        sampling=config.sampling,
        eps_map=eps_map,
        offsets=offsets,
        indices=indices,
    )
    logger.info(
        "mapping_built",
        bins=params.n_bins,
        entries=int(indices.size),
        eps_map=eps_map,
        elapsed_s=round(time.perf_counter() - started, 3),
    )
    return table


def accumulate_field(grid: HoughGrid, table: MappingTable, lattice: SphereLattice) -> SphereField:
    """
    Add each bin's votes to every lattice point in its entry list.

    Raises:
        ParamsMismatch: Grid and table were built for different Hough parameters, or the
            lattice size differs from the one the table indexes
        CacheMismatch: Table was built for another lattice of the same size
    """
    if grid.params != table.hough_params:
        raise ParamsMismatch(f"grid params {grid.params} != table params {table.hough_params}")
    if lattice.n_points != table.n_points:
        raise ParamsMismatch(
            f"lattice has {lattice.n_points} points, table expects {table.n_points}"
        )
    if lattice.content_hash() != table.lattice_hash:
        raise CacheMismatch("table was built for a different lattice")

    votes = grid.votes.ravel()
    per_entry = np.repeat(votes, table.counts)
    active = per_entry > 0
    values = np.bincount(
        table.indices[active], weights=per_entry[active], minlength=table.n_points
    )
    return SphereField(lattice, values)
