"""
Fibonacci Lattices

Hemisphere lattices with antipodally aware k-NN graphs, covering radius measurement and
local cap patches for multi-scale refinement.
"""

import math

import numpy as np
from numpy.typing import NDArray
from scipy.spatial import QhullError, SphericalVoronoi, cKDTree
from sklearn.neighbors import NearestNeighbors
from structlog import get_logger

from ..camera.projection import canonicalize, normalize
from ..errors import EmptyPatch, InvalidCount
from .models import LatticeVariant, SphereLattice

logger = get_logger()

GOLDEN_ANGLE = math.pi * (3.0 - math.sqrt(5.0))

# samples used when the Voronoi construction is unavailable
_FALLBACK_SAMPLES = 200_000


def fibonacci_sphere(n: int) -> NDArray[np.float64]:
    """
    n points of the spherical Fibonacci spiral over the full sphere.

    Point i has z = 1 - (2i + 1) / n and longitude i times the golden angle, which gives
    equal-area bands and near-uniform spacing.
    """
    i = np.arange(n, dtype=np.float64)
    z = 1.0 - (2.0 * i + 1.0) / n
    r = np.sqrt(np.clip(1.0 - z * z, 0.0, None))
    phi = i * GOLDEN_ANGLE
    return np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=-1)


def build_knn(points: NDArray[np.float64], k: int) -> NDArray[np.int64]:
    """
    Directed k-NN graph under line angle.

    Neighbors are searched among the points and their antipodes; an antipode reports the
    index of its source point.
    """
    n = points.shape[0]
    k = min(k, n - 1)
    if k <= 0:
        return np.zeros((n, 0), dtype=np.int64)

    symmetric = np.vstack([points, -points])
    nn = NearestNeighbors(n_neighbors=k + 1).fit(symmetric)
    _, idx = nn.kneighbors(points)
    idx = idx % n
    # drop the self match wherever it landed, keeping distance order
    is_self = idx == np.arange(n)[:, None]
    order = np.argsort(is_self, axis=1, kind="stable")[:, :k]
    return np.take_along_axis(idx, order, axis=1).astype(np.int64)


def fibonacci_hemisphere(
    n: int, k: int = 16, variant: LatticeVariant = LatticeVariant.TRUNCATE
) -> SphereLattice:
    """
    Fibonacci lattice on the canonical hemisphere.

    Args:
        n: Number of points requested
        k: Neighbors per point in the k-NN graph (capped at n - 1)
        variant: TRUNCATE keeps the z > 0 half of a 2n-point spiral (exactly n points);
            FOLD canonicalizes an n-point spiral and drops coincident points

    Returns:
        Lattice with its k-NN graph

    Raises:
        InvalidCount: n < 1
    """
    if n < 1:
        raise InvalidCount(f"lattice needs at least one point, got {n}")

    collisions = 0
    if variant == LatticeVariant.TRUNCATE:
        points = fibonacci_sphere(2 * n)[:n]
    else:
        folded = canonicalize(fibonacci_sphere(n))
        rounded = np.round(folded, 12)
        _, first = np.unique(rounded, axis=0, return_index=True)
        first.sort()
        points = folded[first]
        collisions = n - points.shape[0]

    lattice = SphereLattice(
        points=points, knn=build_knn(points, k), variant=variant, collisions=collisions
    )
    logger.debug(
        "lattice_built",
        n_points=lattice.n_points,
        k=lattice.k,
        variant=variant.value,
        collisions=collisions,
    )
    return lattice


def _chord_to_angle(chord: NDArray[np.float64]) -> NDArray[np.float64]:
    return 2.0 * np.arcsin(np.clip(chord / 2.0, 0.0, 1.0))


def covering_radius(points: NDArray[np.float64]) -> float:
    """
    Largest line angle from any direction to its nearest lattice point.

    The maximum is attained at a vertex of the spherical Voronoi diagram of the points and
    their antipodes. Small or degenerate sets fall back to a dense random sample.

    Args:
        points: (N, 3) unit vectors

    Returns:
        Covering radius in radians (pi / 2 for a single point)
    """
    points = np.asarray(points, dtype=np.float64)
    n = points.shape[0]
    if n == 1:
        return math.pi / 2

    symmetric = np.vstack([points, -points])
    tree = cKDTree(symmetric)
    try:
        if n < 3:
            raise QhullError("too few points")
        voronoi = SphericalVoronoi(symmetric, radius=1.0, center=np.zeros(3))
        samples = voronoi.vertices
    except (QhullError, ValueError):
        rng = np.random.default_rng(0)
        samples = normalize(rng.normal(size=(_FALLBACK_SAMPLES, 3)))

    chord, _ = tree.query(samples, k=1)
    return float(_chord_to_angle(chord).max())


def sampled_covering_radius(points: NDArray[np.float64], samples: int, seed: int = 0) -> float:
    """Covering radius estimated from random unit directions (a lower bound)."""
    symmetric = np.vstack([points, -points])
    rng = np.random.default_rng(seed)
    chord, _ = cKDTree(symmetric).query(normalize(rng.normal(size=(samples, 3))), k=1)
    return float(_chord_to_angle(chord).max())


def nearest_points(
    lattice_points: NDArray[np.float64], directions: NDArray[np.float64]
) -> NDArray[np.int64]:
    """Index of the lattice point closest in line angle to each direction."""
    n = lattice_points.shape[0]
    tree = cKDTree(np.vstack([lattice_points, -lattice_points]))
    _, idx = tree.query(directions, k=1, workers=-1)
    return np.asarray(idx, dtype=np.int64) % n


def _tangent_basis(axis: NDArray[np.float64]) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    helper = np.eye(3)[int(np.argmin(np.abs(axis)))]
    u = normalize(np.cross(axis, helper))
    return u, np.cross(axis, u)


def cap_spacing(delta: float, n: int) -> float:
    """Characteristic spacing sqrt(area / n) of n points on a cap of angular radius delta."""
    return math.sqrt(2.0 * math.pi * (1.0 - math.cos(delta)) / n)


def local_patch(anchor: NDArray[np.float64], delta: float, n: int) -> NDArray[np.float64]:
    """
    Fibonacci sampling of the cap of angular radius delta around an anchor.

    Row 0 is the anchor itself, the remaining n - 1 points follow an equal-area spiral over
    the cap. All points are canonicalized.

    Raises:
        EmptyPatch: Cap too small to hold n distinct points
    """
    if n < 1 or delta <= 0 or cap_spacing(delta, n) < 1e-9:
        raise EmptyPatch(f"cap of radius {delta:.3g} rad cannot hold {n} points")

    anchor = normalize(anchor)
    i = np.arange(n - 1, dtype=np.float64)
    z = 1.0 - (1.0 - math.cos(delta)) * (i + 0.5) / max(n - 1, 1)
    r = np.sqrt(np.clip(1.0 - z * z, 0.0, None))
    phi = i * GOLDEN_ANGLE
    u, v = _tangent_basis(anchor)
    spiral = (
        (r * np.cos(phi))[:, None] * u
        + (r * np.sin(phi))[:, None] * v
        + z[:, None] * anchor
    )
    return canonicalize(np.vstack([anchor[None, :], spiral]))
