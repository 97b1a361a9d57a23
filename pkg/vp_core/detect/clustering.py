"""
Field Clustering

Turns a scored sphere field into ranked vanishing point candidates, either by density
clustering under the cosine distance or by non-maximum suppression on the lattice.
"""

from typing import Optional

import numpy as np
from numpy.typing import NDArray
from sklearn.cluster import DBSCAN
from structlog import get_logger

from ..sphere.models import SphereField
from .models import ClusterConfig, VanishingPoint

logger = get_logger()

# cap on points entering the pairwise distance matrix
MAX_PARTICIPANTS = 4096


def cosine_distance_matrix(points: NDArray[np.float64]) -> NDArray[np.float64]:
    """Pairwise 1 - |p . q|, identifying antipodes."""
    return np.clip(1.0 - np.abs(points @ points.T), 0.0, None)


def rank_order(values: NDArray[np.float64], indices: NDArray[np.int64]) -> NDArray[np.int64]:
    """Indices sorted by descending value, lower index first on ties."""
    return indices[np.lexsort((indices, -values[indices]))]


def local_maxima(field: SphereField, candidates: NDArray[np.int64]) -> NDArray[np.int64]:
    """Candidates whose value is not exceeded by any k-NN neighbor."""
    values = field.values
    knn = field.lattice.knn
    if knn.shape[1] == 0:
        return candidates
    neighbor_max = values[knn[candidates]].max(axis=1)
    return candidates[values[candidates] >= neighbor_max]


def separate(
    points: NDArray[np.float64],
    ordered: NDArray[np.int64],
    radius: float,
    top: Optional[int] = None,
) -> list[int]:
    """
    Greedy selection in the given order, skipping anything within radius of a kept point.

    Distances are line angles, so antipodes count as the same direction.
    """
    kept: list[int] = []
    min_cos = np.cos(radius)
    for idx in ordered:
        if top is not None and len(kept) >= top:
            break
        if kept and np.any(np.abs(points[kept] @ points[idx]) >= min_cos):
            continue
        kept.append(int(idx))
    return kept


def _participants(values: NDArray[np.float64], threshold: float) -> NDArray[np.int64]:
    cutoff = np.quantile(values, threshold)
    chosen = np.flatnonzero(values > cutoff)
    if chosen.size == 0:
        chosen = np.flatnonzero((values >= cutoff) & (values > 0))
    if chosen.size > MAX_PARTICIPANTS:
        chosen = np.sort(rank_order(values, chosen)[:MAX_PARTICIPANTS])
    return chosen


def cluster_field(
    field: SphereField, config: Optional[ClusterConfig] = None, threshold: float = 0.98
) -> list[VanishingPoint]:
    """
    Density-cluster the high-scoring lattice points and emit one direction per cluster.

    Points above the `threshold` score quantile are clustered by DBSCAN with the
    neighborhood 1 - |p . q| <= eps. A participant with no other participant in its
    neighborhood forms a cluster of its own; the remaining noise points (too few neighbors
    to be a core point, none of them a core point) are dropped. Each cluster contributes its
    highest-scoring point, and with split_peaks also every other local maximum that is
    farther than the merge radius from a stronger emitted point.

    Args:
        field: Scored lattice
        config: Clustering settings
        threshold: Score quantile that gates participation

    Returns:
        Vanishing points sorted by descending confidence, pairwise farther apart than the
        merge radius
    """
    config = config or ClusterConfig()
    values = field.values
    points = field.lattice.points
    if values.size == 0 or values.max() <= 0:
        return []

    chosen = _participants(values, threshold)
    if chosen.size == 0:
        return []

    distances = cosine_distance_matrix(points[chosen])
    labels = DBSCAN(
        eps=config.eps, min_samples=config.min_points, metric="precomputed"
    ).fit(distances).labels_
    # a participant with no other participant in its neighborhood is its own cluster
    isolated = (labels < 0) & ((distances <= config.eps).sum(axis=1) == 1)
    labels[isolated] = labels.max() + 1 + np.arange(np.count_nonzero(isolated))

    representatives: list[int] = []
    cluster_ids = np.unique(labels[labels >= 0])
    for label in cluster_ids:
        members = chosen[labels == label]
        if config.split_peaks:
            representatives.extend(local_maxima(field, members).tolist())
        # ties resolve to the lowest index since members are ascending
        representatives.append(int(members[np.argmax(values[members])]))

    if not representatives:
        logger.debug("clusters_empty", participants=int(chosen.size))
        return []

    ordered = rank_order(values, np.unique(np.asarray(representatives, dtype=np.int64)))
    kept = separate(points, ordered, config.merge_radius)
    logger.debug(
        "field_clustered",
        participants=int(chosen.size),
        clusters=int(cluster_ids.size),
        emitted=len(kept),
    )
    return [VanishingPoint.from_vector(points[i], float(values[i])) for i in kept]


def sphere_nms(
    field: SphereField, radius: float, top: Optional[int] = None
) -> list[VanishingPoint]:
    """
    Non-maximum suppression on the lattice.

    Local maxima of the k-NN graph are visited by descending score and kept when no
    stronger kept point lies within radius.

    Args:
        field: Scored lattice
        radius: Suppression radius in radians
        top: Maximum number of points returned

    Returns:
        Vanishing points sorted by descending confidence
    """
    values = field.values
    positive = np.flatnonzero(values > 0)
    if positive.size == 0:
        return []
    peaks = local_maxima(field, positive)
    kept = separate(field.lattice.points, rank_order(values, peaks), radius, top)
    return [VanishingPoint.from_vector(field.lattice.points[i], float(values[i])) for i in kept]
