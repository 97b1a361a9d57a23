"""
Multi-Scale Refinement

Re-votes the filtered Hough lines onto successively smaller point sets around each anchor
and moves every anchor to the best-scoring point of its region.
"""

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from numpy.typing import NDArray
from scipy.spatial import cKDTree
from structlog import get_logger

from ..camera.models import CameraIntrinsics
from ..camera.projection import canonicalize, normalize
from ..errors import EmptyPatch, ParamsMismatch
from ..hough.models import HoughGrid
from ..sphere.geometry import circle_basis, line_normals
from ..sphere.lattice import build_knn, cap_spacing, fibonacci_sphere, local_patch
from ..sphere.mapping import dedup_rows
from ..sphere.models import LatticeVariant, SphereField, SphereLattice
from .clustering import separate, sphere_nms
from .manhattan import nearest_orthonormal_frame
from .models import ScaleSpec, VanishingPoint

logger = get_logger()


@dataclass(frozen=True)
class LineSet:
    """Plane normals and vote weights of the active bins of a Hough grid."""

    normals: NDArray[np.float64]
    weights: NDArray[np.float64]


@dataclass(frozen=True)
class Refinement:
    """Refined directions, their unsnapped versions and the per-scale anchor trace."""

    vps: list[VanishingPoint]
    raw_vps: list[VanishingPoint]
    trace: list[NDArray[np.float64]] = field(default_factory=list)


def grid_lines(grid: HoughGrid, intrinsics: CameraIntrinsics) -> LineSet:
    """
    Lines of all bins with positive votes.

    Raises:
        ParamsMismatch: Intrinsics are not expressed on the Hough grid
    """
    side = grid.params.grid_side
    if intrinsics.width != side or intrinsics.height != side:
        raise ParamsMismatch(
            f"intrinsics are {intrinsics.width}x{intrinsics.height}, grid is {side}x{side}"
        )
    active = grid.active_bins()
    rho_idx, theta_idx = np.divmod(active, grid.params.n_theta)
    normals = line_normals(
        grid.params.rhos()[rho_idx], grid.params.thetas()[theta_idx], intrinsics
    )
    return LineSet(normals=normals.reshape(-1, 3), weights=grid.votes.ravel()[active])


def vote_points(
    lines: LineSet,
    points: NDArray[np.float64],
    spacing: float,
    anchor: Optional[NDArray[np.float64]] = None,
    reach: float = math.pi / 2,
) -> NDArray[np.float64]:
    """
    Score points by the lines whose great circles pass within `spacing` of them.

    Each circle is sampled every spacing / 2 along the arc within `reach` of the anchor
    (the whole circle without an anchor); samples snap to their nearest point and each line
    votes at most once per point. With an anchor, the circle sample closest to it is always
    included, so a point exactly on a circle is hit by that circle.
    """
    scores = np.zeros(points.shape[0])
    if lines.weights.size == 0 or points.shape[0] == 0:
        return scores

    normals, weights = lines.normals, lines.weights
    if anchor is None:
        start, ahead = circle_basis(normals)
        t = np.arange(math.ceil(math.pi / (spacing / 2))) * (spacing / 2)
    else:
        incidence = np.abs(normals @ anchor)
        near = np.arcsin(np.clip(incidence, 0.0, 1.0)) <= reach
        normals, weights = normals[near], weights[near]
        if weights.size == 0:
            return scores
        # point of each circle closest to the anchor
        start = anchor - (normals @ anchor)[:, None] * normals
        flat = np.linalg.norm(start, axis=1) < 1e-9
        if np.any(flat):
            start[flat] = circle_basis(normals[flat])[0]
        start = normalize(start)
        ahead = np.cross(normals, start)
        steps = math.ceil(min(reach, math.pi / 2) / (spacing / 2))
        t = np.arange(-steps, steps + 1) * (spacing / 2)

    samples = np.cos(t)[:, None] * start[:, None, :] + np.sin(t)[:, None] * ahead[:, None, :]
    n = points.shape[0]
    tree = cKDTree(np.vstack([points, -points]))
    chord, idx = tree.query(samples.reshape(-1, 3), k=1)
    idx = np.asarray(idx).reshape(samples.shape[:2]) % n
    gated = 2.0 * np.arcsin(np.clip(chord.reshape(samples.shape[:2]) / 2.0, 0.0, 1.0)) > spacing
    # out-of-gate samples point at a sentinel column dropped after dedup
    idx = np.where(gated, n, idx)

    counts, unique = dedup_rows(idx)
    per_entry = np.repeat(weights, counts)
    keep = unique < n
    return np.bincount(unique[keep], weights=per_entry[keep], minlength=n)[:n]


def hemisphere_points(n: int) -> NDArray[np.float64]:
    return fibonacci_sphere(2 * n)[:n]


def _hemispheric_step(
    lines: LineSet, anchors: NDArray[np.float64], scale: ScaleSpec
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    points = np.vstack([anchors, hemisphere_points(scale.n_points)])
    spacing = math.sqrt(2.0 * math.pi / scale.n_points)
    scores = vote_points(lines, points, spacing)
    # anchors are their own region's lowest index, so they win ties
    region = np.argmax(np.abs(points @ anchors.T), axis=1)
    chosen = np.empty(len(anchors), dtype=np.int64)
    for r in range(len(anchors)):
        members = np.flatnonzero(region == r)
        chosen[r] = members[np.argmax(scores[members])]
    return canonicalize(points[chosen]), scores[chosen]


def _local_step(
    lines: LineSet, anchors: NDArray[np.float64], confidences: NDArray[np.float64], scale: ScaleSpec
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    moved = anchors.copy()
    scores_out = confidences.copy()
    for r, anchor in enumerate(anchors):
        try:
            patch = local_patch(anchor, scale.delta, scale.n_points)
        except EmptyPatch as e:
            logger.warning("refinement_patch_empty", scale=scale.delta_deg, error=str(e))
            continue
        spacing = cap_spacing(scale.delta, scale.n_points)
        scores = vote_points(lines, patch, spacing, anchor=anchor, reach=scale.delta + spacing)
        best = int(np.argmax(scores))
        moved[r] = patch[best]
        scores_out[r] = scores[best]
    return moved, scores_out


def refine_multiscale(
    anchors: list[VanishingPoint],
    grid: HoughGrid,
    intrinsics: CameraIntrinsics,
    scales: list[ScaleSpec],
    snap: bool = False,
) -> Refinement:
    """
    Coarse-to-fine refinement of anchor directions.

    A hemispheric scale (delta close to 90 degrees) votes onto a hemisphere lattice of n
    points partitioned among the anchors; a local scale votes onto an n-point cap of radius
    delta around each anchor, with the anchor itself as the first cap point. Every anchor
    moves to the best-scoring point of its region; an anchor that already scores best
    stays. Local steps move anchors by at most delta.

    Args:
        anchors: Starting directions
        grid: Filtered Hough grid
        intrinsics: Camera intrinsics on the grid
        scales: Refinement scales, coarse to fine
        snap: Replace three refined directions by the nearest orthonormal frame

    Returns:
        Refined directions sorted by descending confidence, plus the unsnapped directions

    Raises:
        ParamsMismatch: Intrinsics are not expressed on the Hough grid
    """
    lines = grid_lines(grid, intrinsics)
    current = np.array([vp.vector for vp in anchors]).reshape(-1, 3)
    confidences = np.array([vp.confidence for vp in anchors], dtype=np.float64)
    trace = [current.copy()]

    for scale in scales:
        if scale.hemispheric:
            current, confidences = _hemispheric_step(lines, current, scale)
        else:
            current, confidences = _local_step(lines, current, confidences, scale)
        trace.append(current.copy())
        logger.debug("refinement_scale", delta_deg=scale.delta_deg, n_points=scale.n_points)

    order = np.lexsort((np.arange(len(current)), -confidences))
    raw = [VanishingPoint.from_vector(current[i], float(confidences[i])) for i in order]
    final = raw
    if snap and len(current) == 3:
        frame = nearest_orthonormal_frame(current)
        final = [VanishingPoint.from_vector(frame[i], float(confidences[i])) for i in order]
    return Refinement(vps=final, raw_vps=raw, trace=trace)


def hemisphere_candidates(
    grid: HoughGrid,
    intrinsics: CameraIntrinsics,
    scale: ScaleSpec,
    radius: float,
    top: int,
) -> list[VanishingPoint]:
    """
    Candidate directions voted directly onto a coarse hemisphere lattice.

    Used as the Manhattan fast path that skips the full-lattice field; peaks are separated
    by non-maximum suppression with the given radius.
    """
    lines = grid_lines(grid, intrinsics)
    points = hemisphere_points(scale.n_points)
    spacing = math.sqrt(2.0 * math.pi / scale.n_points)
    lattice = SphereLattice(points=points, knn=build_knn(points, 8), variant=LatticeVariant.TRUNCATE)
    scores = vote_points(lines, points, spacing)
    return sphere_nms(SphereField(lattice, scores), radius, top)


def polish_candidates(
    candidates: list[VanishingPoint],
    grid: HoughGrid,
    intrinsics: CameraIntrinsics,
    scales: list[ScaleSpec],
    radius: float,
    top: Optional[int] = None,
) -> list[VanishingPoint]:
    """
    Refine field candidates against the lines and re-rank them by concurrency.

    The first `top` candidates are refined through the local scales; their scores become
    the weighted count of lines passing through the refined direction at the finest gate.
    Refined directions closer than radius to a stronger one are dropped.
    """
    local = [scale for scale in scales if not scale.hemispheric]
    chosen = candidates[:top] if top else candidates
    if not chosen or not local:
        return candidates
    refined = refine_multiscale(chosen, grid, intrinsics, local).raw_vps
    points = np.array([vp.vector for vp in refined]).reshape(-1, 3)
    kept = separate(points, np.arange(len(refined)), radius)
    logger.debug("candidates_polished", refined=len(refined), kept=len(kept))
    return [refined[i] for i in kept]
