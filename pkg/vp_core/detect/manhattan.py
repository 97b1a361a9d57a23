"""
Manhattan Frame Selection

Choosing three mutually orthogonal directions from ranked candidates and snapping
directions to the nearest orthonormal frame.
"""

from dataclasses import dataclass
from itertools import combinations

import numpy as np
from numpy.typing import NDArray
from scipy.linalg import polar
from structlog import get_logger

from ..camera.projection import angular_distance, canonicalize, normalize
from ..errors import InsufficientCandidates
from .models import VanishingPoint

logger = get_logger()

# fallback partners may deviate this many tolerances from orthogonal
FALLBACK_TOLERANCE_FACTOR = 5.0


@dataclass(frozen=True)
class ManhattanTriple:
    """Three directions, and whether they came from the relaxed fallback."""

    vps: list[VanishingPoint]
    relaxed: bool


def orthogonality_deviation(a: NDArray[np.float64], b: NDArray[np.float64]) -> float:
    """|90 deg - angle(a, b)| in radians."""
    return float(np.pi / 2 - angular_distance(a, b))


def _fallback(top: list[VanishingPoint], ortho_tol: float) -> ManhattanTriple:
    loose = FALLBACK_TOLERANCE_FACTOR * ortho_tol
    first = top[0]
    others = top[1:]

    deviations = [orthogonality_deviation(first.vector, c.vector) for c in others]
    within = [i for i, d in enumerate(deviations) if d <= loose]
    if within:
        second = others[within[0]]  # highest confidence, list is ranked
    else:
        second = others[int(np.argmin(deviations))]

    target = canonicalize(normalize(np.cross(first.vector, second.vector)))
    remaining = [c for c in others if c is not second]
    third = None
    synthesized = False
    if remaining:
        distances = [float(angular_distance(target, c.vector)) for c in remaining]
        best = int(np.argmin(distances))
        if distances[best] <= loose:
            third = remaining[best]
    if third is None:
        third = VanishingPoint.from_vector(target, 0.0)
        synthesized = True

    vps = sorted([first, second, third], key=lambda vp: -vp.confidence)
    logger.info("manhattan_fallback", synthesized=synthesized)
    return ManhattanTriple(vps=vps, relaxed=True)


def select_manhattan_triple(
    candidates: list[VanishingPoint], ortho_tol: float, shortlist: int = 12
) -> ManhattanTriple:
    """
    Highest-confidence orthogonal triple among the top candidates.

    Every triple of the `shortlist` best candidates whose pairwise angles are within
    ortho_tol of 90 degrees is scored by summed confidence; the first best triple in
    enumeration order wins. Without a qualifying triple a greedy fallback picks the top
    candidate, its best orthogonal partner and the candidate nearest their cross product
    (or the cross product itself), flagged as relaxed.

    Args:
        candidates: Vanishing point candidates
        ortho_tol: Orthogonality tolerance in radians
        shortlist: Number of top candidates searched exhaustively

    Returns:
        Triple sorted by descending confidence

    Raises:
        InsufficientCandidates: Fewer than two candidates
    """
    if len(candidates) < 2:
        raise InsufficientCandidates(
            f"need at least 2 candidates for a Manhattan frame, got {len(candidates)}"
        )

    top = sorted(candidates, key=lambda vp: -vp.confidence)[:shortlist]
    vectors = np.array([vp.vector for vp in top])
    ok = np.pi / 2 - angular_distance(vectors[:, None, :], vectors[None, :, :]) <= ortho_tol

    best: tuple[int, int, int] | None = None
    best_score = -np.inf
    for i, j, k in combinations(range(len(top)), 3):
        if ok[i, j] and ok[i, k] and ok[j, k]:
            score = top[i].confidence + top[j].confidence + top[k].confidence
            if score > best_score:
                best, best_score = (i, j, k), score

    if best is None:
        return _fallback(top, ortho_tol)
    return ManhattanTriple(vps=[top[i] for i in best], relaxed=False)


def nearest_orthonormal_frame(directions: NDArray[np.float64]) -> NDArray[np.float64]:
    """
    Closest orthonormal rows (Frobenius norm) to three directions, canonicalized.

    Uses the orthogonal factor of the polar decomposition.
    """
    rows = normalize(np.asarray(directions, dtype=np.float64))
    orthogonal, _ = polar(rows)
    return canonicalize(orthogonal)
