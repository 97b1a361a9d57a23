"""
Evaluation Metrics

Angular errors, confidence-ranked optimal matching, angle accuracy and recall/AUC curves.
"""

import math
from typing import Optional, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.optimize import linear_sum_assignment

from ..errors import EmptyInput
from .models import AAMode, Match, TopK


def angular_error(pred: ArrayLike, gt: ArrayLike) -> float:
    """Angle in degrees between two directions, antipodes identified; in [0, 90]."""
    a = np.asarray(pred, dtype=np.float64)
    b = np.asarray(gt, dtype=np.float64)
    cos = abs(float(a @ b)) / (np.linalg.norm(a) * np.linalg.norm(b))
    return math.degrees(math.acos(min(max(cos, 0.0), 1.0)))


def error_matrix(preds: NDArray[np.float64], gts: NDArray[np.float64]) -> NDArray[np.float64]:
    """Pairwise angular errors in degrees, rows = predictions."""
    preds = preds / np.linalg.norm(preds, axis=1, keepdims=True)
    gts = gts / np.linalg.norm(gts, axis=1, keepdims=True)
    return np.degrees(np.arccos(np.clip(np.abs(preds @ gts.T), 0.0, 1.0)))


def match_bipartite(
    preds: ArrayLike, gts: ArrayLike, top_k: Optional[TopK] = None
) -> list[Match]:
    """
    Optimal one-to-one matching of the top-k ranked predictions to ground truths.

    Args:
        preds: (P, 3) predictions sorted by descending confidence
        gts: (G, 3) ground truth directions
        top_k: How many predictions take part (default: as many as ground truths)

    Returns:
        One Match per ground truth in ground truth order; unmatched ones are misses
    """
    top_k = top_k or TopK()
    preds = np.asarray(preds, dtype=np.float64).reshape(-1, 3)
    gts = np.asarray(gts, dtype=np.float64).reshape(-1, 3)
    k = top_k.resolve(preds.shape[0], gts.shape[0])

    matches = [Match(gt_index=g) for g in range(gts.shape[0])]
    if k == 0 or gts.shape[0] == 0:
        return matches

    cost = error_matrix(preds[:k], gts)
    rows, cols = linear_sum_assignment(cost)
    for r, c in zip(rows, cols):
        matches[c] = Match(gt_index=int(c), pred_index=int(r), error_deg=float(cost[r, c]))
    return matches


def match_errors(matches: Sequence[Match]) -> list[float]:
    return [m.error_deg for m in matches]


def angle_accuracy(
    errors: Sequence[float], thresholds: Sequence[float], mode: AAMode = AAMode.FRACTION
) -> list[float]:
    """
    Angle accuracy at each threshold, misses (inf) included in the denominator.

    FRACTION: share of errors <= tau. AUC: area under the cumulative error curve on
    [0, tau] divided by tau, i.e. sum over errors <= tau of (tau - e) / (tau * total).

    Raises:
        EmptyInput: No errors to aggregate
    """
    values = np.asarray(list(errors), dtype=np.float64)
    if values.size == 0:
        raise EmptyInput("angle accuracy of an empty error list")

    accuracy = []
    for tau in thresholds:
        hit = values <= tau
        if mode == AAMode.FRACTION:
            accuracy.append(float(hit.sum() / values.size))
        else:
            accuracy.append(float(np.sum(tau - values[hit]) / (tau * values.size)))
    return accuracy


def recall_curve(
    errors: Sequence[float], tau_max: float = 10.0, step: float = 0.1
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Recall sampled at tau = 0, step, ..., tau_max."""
    if tau_max <= 0:
        raise ValueError(f"tau_max must be positive, got {tau_max}")
    values = np.sort(np.asarray(list(errors), dtype=np.float64))
    taus = np.arange(int(round(tau_max / step)) + 1) * step
    if values.size == 0:
        return taus, np.zeros_like(taus)
    recall = np.searchsorted(values, taus, side="right") / values.size
    return taus, recall


def recall_auc(
    errors: Sequence[float], tau_max: float = 10.0, step: float = 0.1
) -> tuple[NDArray[np.float64], NDArray[np.float64], float]:
    """
    Recall curve up to tau_max and its area, normalized to [0, 1].

    Returns:
        Tuple of (taus, recall, auc) with auc the mean recall over the grid
    """
    taus, recall = recall_curve(errors, tau_max, step)
    return taus, recall, float(recall.mean())
