"""
Hough Transform

Voting of a feature map into (rho, theta) space and local-maximum filtering.
"""

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from numpy.typing import NDArray
from structlog import get_logger

from ..errors import DimensionMismatch, IndexOutOfRange
from ..imaging.models import EdgeMap
from .models import HoughGrid, HoughParams

logger = get_logger()


def pixel_centers(side: int) -> NDArray[np.float64]:
    """Coordinates of pixel centers along one axis, origin at the grid center."""
    return np.arange(side) + 0.5 - side / 2.0


def rho_bin(rho: NDArray[np.float64], params: HoughParams) -> NDArray[np.int64]:
    """Nearest offset bin for each rho (bin centers are uniform, so this is a floor)."""
    k = np.floor((rho + params.rho_max) / params.rho_step).astype(np.int64)
    return np.clip(k, 0, params.n_rho - 1)


def hough_accumulate(feature: EdgeMap, params: HoughParams) -> HoughGrid:
    """
    Vote every positive pixel into the offset bin of its line at each angle.

    For pixel value v and angle bin j, v is added to the bin nearest to
    rho = x cos(theta_j) + y sin(theta_j). Every pixel votes exactly once per angle, so each
    angle column sums to the feature map total.

    Args:
        feature: grid_side x grid_side evidence map
        params: Line-space discretization

    Returns:
        Vote accumulator

    Raises:
        DimensionMismatch: Feature map is not grid_side x grid_side
    """
    side = params.grid_side
    if feature.values.shape != (side, side):
        raise DimensionMismatch(
            f"feature map is {feature.width}x{feature.height}, expected {side}x{side}"
        )

    rows, cols = np.nonzero(feature.values > 0)
    weights = feature.values[rows, cols]
    votes = np.zeros(params.n_bins)
    if weights.size:
        centers = pixel_centers(side)
        thetas = params.thetas()
        # (pixels, angles); each column j is written only by angle j
        rho = np.outer(centers[cols], np.cos(thetas)) + np.outer(centers[rows], np.sin(thetas))
        flat = rho_bin(rho, params) * params.n_theta + np.arange(params.n_theta)
        votes = np.bincount(
            flat.ravel(),
            weights=np.repeat(weights, params.n_theta),
            minlength=params.n_bins,
        )

    logger.debug("hough_accumulated", pixels=int(weights.size), total=float(weights.sum()))
    return HoughGrid(params, votes.reshape(params.n_rho, params.n_theta))


def hough_filter(grid: HoughGrid, window: int = 9, floor: float = 0.0) -> HoughGrid:
    """
    Keep strict local maxima along the offset axis.

    Per angle column, a bin survives at its value when it is strictly larger than every
    other bin within +-(window - 1) / 2 offset bins; bins past the grid edge are ignored.
    Equal neighbors suppress each other.

    Args:
        grid: Vote accumulator
        window: Odd window length in bins
        floor: Survivors below floor * max(votes) are dropped too

    Returns:
        Filtered accumulator (a subset of the input bins)
    """
    if window < 1 or window % 2 == 0:
        raise ValueError(f"window must be odd and >= 1, got {window}")

    votes = grid.votes
    half = (window - 1) // 2
    if half == 0:
        keep = votes > 0
    else:
        padded = np.pad(votes, ((half, half), (0, 0)), constant_values=-np.inf)
        windows = sliding_window_view(padded, window, axis=0)
        neighbors = np.maximum(
            windows[..., :half].max(axis=-1), windows[..., half + 1 :].max(axis=-1)
        )
        keep = votes > neighbors

    if floor > 0 and votes.size:
        keep &= votes >= floor * votes.max()

    filtered = np.where(keep, votes, 0.0)
    logger.debug("hough_filtered", kept=int(np.count_nonzero(filtered)), window=window)
    return HoughGrid(grid.params, filtered)


def hough_peaks(
    grid: HoughGrid, window: int = 9, theta_window: int = 9, floor: float = 0.0
) -> HoughGrid:
    """
    Keep bins that are the maximum of their (rho, theta) neighborhood.

    The neighborhood spans +-(window - 1) / 2 offset bins and +-(theta_window - 1) / 2
    angle bins. Angles wrap around: the column before theta = 0 is the last column with
    its offsets negated, since (rho, theta) and (-rho, theta + pi) are the same line.
    Equal votes resolve to the bin with the lower flat index, so a plateau keeps exactly
    one bin.

    Args:
        grid: Vote accumulator
        window: Odd window length along the offset axis
        theta_window: Odd window length along the angle axis, at most n_theta
        floor: Survivors below floor * max(votes) are dropped too

    Returns:
        Filtered accumulator (a subset of the input bins)
    """
    for name, length in (("window", window), ("theta_window", theta_window)):
        if length < 1 or length % 2 == 0:
            raise ValueError(f"{name} must be odd and >= 1, got {length}")
    n_rho, n_theta = grid.params.n_rho, grid.params.n_theta
    if theta_window > n_theta:
        raise ValueError(f"theta_window {theta_window} exceeds n_theta {n_theta}")

    votes = grid.votes
    flat = votes.ravel()
    # unique ranks: higher vote first, lower flat index first among equals
    order = np.lexsort((-np.arange(flat.size), flat))
    rank = np.empty(flat.size)
    rank[order] = np.arange(flat.size)
    rank = rank.reshape(n_rho, n_theta)

    half, t_half = (window - 1) // 2, (theta_window - 1) // 2
    if t_half:
        flipped = rank[::-1]
        rank_padded = np.hstack([flipped[:, n_theta - t_half :], rank, flipped[:, :t_half]])
    else:
        rank_padded = rank
    rank_padded = np.pad(rank_padded, ((half, half), (0, 0)), constant_values=-np.inf)
    windows = sliding_window_view(rank_padded, (window, theta_window))
    keep = (rank == windows.max(axis=(-2, -1))) & (votes > 0)

    if floor > 0 and votes.size:
        keep &= votes >= floor * votes.max()

    filtered = np.where(keep, votes, 0.0)
    logger.debug(
        "hough_peaks_kept",
        kept=int(np.count_nonzero(filtered)),
        window=window,
        theta_window=theta_window,
    )
    return HoughGrid(grid.params, filtered)


def bin_to_line(rho_idx: int, theta_idx: int, params: HoughParams) -> tuple[float, float]:
    """
    Line of a Hough bin in grid coordinates.

    The line is {(x, y): x cos(theta) + y sin(theta) = rho} with the origin at the grid
    center, x to the right and y down.

    Raises:
        IndexOutOfRange: Index outside the accumulator
    """
    if not 0 <= rho_idx < params.n_rho:
        raise IndexOutOfRange(f"rho index {rho_idx} outside [0, {params.n_rho})")
    if not 0 <= theta_idx < params.n_theta:
        raise IndexOutOfRange(f"theta index {theta_idx} outside [0, {params.n_theta})")
    rho = -params.rho_max + (rho_idx + 0.5) * params.rho_step
    return float(rho), float(theta_idx * params.theta_step)


def rasterize_line(rho: float, theta: float, side: int, half_width: float = 0.5) -> EdgeMap:
    """Binary map of pixels whose centers lie within half_width of a (rho, theta) line."""
    centers = pixel_centers(side)
    distance = np.abs(
        centers[None, :] * np.cos(theta) + centers[:, None] * np.sin(theta) - rho
    )
    return EdgeMap((distance <= half_width).astype(np.float64))


def grid_heatmap(grid: HoughGrid) -> NDArray[np.float64]:
    """Accumulator scaled to [0, 1] for a PGM dump (row = rho, column = theta)."""
    peak = grid.votes.max() if grid.votes.size else 0.0
    return grid.votes / peak if peak > 0 else np.zeros_like(grid.votes)
