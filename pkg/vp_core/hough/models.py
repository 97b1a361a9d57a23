"""
Hough Data Models

Discretization of the (rho, theta) line space and the vote accumulator.
"""

import hashlib
import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray
from pydantic import BaseModel, ConfigDict, Field


class HoughParams(BaseModel):
    """
    Line-space discretization over a grid_side x grid_side feature map.

    Offsets are measured from the grid center and sampled uniformly in [-rho_max, rho_max]
    with rho_max the half-diagonal; angles are sampled uniformly in [0, pi).
    """

    model_config = ConfigDict(frozen=True)

    n_rho: int = Field(default=184, ge=3, description="Number of offset bins")
    n_theta: int = Field(default=180, ge=2, description="Number of angle bins")
    grid_side: int = Field(default=128, ge=1, description="Feature map side in pixels")

    @property
    def rho_max(self) -> float:
        return self.grid_side * math.sqrt(2.0) / 2.0

    @property
    def rho_step(self) -> float:
        return 2.0 * self.rho_max / self.n_rho

    @property
    def theta_step(self) -> float:
        return math.pi / self.n_theta

    @property
    def n_bins(self) -> int:
        return self.n_rho * self.n_theta

    def rhos(self) -> NDArray[np.float64]:
        """Bin-center offsets: rho_k = -rho_max + (k + 0.5) * rho_step."""
        return -self.rho_max + (np.arange(self.n_rho) + 0.5) * self.rho_step

    def thetas(self) -> NDArray[np.float64]:
        """Bin angles: theta_j = j * pi / n_theta."""
        return np.arange(self.n_theta) * self.theta_step

    def content_hash(self) -> int:
        """64-bit content hash used to key mapping caches."""
        text = f"{self.n_rho}|{self.n_theta}|{self.grid_side}"
        return int.from_bytes(hashlib.blake2b(text.encode(), digest_size=8).digest(), "little")


@dataclass(frozen=True)
class HoughGrid:
    """n_rho x n_theta accumulator; row = offset bin, column = angle bin."""

    params: HoughParams
    votes: NDArray[np.float64]

    def __post_init__(self) -> None:
        votes = np.asarray(self.votes, dtype=np.float64)
        expected = (self.params.n_rho, self.params.n_theta)
        if votes.shape != expected:
            raise ValueError(f"votes shape {votes.shape} != {expected}")
        if not np.all(np.isfinite(votes)) or (votes.size and votes.min() < 0):
            raise ValueError("votes must be finite and non-negative")
        object.__setattr__(self, "votes", votes)

    def active_bins(self) -> NDArray[np.int64]:
        """Flat (row-major) indices of bins with positive votes."""
        return np.flatnonzero(self.votes.ravel() > 0)

    @property
    def total(self) -> float:
        return float(self.votes.sum())
