"""
Detection Data Models

Vanishing points, detection results and the detector configuration.
"""

import math
from enum import Enum
from typing import Any, Optional

import numpy as np
from numpy.typing import NDArray
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from ..camera.models import FocalSource
from ..camera.projection import canonicalize, normalize, vec_to_sph


class DetectionMode(str, Enum):
    """Output contract of a detection run."""

    MANHATTAN = "manhattan"  # three mutually orthogonal directions
    MULTI = "multi"  # ranked list of any number of directions


class VanishingPoint(BaseModel):
    """A vanishing direction on the canonical hemisphere with its score."""

    model_config = ConfigDict(frozen=True)

    direction: tuple[float, float, float] = Field(..., description="Canonical unit vector")
    confidence: float = Field(default=0.0, ge=0.0, allow_inf_nan=False)

    @field_validator("direction", mode="before")
    @classmethod
    def canonical_direction(cls, v: Any) -> tuple[float, float, float]:
        """Normalize and move to the canonical hemisphere."""
        vec = np.asarray(v, dtype=np.float64).reshape(3)
        if not np.all(np.isfinite(vec)) or np.linalg.norm(vec) == 0:
            raise ValueError("direction must be a finite non-zero vector")
        vec = canonicalize(normalize(vec))
        return (float(vec[0]), float(vec[1]), float(vec[2]))

    @classmethod
    def from_vector(cls, vector: NDArray[np.float64], confidence: float) -> "VanishingPoint":
        return cls(direction=tuple(np.asarray(vector, dtype=np.float64)), confidence=confidence)

    @property
    def vector(self) -> NDArray[np.float64]:
        return np.array(self.direction)

    def to_json(self) -> dict[str, Any]:
        alpha, beta = vec_to_sph(self.vector)
        return {
            "dir": list(self.direction),
            "confidence": self.confidence,
            "azimuth_deg": math.degrees(float(alpha)),
            "elevation_deg": math.degrees(float(beta)),
        }


class ClusterConfig(BaseModel):
    """Density clustering of sphere fields."""

    eps: float = Field(default=0.005, gt=0.0, description="Cosine-distance neighborhood")
    min_points: int = Field(default=4, ge=1)
    merge_radius_deg: float = Field(
        default=3.0, ge=0.0, description="Minimum separation between emitted directions"
    )
    split_peaks: bool = Field(
        default=True, description="Emit separated local maxima inside one cluster"
    )

    @property
    def merge_radius(self) -> float:
        return math.radians(self.merge_radius_deg)


class ScaleSpec(BaseModel):
    """One refinement scale: cap radius and point count."""

    model_config = ConfigDict(frozen=True)

    delta_deg: float = Field(..., gt=0.0, le=90.0)
    n_points: int = Field(..., ge=1)

    @property
    def delta(self) -> float:
        return math.radians(self.delta_deg)

    @property
    def hemispheric(self) -> bool:
        return self.delta_deg >= 89.0


DEFAULT_SCALES = [
    ScaleSpec(delta_deg=90.0, n_points=512),
    ScaleSpec(delta_deg=13.0, n_points=128),
    ScaleSpec(delta_deg=4.0, n_points=128),
]


class DetectorConfig(BaseModel):
    """Detector stage settings."""

    mode: DetectionMode = Field(default=DetectionMode.MANHATTAN)
    smoothing_rounds: int = Field(default=2, ge=0)
    threshold_quantile: float = Field(default=0.98, ge=0.0, le=1.0)
    filter_window: int = Field(default=9, ge=1)
    filter_theta_window: int = Field(
        default=9, ge=1, description="Angle extent of the peak window; 1 filters offsets only"
    )
    filter_floor: float = Field(default=0.15, ge=0.0, le=1.0)
    ortho_tol_deg: float = Field(default=2.0, gt=0.0)
    shortlist: int = Field(default=12, ge=3)
    scales: list[ScaleSpec] = Field(default_factory=lambda: list(DEFAULT_SCALES))
    full_lattice: bool = Field(
        default=True, description="Manhattan anchors from the full lattice (else first scale)"
    )
    snap_manhattan: bool = Field(default=True, description="Report the nearest orthonormal frame")
    max_vps: Optional[int] = Field(default=None, ge=1, description="Truncate multi output")
    polish_top: int = Field(
        default=36, ge=0, description="Field candidates re-ranked by line concurrency; 0 disables"
    )

    @field_validator("filter_window", "filter_theta_window")
    @classmethod
    def odd_window(cls, v: int) -> int:
        if v % 2 == 0:
            raise ValueError("filter windows must be odd")
        return v

    @field_validator("scales")
    @classmethod
    def nonempty_scales(cls, v: list[ScaleSpec]) -> list[ScaleSpec]:
        if not v:
            raise ValueError("at least one refinement scale is required")
        return v

    @property
    def ortho_tol(self) -> float:
        return math.radians(self.ortho_tol_deg)


class Detection(BaseModel):
    """Ranked vanishing points of one image."""

    vps: list[VanishingPoint] = Field(default_factory=list)
    mode: DetectionMode
    focal_source: FocalSource = Field(default=FocalSource.PROVIDED)
    scales: list[ScaleSpec] = Field(default_factory=list)
    lattice_points: int = Field(default=0, ge=0)
    relaxed: bool = Field(default=False, description="Manhattan triple came from the fallback")
    raw_vps: Optional[list[VanishingPoint]] = Field(
        default=None, description="Refined directions before frame snapping"
    )

    @model_validator(mode="after")
    def sorted_by_confidence(self) -> "Detection":
        """Ensure descending confidence order."""
        confidences = [vp.confidence for vp in self.vps]
        if any(a < b for a, b in zip(confidences, confidences[1:])):
            raise ValueError("vps must be sorted by descending confidence")
        return self

    def directions(self) -> NDArray[np.float64]:
        return np.array([vp.direction for vp in self.vps]).reshape(-1, 3)

    def to_json(self) -> dict[str, Any]:
        payload: dict[str, Any] = {
            "vps": [vp.to_json() for vp in self.vps],
            "mode": self.mode.value,
            "focal_source": self.focal_source.value,
            "scales": [[s.delta_deg, s.n_points] for s in self.scales],
            "lattice_points": self.lattice_points,
            "relaxed": self.relaxed,
        }
        if self.raw_vps is not None:
            payload["raw_vps"] = [vp.to_json() for vp in self.raw_vps]
        return payload
