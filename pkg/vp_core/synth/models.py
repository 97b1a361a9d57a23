"""
Synthetic Scene Models

Scene and dataset specifications for the line-drawing generator and the ground truth it
returns.
"""

from enum import Enum
from typing import Any, Optional

from pydantic import BaseModel, Field, field_validator, model_validator

from ..camera.models import CameraIntrinsics

# focal length as a multiple of the image side
DEFAULT_FOCAL_FACTOR = 2.1


class Rasterizer(str, Enum):
    ANTIALIASED = "antialiased"
    HARD = "hard"


class SceneSpec(BaseModel):
    """One synthetic line scene."""

    seed: int = Field(default=0, ge=0)
    n_directions: int = Field(default=3, ge=1, le=8)
    lines_per_direction: int = Field(default=8, ge=1)
    manhattan: bool = Field(default=True)
    jitter_sigma: float = Field(default=0.0, ge=0.0, description="Endpoint noise in pixels")
    outlier_fraction: float = Field(default=0.0, ge=0.0, le=1.0)
    image_size: int = Field(default=256, ge=16)
    focal: Optional[float] = Field(default=None, gt=0.0)
    rasterizer: Rasterizer = Field(default=Rasterizer.ANTIALIASED)
    min_separation_deg: float = Field(default=15.0, ge=0.0, lt=90.0)
    min_segment_px: float = Field(default=8.0, ge=1.0)

    @model_validator(mode="after")
    def validate_manhattan(self) -> "SceneSpec":
        """Manhattan scenes have exactly three directions."""
        if self.manhattan and self.n_directions != 3:
            raise ValueError("manhattan scenes need n_directions = 3")
        return self

    @property
    def intrinsics(self) -> CameraIntrinsics:
        side = self.image_size
        return CameraIntrinsics(
            focal=self.focal or DEFAULT_FOCAL_FACTOR * side,
            cx=side / 2.0,
            cy=side / 2.0,
            width=side,
            height=side,
        )


class Segment(BaseModel):
    """Image segment; family -1 marks an outlier."""

    family: int = Field(..., ge=-1)
    start: tuple[float, float]
    end: tuple[float, float]


class SceneTruth(BaseModel):
    """Ground truth of a generated scene."""

    directions: list[tuple[float, float, float]]
    segments: list[Segment]
    intrinsics: CameraIntrinsics
    manhattan: bool = Field(default=False)

    def family(self, index: int) -> list[Segment]:
        return [s for s in self.segments if s.family == index]


class DatasetSpec(BaseModel):
    """A seeded set of scenes sharing one base spec."""

    scene: SceneSpec = Field(default_factory=SceneSpec)
    count: int = Field(default=10, ge=1)
    seed: int = Field(default=0, ge=0)
    n_directions_range: Optional[tuple[int, int]] = Field(
        default=None, description="Inclusive range drawn per scene (non-Manhattan only)"
    )

    @field_validator("n_directions_range")
    @classmethod
    def validate_range(cls, v: Optional[tuple[int, int]]) -> Optional[tuple[int, int]]:
        if v is not None and not 1 <= v[0] <= v[1] <= 8:
            raise ValueError("n_directions_range must satisfy 1 <= low <= high <= 8")
        return v

    @classmethod
    def from_payload(cls, payload: dict[str, Any]) -> "DatasetSpec":
        """Accept either a dataset spec or a bare scene spec with an optional count."""
        if "scene" in payload:
            return cls.model_validate(payload)
        payload = dict(payload)
        count = payload.pop("count", 1)
        n_range = payload.pop("n_directions_range", None)
        scene = SceneSpec.model_validate(payload)
        return cls(scene=scene, count=count, seed=scene.seed, n_directions_range=n_range)
