"""
Evaluation Data Models

Ground truth records, matching rules, evaluation settings and reports.
"""

import math
from enum import Enum
from itertools import combinations
from typing import Any, Optional

import numpy as np
from pydantic import BaseModel, Field, field_validator, model_validator

from ..camera.models import CameraIntrinsics
from ..camera.projection import angular_distance, canonicalize, normalize

MAX_GT_VPS = 8
ORTHOGONALITY_TOLERANCE_DEG = 0.5


class TopKRule(str, Enum):
    """How many ranked predictions enter the matching."""

    GT = "gt"  # as many as there are ground truths
    PRED = "pred"  # every prediction
    EXPLICIT = "explicit"


class TopK(BaseModel):
    rule: TopKRule = Field(default=TopKRule.GT)
    k: Optional[int] = Field(default=None, ge=0)

    @model_validator(mode="after")
    def validate_explicit(self) -> "TopK":
        if self.rule == TopKRule.EXPLICIT and self.k is None:
            raise ValueError("explicit top-k requires k")
        return self

    def resolve(self, n_preds: int, n_gts: int) -> int:
        if self.rule == TopKRule.GT:
            return min(n_gts, n_preds)
        if self.rule == TopKRule.PRED:
            return n_preds
        return min(self.k or 0, n_preds)


class AAMode(str, Enum):
    FRACTION = "fraction"  # share of errors at or below the threshold
    AUC = "auc"  # normalized area under the cumulative error curve up to the threshold


def _unit_tuple(v: Any) -> tuple[float, float, float]:
    vec = np.asarray(v, dtype=np.float64).reshape(3)
    if not np.all(np.isfinite(vec)) or np.linalg.norm(vec) == 0:
        raise ValueError("vanishing directions must be finite non-zero 3-vectors")
    vec = canonicalize(normalize(vec))
    return (float(vec[0]), float(vec[1]), float(vec[2]))


def check_vps(vps: list[tuple[float, float, float]], manhattan: bool) -> None:
    """1..8 directions; Manhattan sets hold exactly three pairwise orthogonal ones."""
    if not 1 <= len(vps) <= MAX_GT_VPS:
        raise ValueError(f"expected 1..{MAX_GT_VPS} vanishing points, got {len(vps)}")
    if manhattan:
        if len(vps) != 3:
            raise ValueError("Manhattan ground truth needs exactly 3 vanishing points")
        tol = math.radians(ORTHOGONALITY_TOLERANCE_DEG)
        for a, b in combinations(vps, 2):
            if math.pi / 2 - float(angular_distance(a, b)) > tol:
                raise ValueError("Manhattan vanishing points are not pairwise orthogonal")


class GroundTruth(BaseModel):
    """Annotated vanishing directions of one image."""

    vps: list[tuple[float, float, float]]
    intrinsics: CameraIntrinsics
    manhattan: bool = Field(default=False)

    @field_validator("vps", mode="before")
    @classmethod
    def canonical_vps(cls, v: Any) -> list[tuple[float, float, float]]:
        return [_unit_tuple(d) for d in v]

    @model_validator(mode="after")
    def validate_count(self) -> "GroundTruth":
        check_vps(self.vps, self.manhattan)
        return self

    def directions(self) -> np.ndarray:
        return np.array(self.vps)


class ManifestRecord(BaseModel):
    """One line of a dataset manifest."""

    image: str
    width: int = Field(..., gt=0)
    height: int = Field(..., gt=0)
    focal: Optional[float] = Field(default=None, gt=0.0)
    cx: Optional[float] = Field(default=None)
    cy: Optional[float] = Field(default=None)
    vps: list[tuple[float, float, float]]
    manhattan: bool = Field(default=False)

    @field_validator("vps")
    @classmethod
    def finite_vps(cls, v: list[tuple[float, float, float]]) -> list[tuple[float, float, float]]:
        for d in v:
            _unit_tuple(d)
        return v

    @model_validator(mode="after")
    def validate_vps(self) -> "ManifestRecord":
        check_vps([_unit_tuple(d) for d in self.vps], self.manhattan)
        return self

    def ground_truth(self, default_focal: Optional[float] = None) -> GroundTruth:
        intrinsics, _ = CameraIntrinsics.from_record(
            self.width, self.height, self.focal, self.cx, self.cy, default_focal
        )
        return GroundTruth(vps=self.vps, intrinsics=intrinsics, manhattan=self.manhattan)


class EvalConfig(BaseModel):
    """Metric settings."""

    thresholds_deg: list[float] = Field(default_factory=lambda: [3.0, 5.0, 10.0])
    tau_max_deg: float = Field(default=10.0, gt=0.0)
    recall_step_deg: float = Field(default=0.1, gt=0.0)

    @field_validator("thresholds_deg")
    @classmethod
    def sorted_thresholds(cls, v: list[float]) -> list[float]:
        if not v:
            raise ValueError("at least one threshold is required")
        if any(t <= 0 for t in v):
            raise ValueError("thresholds must be positive")
        if any(a > b for a, b in zip(v, v[1:])):
            raise ValueError("thresholds must be sorted ascending")
        return v


class Match(BaseModel):
    """A ground truth and the prediction assigned to it (None for a miss)."""

    gt_index: int
    pred_index: Optional[int] = None
    error_deg: float = Field(default=math.inf, description="inf for a miss")

    @property
    def is_miss(self) -> bool:
        return self.pred_index is None


class ThresholdRow(BaseModel):
    tau_deg: float
    aa_fraction: float = Field(..., ge=0.0, le=1.0)
    aa_auc: float = Field(..., ge=0.0, le=1.0)
    recall: float = Field(..., ge=0.0, le=1.0)


class RuleSummary(BaseModel):
    """Aggregate metrics for one matching rule."""

    rule: str
    total: int = Field(default=0, ge=0)
    matched: int = Field(default=0, ge=0)
    rows: list[ThresholdRow] = Field(default_factory=list)
    auc: float = Field(default=0.0, ge=0.0, le=1.0)
    recall_curve: list[tuple[float, float]] = Field(default_factory=list)


class ImageStatus(str, Enum):
    SUCCESS = "success"
    NO_EVIDENCE = "no_evidence"
    FAILED = "failed"


class ImageEvaluation(BaseModel):
    """Per-image outcome; misses are serialized as null errors."""

    index: int
    image: str
    status: ImageStatus
    n_gt: int = Field(default=0, ge=0)
    n_pred: int = Field(default=0, ge=0)
    errors_deg: dict[str, list[Optional[float]]] = Field(default_factory=dict)
    focal_source: Optional[str] = None
    cache_hash: Optional[str] = None
    error: Optional[str] = None


class EvalReport(BaseModel):
    """Evaluation of a manifest."""

    manifest: str
    config_hash: str
    cache_hashes: list[str] = Field(default_factory=list)
    detector: str = Field(default="sphere")
    images: int = Field(default=0, ge=0)
    failures: int = Field(default=0, ge=0)
    per_image: list[ImageEvaluation] = Field(default_factory=list)
    summaries: dict[str, RuleSummary] = Field(default_factory=dict)
    config: dict[str, Any] = Field(default_factory=dict)


class SweepRow(BaseModel):
    """One point of a quantization sweep."""

    axis: str
    value: int
    rule: str
    config_hash: str
    failures: int = Field(default=0, ge=0)
    aa_fraction: dict[str, float] = Field(default_factory=dict)
    aa_auc: dict[str, float] = Field(default_factory=dict)
    auc: float = Field(default=0.0, ge=0.0, le=1.0)
