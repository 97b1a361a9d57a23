"""
Evaluation Module

Ground truth manifests, angular error metrics and optimal matching. The manifest runner
lives in `vp_core.evaluation.runner`.
"""

from .manifest import read_manifest, resolve_image_path, write_manifest
from .metrics import (
    angle_accuracy,
    angular_error,
    error_matrix,
    match_bipartite,
    match_errors,
    recall_auc,
    recall_curve,
)
from .models import (
    AAMode,
    EvalConfig,
    EvalReport,
    GroundTruth,
    ImageEvaluation,
    ImageStatus,
    ManifestRecord,
    Match,
    RuleSummary,
    SweepRow,
    ThresholdRow,
    TopK,
    TopKRule,
)

__all__ = [
    "AAMode",
    "EvalConfig",
    "EvalReport",
    "GroundTruth",
    "ImageEvaluation",
    "ImageStatus",
    "ManifestRecord",
    "Match",
    "RuleSummary",
    "SweepRow",
    "ThresholdRow",
    "TopK",
    "TopKRule",
    "angle_accuracy",
    "angular_error",
    "error_matrix",
    "match_bipartite",
    "match_errors",
    "read_manifest",
    "recall_auc",
    "recall_curve",
    "resolve_image_path",
    "write_manifest",
]
