"""
Detection Pipeline

Detector execution wrapper and run records.
"""

from .base_detector import (
    BaseDetector,
    DetectionRequest,
    DetectionResult,
    DetectionStatus,
    StageTimer,
)
from .run_log import DetectionRunRecord, RunLogService

__all__ = [
    "BaseDetector",
    "DetectionRequest",
    "DetectionResult",
    "DetectionRunRecord",
    "DetectionStatus",
    "RunLogService",
    "StageTimer",
]
