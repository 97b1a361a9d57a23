"""
Base Detector Class

Foundation for all vanishing point detectors with:
- Standardized execution interface
- Stage timing and run records
- Error capture with process exit codes
"""

import time
import traceback
from abc import ABC, abstractmethod
from dataclasses import dataclass
from datetime import datetime, timezone
from enum import Enum
from typing import Any, Optional
from uuid import uuid4

from pydantic import BaseModel, Field
from structlog import get_logger

from ..camera.models import CameraIntrinsics, FocalSource
from ..config import RunConfig
from ..detect.models import Detection
from ..errors import NoEvidence, VPError
from ..imaging.models import GrayImage
from ..shared_services.run_context import get_run_context
from .run_log import DetectionRunRecord, RunLogService

logger = get_logger()


class DetectionStatus(str, Enum):
    """Detector execution status."""

    SUCCESS = "success"
    NO_EVIDENCE = "no_evidence"
    FAILED = "failed"


@dataclass(frozen=True)
class DetectionRequest:
    """One image to detect on; image_id is the path or name used in logs and records."""

    image: GrayImage
    intrinsics: CameraIntrinsics
    focal_source: FocalSource = FocalSource.PROVIDED
    image_id: str = ""


class DetectionResult(BaseModel):
    """
    Standardized detector execution result.

    Contains the detection, stage timings and failure information.
    """

    execution_id: str = Field(default_factory=lambda: uuid4().hex)
    detector_type: str
    detector_version: str = Field(default="1.0.0")
    status: DetectionStatus

    output: Optional[Detection] = Field(default=None)

    error: Optional[str] = Field(default=None)
    error_code: int = Field(default=0, description="Process exit code for this outcome")
    error_details: Optional[dict[str, Any]] = Field(default=None)

    execution_time_ms: float
    stage_times_ms: dict[str, float] = Field(default_factory=dict)

    started_at: datetime
    completed_at: datetime
    context: dict[str, Any] = Field(default_factory=dict)

    def is_successful(self) -> bool:
        """Check if detection succeeded."""
        return self.status == DetectionStatus.SUCCESS


class StageTimer:
    """Collects wall-clock milliseconds per named stage."""

    def __init__(self) -> None:
        self.times_ms: dict[str, float] = {}
        self._started = time.perf_counter()

    def lap(self, stage: str) -> None:
        now = time.perf_counter()
        self.times_ms[stage] = round((now - self._started) * 1000, 3)
        self._started = now


class BaseDetector(ABC):
    """
    Base class for all detectors.

    Subclasses implement `_detect`; `execute` wraps it with timing, logging, error
    capture and optional run records.
    """

    def __init__(
        self,
        detector_type: str,
        config: RunConfig,
        detector_version: str = "1.0.0",
        run_log: Optional[RunLogService] = None,
    ):
        """
        Initialize base detector.

        Args:
            detector_type: Detector type identifier
            config: Resolved run configuration
            detector_version: Detector version
            run_log: Where execution records are appended, if anywhere
        """
        self.detector_type = detector_type
        self.detector_version = detector_version
        self.config = config
        self.run_log = run_log
        self.logger = logger.bind(detector_type=detector_type, detector_version=detector_version)

    def execute(
        self, request: DetectionRequest, context: Optional[dict[str, Any]] = None
    ) -> DetectionResult:
        """
        Run the detector and capture its outcome.

        Args:
            request: Image and intrinsics
            context: Extra fields echoed into the result

        Returns:
            Result whose status is success, no_evidence or failed; never raises for
            pipeline errors
        """
        started_at = datetime.now(timezone.utc)
        start = time.perf_counter()
        timer = StageTimer()
        log = self.logger.bind(image=request.image_id)
        log.info("detection_started", width=request.image.width, height=request.image.height)

        output = None
        error = None
        error_code = 0
        error_details = None
        try:
            output = self._detect(request, timer)
            status = DetectionStatus.SUCCESS
        except NoEvidence as e:
            status = DetectionStatus.NO_EVIDENCE
            error, error_code = str(e), e.exit_code
        except VPError as e:
            status = DetectionStatus.FAILED
            error, error_code = str(e), e.exit_code
            error_details = {"type": type(e).__name__}
        except Exception as e:
            status = DetectionStatus.FAILED
            error, error_code = str(e), 1
            error_details = {"type": type(e).__name__, "traceback": traceback.format_exc()}

        execution_time_ms = (time.perf_counter() - start) * 1000
        result = DetectionResult(
            detector_type=self.detector_type,
            detector_version=self.detector_version,
            status=status,
            output=output,
            error=error,
            error_code=error_code,
            error_details=error_details,
            execution_time_ms=execution_time_ms,
            stage_times_ms=timer.times_ms,
            started_at=started_at,
            completed_at=datetime.now(timezone.utc),
            context=context or {},
        )

        if status == DetectionStatus.SUCCESS:
            log.info(
                "detection_success",
                execution_time_ms=round(execution_time_ms, 3),
                vps=len(output.vps) if output else 0,
            )
        elif status == DetectionStatus.NO_EVIDENCE:
            log.warning("detection_no_evidence", error=error)
        else:
            log.error("detection_failed", error=error, details=error_details)

        if self.run_log is not None:
            try:
                self.run_log.append(self._run_record(result, request))
            except VPError as e:
                log.error("run_log_failed", error=str(e))
        return result

    def detect(self, request: DetectionRequest) -> Detection:
        """Run without outcome capture; stage errors propagate."""
        return self._detect(request, StageTimer())

    @abstractmethod
    def _detect(self, request: DetectionRequest, timer: StageTimer) -> Detection:
        """
        Internal detection logic implemented by each detector.

        Args:
            request: Image and intrinsics
            timer: Stage timer to call `lap` on after each stage

        Returns:
            Ranked detection
        """

    def _run_record(self, result: DetectionResult, request: DetectionRequest) -> DetectionRunRecord:
        run = get_run_context()
        return DetectionRunRecord(
            log_id=result.execution_id,
            run_id=run.run_id if run else None,
            detector_type=self.detector_type,
            detector_version=self.detector_version,
            status=result.status.value,
            image=request.image_id,
            focal_source=request.focal_source.value,
            vps=len(result.output.vps) if result.output else 0,
            execution_time_ms=result.execution_time_ms,
            stage_times_ms=result.stage_times_ms,
            error=result.error,
            config_hash=run.config_hash if run else self.config.config_hash(),
            cache_hash=run.cache_hash if run else None,
            executed_at=result.started_at,
        )

    def get_description(self) -> str:
        return f"{self.detector_type} v{self.detector_version}"
