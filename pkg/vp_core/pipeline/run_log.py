"""
Detection Run Log

Append-only JSON-lines trail of detector executions.
"""

import json
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

from pydantic import BaseModel, Field

from ..errors import IoError


class DetectionRunRecord(BaseModel):
    """One detector execution."""

    log_id: str = Field(..., description="Same as the execution id")
    run_id: Optional[str] = Field(default=None)

    detector_type: str
    detector_version: str
    status: str  # success, no_evidence, failed

    image: str = Field(default="")
    focal_source: str = Field(default="provided")
    vps: int = Field(default=0, ge=0)

    execution_time_ms: float
    stage_times_ms: dict[str, float] = Field(default_factory=dict)
    error: Optional[str] = Field(default=None)

    config_hash: str
    cache_hash: Optional[str] = Field(default=None)
    executed_at: datetime = Field(default_factory=lambda: datetime.now(timezone.utc))


class RunLogService:
    """Service for writing and reading run logs."""

    def __init__(self, path: str | Path):
        """
        Initialize run log service.

        Args:
            path: JSON-lines file (created on first append)
        """
        self.path = Path(path)

    def append(self, record: DetectionRunRecord) -> None:
        """
        Append one record.

        Raises:
            IoError: File not writable
        """
        try:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with self.path.open("a", encoding="utf-8") as f:
                f.write(record.model_dump_json() + "\n")
        except OSError as e:
            raise IoError(f"Cannot append to run log {self.path}: {e}") from e

    def read(self) -> list[DetectionRunRecord]:
        """All records in file order (empty when the log does not exist yet)."""
        if not self.path.is_file():
            return []
        with self.path.open(encoding="utf-8") as f:
            return [DetectionRunRecord.model_validate(json.loads(line)) for line in f if line.strip()]

    def summary(self) -> dict[str, int]:
        """Record counts per status."""
        counts: dict[str, int] = {}
        for record in self.read():
            counts[record.status] = counts.get(record.status, 0) + 1
        return counts
