import numpy as np
import pytest

from vp_core.camera import CameraIntrinsics
from vp_core.config import RunConfig
from vp_core.detect import Detection, DetectionMode, VanishingPoint
from vp_core.errors import CorruptCache, NoEvidence, VPError
from vp_core.imaging import GrayImage
from vp_core.pipeline.base_detector import (
    BaseDetector,
    DetectionRequest,
    DetectionStatus,
    StageTimer,
)
from vp_core.pipeline.run_log import RunLogService
from vp_core.shared_services.run_context import (
    RunContext,
    clear_run_context,
    get_run_context,
    set_run_context,
    update_cache_hash,
)


class ScriptedDetector(BaseDetector):
    """Returns or raises whatever it was constructed with."""

    def __init__(self, outcome, run_log=None):
        super().__init__("scripted", RunConfig(), run_log=run_log)
        self.outcome = outcome

    def _detect(self, request: DetectionRequest, timer: StageTimer) -> Detection:
        timer.lap("only")
        if isinstance(self.outcome, Exception):
            raise self.outcome
        return self.outcome


@pytest.fixture
def request_():
    image = GrayImage(np.zeros((16, 16)))
    camera = CameraIntrinsics(focal=20.0, cx=8.0, cy=8.0, width=16, height=16)
    return DetectionRequest(image=image, intrinsics=camera, image_id="blank.png")


def detection() -> Detection:
    return Detection(
        vps=[VanishingPoint.from_vector(np.array([0.0, 0.0, 1.0]), 3.0)],
        mode=DetectionMode.MULTI,
    )


def test_success(request_):
    result = ScriptedDetector(detection()).execute(request_, context={"source": "test"})
    assert result.status == DetectionStatus.SUCCESS
    assert result.is_successful()
    assert result.error_code == 0
    assert result.output.vps[0].confidence == 3.0
    assert "only" in result.stage_times_ms
    assert result.context == {"source": "test"}


def test_no_evidence_is_not_a_failure(request_):
    result = ScriptedDetector(NoEvidence("empty grid")).execute(request_)
    assert result.status == DetectionStatus.NO_EVIDENCE
    assert result.error == "empty grid"
    assert result.error_code == 3
    assert result.output is None


def test_toolkit_errors_keep_their_exit_code(request_):
    result = ScriptedDetector(CorruptCache("bad crc")).execute(request_)
    assert result.status == DetectionStatus.FAILED
    assert result.error_code == 4
    assert result.error_details == {"type": "CorruptCache"}


def test_unexpected_errors_are_captured(request_):
    result = ScriptedDetector(RuntimeError("boom")).execute(request_)
    assert result.status == DetectionStatus.FAILED
    assert result.error_code == 1
    assert "traceback" in result.error_details


def test_detect_propagates_errors(request_):
    with pytest.raises(VPError):
        ScriptedDetector(NoEvidence("empty grid")).detect(request_)


def test_run_log_records_each_execution(request_, tmp_path):
    log = RunLogService(tmp_path / "logs" / "runs.jsonl")
    assert log.read() == []

    set_run_context(RunContext(command="detect", config_hash="abc123"))
    try:
        update_cache_hash("cafe")
        ScriptedDetector(detection(), run_log=log).execute(request_)
        ScriptedDetector(NoEvidence("empty"), run_log=log).execute(request_)
        run_id = get_run_context().run_id
    finally:
        clear_run_context()

    records = log.read()
    assert [r.status for r in records] == ["success", "no_evidence"]
    assert records[0].image == "blank.png"
    assert records[0].vps == 1
    assert records[0].config_hash == "abc123"
    assert records[0].cache_hash == "cafe"
    assert {r.run_id for r in records} == {run_id}
    assert log.summary() == {"success": 1, "no_evidence": 1}


def test_run_log_without_context_uses_config_hash(request_, tmp_path):
    log = RunLogService(tmp_path / "runs.jsonl")
    detector = ScriptedDetector(detection(), run_log=log)
    detector.execute(request_)
    (record,) = log.read()
    assert record.run_id is None
    assert record.config_hash == detector.config.config_hash()


def test_run_context_lifecycle():
    assert get_run_context() is None
    context = RunContext(command="eval", config_hash="f" * 64, run_id="run-1")
    set_run_context(context)
    try:
        assert get_run_context() is context
        assert context.log_fields() == {"run_id": "run-1", "command": "eval", "config_hash": "f" * 12}
    finally:
        clear_run_context()
    assert get_run_context() is None
