"""
Manifest Evaluation

Runs a detector over every image of a manifest, matches predictions to ground truth and
aggregates angle accuracy and recall curves.

Images are evaluated over a process pool; results come back in manifest order and
aggregation sorts the pooled errors, so reports do not depend on worker timing or on the
order of manifest lines.
"""

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import TYPE_CHECKING, Any, Optional, Sequence

from structlog import get_logger

from ..camera.models import CameraIntrinsics
from ..errors import ConfigError, IoError, VPError
from ..imaging.io import load_image
from .manifest import read_manifest, resolve_image_path
from .metrics import angle_accuracy, match_bipartite, recall_auc
from .models import (
    AAMode,
    EvalConfig,
    EvalReport,
    ImageEvaluation,
    ImageStatus,
    ManifestRecord,
    RuleSummary,
    SweepRow,
    ThresholdRow,
    TopK,
    TopKRule,
)

if TYPE_CHECKING:
    from ..config import RunConfig
    from ..pipeline.base_detector import BaseDetector

logger = get_logger()

MANHATTAN_RULE = "manhattan"
TOP_K_GT_RULE = "top_k_gt"
TOP_K_PRED_RULE = "top_k_pred"

SWEEP_AXES = {"n_theta": "hough.n_theta", "n_points": "lattice.n_points"}

# per-process detectors, reused across the images a worker handles
_WORKER_DETECTORS: dict[tuple[str, str, Optional[str], Optional[str]], "BaseDetector"] = {}


def _worker_detector(
    detector_name: str,
    config: "RunConfig",
    cache_dir: Optional[str],
    run_log_path: Optional[str] = None,
) -> "BaseDetector":
    from detectors import build_detector

    from ..pipeline.run_log import RunLogService
    from ..sphere.cache import MappingCacheService

    key = (detector_name, config.config_hash(), cache_dir, run_log_path)
    if key not in _WORKER_DETECTORS:
        cache = MappingCacheService(cache_dir) if cache_dir else None
        run_log = RunLogService(run_log_path) if run_log_path else None
        _WORKER_DETECTORS[key] = build_detector(detector_name, config, cache=cache, run_log=run_log)
    return _WORKER_DETECTORS[key]


def rules_for(record: ManifestRecord) -> dict[str, TopK]:
    """Matching rules applied to a record: one for Manhattan, both top-k readings otherwise."""
    if record.manhattan:
        return {MANHATTAN_RULE: TopK(rule=TopKRule.GT)}
    return {
        TOP_K_GT_RULE: TopK(rule=TopKRule.GT),
        TOP_K_PRED_RULE: TopK(rule=TopKRule.PRED),
    }


def _finite_or_none(error: float) -> Optional[float]:
    return error if math.isfinite(error) else None


def evaluate_record(
    index: int,
    record: ManifestRecord,
    manifest_path: str,
    config: "RunConfig",
    detector_name: str = "sphere",
    cache_dir: Optional[str] = None,
    run_log_path: Optional[str] = None,
) -> ImageEvaluation:
    """
    Detect on one manifest image and match the result against its ground truth.

    Unreadable images and pipeline failures come back as FAILED records; an image without
    line evidence counts every ground truth as a miss.
    """
    rules = rules_for(record)
    n_gt = len(record.vps)
    try:
        ground_truth = record.ground_truth(config.camera.default_focal)
        intrinsics, focal_source = CameraIntrinsics.from_record(
            record.width,
            record.height,
            record.focal,
            record.cx,
            record.cy,
            config.camera.default_focal,
        )
        image = load_image(resolve_image_path(record, manifest_path))
    except (VPError, ValueError) as e:
        logger.error("evaluation_image_failed", index=index, image=record.image, error=str(e))
        return ImageEvaluation(
            index=index, image=record.image, status=ImageStatus.FAILED, n_gt=n_gt, error=str(e)
        )

    from ..pipeline.base_detector import DetectionRequest, DetectionStatus

    detector = _worker_detector(detector_name, config, cache_dir, run_log_path)
    result = detector.execute(
        DetectionRequest(
            image=image, intrinsics=intrinsics, focal_source=focal_source, image_id=record.image
        )
    )
    cache_hash = getattr(detector, "last_cache_hash", None)

    if result.status == DetectionStatus.FAILED:
        return ImageEvaluation(
            index=index,
            image=record.image,
            status=ImageStatus.FAILED,
            n_gt=n_gt,
            focal_source=focal_source.value,
            cache_hash=cache_hash,
            error=result.error,
        )

    if result.status == DetectionStatus.NO_EVIDENCE:
        return ImageEvaluation(
            index=index,
            image=record.image,
            status=ImageStatus.NO_EVIDENCE,
            n_gt=n_gt,
            errors_deg={name: [None] * n_gt for name in rules},
            focal_source=focal_source.value,
            cache_hash=cache_hash,
            error=result.error,
        )

    preds = result.output.directions()
    gts = ground_truth.directions()
    errors = {
        name: [_finite_or_none(m.error_deg) for m in match_bipartite(preds, gts, rule)]
        for name, rule in rules.items()
    }
    return ImageEvaluation(
        index=index,
        image=record.image,
        status=ImageStatus.SUCCESS,
        n_gt=n_gt,
        n_pred=len(result.output.vps),
        errors_deg=errors,
        focal_source=focal_source.value,
        cache_hash=cache_hash,
    )


def _evaluate_task(args: tuple) -> ImageEvaluation:
    return evaluate_record(*args)


def summarize_rule(name: str, errors: Sequence[Optional[float]], config: EvalConfig) -> RuleSummary:
    """Angle accuracy rows at the configured thresholds plus the recall curve and its AUC."""
    values = sorted(math.inf if e is None else e for e in errors)
    fraction = angle_accuracy(values, config.thresholds_deg, AAMode.FRACTION)
    auc_mode = angle_accuracy(values, config.thresholds_deg, AAMode.AUC)
    taus, recall, auc = recall_auc(values, config.tau_max_deg, config.recall_step_deg)
    rows = [
        ThresholdRow(tau_deg=tau, aa_fraction=f, aa_auc=a, recall=f)
        for tau, f, a in zip(config.thresholds_deg, fraction, auc_mode)
    ]
    return RuleSummary(
        rule=name,
        total=len(values),
        matched=sum(1 for e in values if math.isfinite(e)),
        rows=rows,
        auc=auc,
        recall_curve=[(round(float(t), 6), float(r)) for t, r in zip(taus, recall)],
    )


def aggregate(evaluations: Sequence[ImageEvaluation], config: EvalConfig) -> dict[str, RuleSummary]:
    """Pool per-image errors by rule; failed images do not enter the metrics."""
    pooled: dict[str, list[Optional[float]]] = {}
    for evaluation in evaluations:
        if evaluation.status == ImageStatus.FAILED:
            continue
        for name, errors in evaluation.errors_deg.items():
            pooled.setdefault(name, []).extend(errors)
    return {
        name: summarize_rule(name, errors, config)
        for name, errors in sorted(pooled.items())
        if errors
    }


def evaluate_manifest(
    manifest_path: str | Path,
    config: Optional["RunConfig"] = None,
    detector_name: str = "sphere",
    workers: int = 1,
    cache_dir: Optional[str | Path] = None,
    run_log_path: Optional[str | Path] = None,
) -> EvalReport:
    """
    Evaluate a detector on every record of a manifest.

    Args:
        manifest_path: JSON-lines manifest
        config: Resolved run configuration (defaults when omitted)
        detector_name: Registered detector to run
        workers: Worker processes; 1 evaluates in this process
        cache_dir: Mapping cache directory shared by the workers, if any
        run_log_path: JSON-lines file receiving one execution record per image

    Returns:
        Report with per-image records in manifest order and per-rule summaries

    Raises:
        ManifestError: Manifest cannot be parsed or is empty
        IoError: Manifest unreadable
    """
    if config is None:
        from ..config import RunConfig

        config = RunConfig()

    records = read_manifest(manifest_path)
    cache = str(cache_dir) if cache_dir is not None else None
    run_log = str(run_log_path) if run_log_path is not None else None
    tasks = [
        (i, record, str(manifest_path), config, detector_name, cache, run_log)
        for i, record in enumerate(records)
    ]

    logger.info(
        "evaluation_started", manifest=str(manifest_path), images=len(records), workers=workers
    )
    if workers <= 1 or len(tasks) <= 1:
        evaluations = [_evaluate_task(task) for task in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            evaluations = list(pool.map(_evaluate_task, tasks))

    failures = sum(1 for e in evaluations if e.status == ImageStatus.FAILED)
    report = EvalReport(
        manifest=str(manifest_path),
        config_hash=config.config_hash(),
        cache_hashes=sorted({e.cache_hash for e in evaluations if e.cache_hash}),
        detector=detector_name,
        images=len(evaluations),
        failures=failures,
        per_image=evaluations,
        summaries=aggregate(evaluations, config.evaluation),
        config=config.model_dump(mode="json"),
    )
    logger.info(
        "evaluation_completed",
        images=report.images,
        failures=failures,
        rules={name: round(s.auc, 4) for name, s in report.summaries.items()},
    )
    return report


def curve_rows(report: EvalReport, config: EvalConfig) -> list[dict[str, Any]]:
    """Plot-ready (rule, tau, AA fraction, AA auc, recall) rows on the recall grid, tau > 0."""
    pooled: dict[str, list[float]] = {}
    for evaluation in report.per_image:
        if evaluation.status == ImageStatus.FAILED:
            continue
        for name, errors in evaluation.errors_deg.items():
            pooled.setdefault(name, []).extend(math.inf if e is None else e for e in errors)

    rows = []
    for name in sorted(pooled):
        errors = sorted(pooled[name])
        if not errors:
            continue
        taus, recall, _ = recall_auc(errors, config.tau_max_deg, config.recall_step_deg)
        positive = [float(t) for t in taus if t > 0]
        fraction = angle_accuracy(errors, positive, AAMode.FRACTION)
        auc_mode = angle_accuracy(errors, positive, AAMode.AUC)
        for tau, f, a, r in zip(positive, fraction, auc_mode, recall[1:]):
            rows.append(
                {
                    "rule": name,
                    "tau_deg": round(tau, 6),
                    "aa_fraction": f,
                    "aa_auc": a,
                    "recall": float(r),
                }
            )
    return rows


def _write_csv(path: str | Path, fieldnames: list[str], rows: list[dict[str, Any]]) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="utf-8", newline="") as f:
            writer = csv.DictWriter(f, fieldnames=fieldnames, lineterminator="\n")
            writer.writeheader()
            writer.writerows(rows)
    except OSError as e:
        raise IoError(f"Cannot write {path}: {e}") from e
    return path


def write_curves_csv(report: EvalReport, path: str | Path, config: EvalConfig) -> Path:
    """
    Write the AA and recall curves of a report as CSV.

    Raises:
        IoError: Output not writable
    """
    return _write_csv(
        path, ["rule", "tau_deg", "aa_fraction", "aa_auc", "recall"], curve_rows(report, config)
    )


def write_report(report: EvalReport, path: str | Path) -> Path:
    """
    Write a report as indented JSON.

    Raises:
        IoError: Output not writable
    """
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(report.model_dump_json(indent=2) + "\n", encoding="utf-8")
    except OSError as e:
        raise IoError(f"Cannot write report {path}: {e}") from e
    return path


def run_sweep(
    manifest_path: str | Path,
    base_config: "RunConfig",
    axes: dict[str, Sequence[int]],
    detector_name: str = "sphere",
    workers: int = 1,
    cache_dir: Optional[str | Path] = None,
) -> list[SweepRow]:
    """
    Evaluate a manifest once per quantization setting.

    Each axis value is applied to the base configuration on its own; the other axis keeps its
    base value.

    Args:
        manifest_path: JSON-lines manifest
        base_config: Configuration every sweep point starts from
        axes: Values per axis, keys "n_theta" (angle bins) and "n_points" (lattice size)
        detector_name: Registered detector to run
        workers: Worker processes per evaluation
        cache_dir: Mapping cache directory

    Returns:
        One row per (axis, value, rule)

    Raises:
        ConfigError: Unknown axis or invalid value
    """
    rows = []
    for axis, values in axes.items():
        if axis not in SWEEP_AXES:
            raise ConfigError(f"unknown sweep axis '{axis}', expected one of {sorted(SWEEP_AXES)}")
        for value in values:
            config = base_config.with_overrides({SWEEP_AXES[axis]: int(value)})
            report = evaluate_manifest(manifest_path, config, detector_name, workers, cache_dir)
            for name, summary in report.summaries.items():
                rows.append(
                    SweepRow(
                        axis=axis,
                        value=int(value),
                        rule=name,
                        config_hash=report.config_hash,
                        failures=report.failures,
                        aa_fraction={f"{r.tau_deg:g}": r.aa_fraction for r in summary.rows},
                        aa_auc={f"{r.tau_deg:g}": r.aa_auc for r in summary.rows},
                        auc=summary.auc,
                    )
                )
            logger.info("sweep_point_done", axis=axis, value=int(value), failures=report.failures)
    return rows


def write_sweep_csv(rows: Sequence[SweepRow], path: str | Path) -> Path:
    """
    One CSV line per sweep row with AA columns per threshold.

    Raises:
        IoError: Output not writable
    """
    thresholds: list[str] = []
    for row in rows:
        for tau in row.aa_fraction:
            if tau not in thresholds:
                thresholds.append(tau)
    fieldnames = ["axis", "value", "rule", "config_hash", "failures", "auc"]
    fieldnames += [f"aa_fraction@{t}" for t in thresholds] + [f"aa_auc@{t}" for t in thresholds]

    records = []
    for row in rows:
        record: dict[str, Any] = {
            "axis": row.axis,
            "value": row.value,
            "rule": row.rule,
            "config_hash": row.config_hash,
            "failures": row.failures,
            "auc": row.auc,
        }
        for t in thresholds:
            record[f"aa_fraction@{t}"] = row.aa_fraction.get(t, "")
            record[f"aa_auc@{t}"] = row.aa_auc.get(t, "")
        records.append(record)
    return _write_csv(path, fieldnames, records)


__all__ = [
    "MANHATTAN_RULE",
    "TOP_K_GT_RULE",
    "TOP_K_PRED_RULE",
    "aggregate",
    "curve_rows",
    "evaluate_manifest",
    "evaluate_record",
    "rules_for",
    "run_sweep",
    "summarize_rule",
    "write_curves_csv",
    "write_report",
    "write_sweep_csv",
]
