"""
Dataset Manifests

JSON-lines files with one image record per line.
"""

import json
from pathlib import Path
from typing import Iterable

from pydantic import ValidationError

from ..errors import IoError, ManifestError
from .models import ManifestRecord


def read_manifest(path: str | Path) -> list[ManifestRecord]:
    """
    Parse a manifest; blank lines are skipped.

    Raises:
        IoError: File missing or unreadable
        ManifestError: Empty manifest, invalid JSON or an invalid record (with line and
            field diagnostics)
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise IoError(f"Cannot read manifest {path}: {e}") from e

    records = []
    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            payload = json.loads(line)
        except json.JSONDecodeError as e:
            raise ManifestError(f"invalid JSON: {e.msg}", line=line_no) from e
        if not isinstance(payload, dict):
            raise ManifestError("record must be a JSON object", line=line_no)
        try:
            records.append(ManifestRecord.model_validate(payload))
        except ValidationError as e:
            first = e.errors()[0]
            field = ".".join(str(part) for part in first["loc"]) if first["loc"] else None
            raise ManifestError(first["msg"], line=line_no, field=field) from e

    if not records:
        raise ManifestError(f"manifest {path} has no records")
    return records


def write_manifest(records: Iterable[ManifestRecord], path: str | Path) -> Path:
    """Write records as JSON lines."""
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="utf-8") as f:
            for record in records:
                f.write(json.dumps(record.model_dump(mode="json"), sort_keys=True) + "\n")
    except OSError as e:
        raise IoError(f"Cannot write manifest {path}: {e}") from e
    return path


def resolve_image_path(record: ManifestRecord, manifest_path: str | Path) -> Path:
    """Image path of a record; relative paths are taken from the manifest's directory."""
    image = Path(record.image)
    return image if image.is_absolute() else Path(manifest_path).parent / image
