"""
Configuration Management

Process settings come from the environment (VP_ prefix, .env supported). Run settings are a
layered structure: built-in defaults, then an optional JSON file, then command line
overrides, validated as a whole before any stage runs.
"""

import hashlib
import json
import os
from copy import deepcopy
from functools import lru_cache
from pathlib import Path
from typing import Any, Optional

from pydantic import BaseModel, Field, ValidationError, field_validator, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from .camera.models import CameraDefaults
from .detect.models import ClusterConfig, DetectorConfig
from .errors import ConfigError, IoError
from .evaluation.models import EvalConfig
from .hough.models import HoughParams
from .imaging.models import EdgeConfig
from .sphere.models import LatticeConfig, MappingConfig


class VPSettings(BaseSettings):
    """
    Process-wide settings.

    Loads from environment variables with .env file support.
    """

    model_config = SettingsConfigDict(
        env_prefix="VP_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    cache_dir: Path = Field(default=Path("~/.cache/vp-sphere"))
    log_level: str = Field(default="INFO")
    log_json: bool = Field(default=False)
    workers: Optional[int] = Field(default=None, ge=1)

    @field_validator("log_level")
    @classmethod
    def validate_log_level(cls, v: str) -> str:
        """Ensure the level is one the logging module knows."""
        level = v.upper()
        if level not in {"DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"}:
            raise ValueError(f"unknown log level {v}")
        return level

    @property
    def resolved_cache_dir(self) -> Path:
        return self.cache_dir.expanduser()

    @property
    def resolved_workers(self) -> int:
        return self.workers or os.cpu_count() or 1


@lru_cache()
def get_settings() -> VPSettings:
    """
    Get cached process settings.

    Uses lru_cache to ensure the environment is read only once.
    """
    return VPSettings()


class RunConfig(BaseModel):
    """Every tunable of a run, resolved before the pipeline starts."""

    hough: HoughParams = Field(default_factory=HoughParams)
    lattice: LatticeConfig = Field(default_factory=LatticeConfig)
    mapping: MappingConfig = Field(default_factory=MappingConfig)
    edges: EdgeConfig = Field(default_factory=EdgeConfig)
    cluster: ClusterConfig = Field(default_factory=ClusterConfig)
    detector: DetectorConfig = Field(default_factory=DetectorConfig)
    evaluation: EvalConfig = Field(default_factory=EvalConfig)
    camera: CameraDefaults = Field(default_factory=CameraDefaults)

    @model_validator(mode="after")
    def peak_window_fits(self) -> "RunConfig":
        if self.detector.filter_theta_window > self.hough.n_theta:
            raise ValueError("detector.filter_theta_window exceeds hough.n_theta")
        return self

    def config_hash(self) -> str:
        """SHA-256 of the canonical JSON dump."""
        canonical = json.dumps(self.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode()).hexdigest()

    def with_overrides(self, overrides: dict[str, Any]) -> "RunConfig":
        """Copy with dotted-key overrides applied and revalidated."""
        return _validate(deep_merge(self.model_dump(mode="json"), expand_dotted(overrides)))


def deep_merge(base: dict[str, Any], update: dict[str, Any]) -> dict[str, Any]:
    """Recursively merge `update` into a copy of `base`; non-dict values replace."""
    merged = deepcopy(base)
    for key, value in update.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = deep_merge(merged[key], value)
        else:
            merged[key] = deepcopy(value)
    return merged


def expand_dotted(flat: dict[str, Any]) -> dict[str, Any]:
    """{"a.b": 1} -> {"a": {"b": 1}}; None values are dropped (flag not given)."""
    nested: dict[str, Any] = {}
    for key, value in flat.items():
        if value is None:
            continue
        node = nested
        *parents, leaf = key.split(".")
        for part in parents:
            node = node.setdefault(part, {})
        node[leaf] = value
    return nested


def _validate(payload: dict[str, Any]) -> RunConfig:
    try:
        return RunConfig.model_validate(payload)
    except ValidationError as e:
        first = e.errors()[0]
        location = ".".join(str(part) for part in first["loc"])
        raise ConfigError(f"invalid configuration at '{location}': {first['msg']}") from e


def load_config_file(path: str | Path) -> dict[str, Any]:
    """
    Read a JSON config file.

    Raises:
        IoError: File missing or unreadable
        ConfigError: Not a JSON object
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise IoError(f"Cannot read config {path}: {e}") from e
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"config {path} is not valid JSON: {e.msg}") from e
    if not isinstance(payload, dict):
        raise ConfigError(f"config {path} must hold a JSON object")
    return payload


def resolve_run_config(
    config_path: Optional[str | Path] = None, overrides: Optional[dict[str, Any]] = None
) -> RunConfig:
    """
    Resolve defaults <- config file <- overrides.

    Args:
        config_path: Optional JSON file with a (partial) RunConfig
        overrides: Dotted keys such as "hough.n_theta"; None values are ignored

    Returns:
        Validated run configuration

    Raises:
        ConfigError: Invalid value at any layer
    """
    payload = RunConfig().model_dump(mode="json")
    if config_path is not None:
        payload = deep_merge(payload, load_config_file(config_path))
    if overrides:
        payload = deep_merge(payload, expand_dotted(overrides))
    return _validate(payload)
