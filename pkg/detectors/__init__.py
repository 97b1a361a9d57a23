"""
Detectors Module

Concrete vanishing point detectors built on vp_core.
"""

from typing import Optional

from vp_core.config import RunConfig
from vp_core.pipeline.base_detector import BaseDetector
from vp_core.pipeline.run_log import RunLogService
from vp_core.sphere.cache import MappingCacheService

from .sphere_nms import SphereNMSDetector
from .sphere_voting import SphereVotingDetector, detect_vps

__version__ = "0.1.0"

DETECTORS = {
    "sphere": SphereVotingDetector,
    "nms": SphereNMSDetector,
}


def build_detector(
    name: str,
    config: Optional[RunConfig] = None,
    cache: Optional[MappingCacheService] = None,
    run_log: Optional[RunLogService] = None,
) -> BaseDetector:
    """
    Instantiate a registered detector.

    Raises:
        KeyError: Unknown detector name
    """
    return DETECTORS[name](config, cache=cache, run_log=run_log)


__all__ = [
    "DETECTORS",
    "SphereNMSDetector",
    "SphereVotingDetector",
    "build_detector",
    "detect_vps",
]
