"""
Sphere NMS Detector

Ablation of the default pipeline: candidates come from non-maximum suppression on the
smoothed lattice field instead of density clustering.
"""

from typing import Optional

from vp_core.config import RunConfig
from vp_core.detect.clustering import sphere_nms
from vp_core.detect.models import VanishingPoint
from vp_core.pipeline.run_log import RunLogService
from vp_core.sphere.cache import MappingCacheService
from vp_core.sphere.models import SphereField

from .sphere_voting import SphereVotingDetector


class SphereNMSDetector(SphereVotingDetector):
    """Sphere voting with suppression-based peak picking."""

    def __init__(
        self,
        config: Optional[RunConfig] = None,
        cache: Optional[MappingCacheService] = None,
        run_log: Optional[RunLogService] = None,
    ):
        super().__init__(config, cache=cache, run_log=run_log, detector_type="sphere_nms")

    def candidates(self, field: SphereField) -> list[VanishingPoint]:
        detector = self.config.detector
        top = detector.max_vps or max(detector.shortlist, 8)
        return sphere_nms(field, self.config.cluster.merge_radius, top)
