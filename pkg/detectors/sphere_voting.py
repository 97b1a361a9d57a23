"""
Sphere Voting Detector

Default pipeline: edges, Hough voting and filtering, projection onto the hemisphere
lattice, k-NN smoothing, density clustering, and for Manhattan scenes orthogonal triple
selection followed by multi-scale refinement.
"""

from collections import OrderedDict
from functools import lru_cache
from typing import Callable, Optional

from structlog import get_logger

from vp_core.camera.models import CameraIntrinsics, FocalSource
from vp_core.config import RunConfig
from vp_core.detect.clustering import cluster_field, sphere_nms
from vp_core.detect.manhattan import select_manhattan_triple
from vp_core.detect.models import Detection, DetectionMode, ScaleSpec, VanishingPoint
from vp_core.detect.multiscale import (
    hemisphere_candidates,
    polish_candidates,
    refine_multiscale,
)
from vp_core.detect.smoothing import smooth_field
from vp_core.errors import DimensionMismatch, NoEvidence
from vp_core.hough.models import HoughGrid
from vp_core.hough.transform import hough_accumulate, hough_filter, hough_peaks
from vp_core.imaging.edges import detect_edges
from vp_core.imaging.io import resize_to_grid
from vp_core.imaging.models import GrayImage, GridTransform
from vp_core.pipeline.base_detector import BaseDetector, DetectionRequest, StageTimer
from vp_core.pipeline.run_log import RunLogService
from vp_core.shared_services.run_context import update_cache_hash
from vp_core.sphere.cache import MappingCacheService
from vp_core.sphere.lattice import fibonacci_hemisphere
from vp_core.sphere.mapping import accumulate_field, build_mapping
from vp_core.sphere.models import LatticeVariant, MappingTable, SphereField, SphereLattice

logger = get_logger()

COARSE_FALLBACK_SCALE = ScaleSpec(delta_deg=90.0, n_points=512)
MAX_SHARED_TABLES = 8

# in-memory mapping tables by cache hash, least recently used first
_shared_tables: "OrderedDict[str, MappingTable]" = OrderedDict()


@lru_cache(maxsize=4)
def shared_lattice(n_points: int, k: int, variant: LatticeVariant) -> SphereLattice:
    """Process-wide lattice reuse across detector instances."""
    return fibonacci_hemisphere(n_points, k, variant)


def shared_mapping(key: str, build: Callable[[], MappingTable]) -> MappingTable:
    """
    Process-wide mapping table for a cache hash, built on first use.

    Keeps the MAX_SHARED_TABLES most recently used tables.
    """
    table = _shared_tables.get(key)
    if table is not None:
        _shared_tables.move_to_end(key)
        return table
    table = build()
    _shared_tables[key] = table
    if len(_shared_tables) > MAX_SHARED_TABLES:
        evicted, _ = _shared_tables.popitem(last=False)
        logger.debug("mapping_evicted", cache_hash=evicted)
    return table


def grid_intrinsics(
    intrinsics: CameraIntrinsics, transform: GridTransform, side: int
) -> CameraIntrinsics:
    """Intrinsics of the square working grid; rays keep their directions."""
    return intrinsics.rescaled(
        transform.scale, transform.offset_x, transform.offset_y, width=side, height=side
    )


class SphereVotingDetector(BaseDetector):
    """
    Vanishing point detector voting Hough lines onto the Gaussian hemisphere.

    Lattices and mapping tables are prepared once per configuration and intrinsics and
    reused across images and detector instances.
    """

    def __init__(
        self,
        config: Optional[RunConfig] = None,
        cache: Optional[MappingCacheService] = None,
        run_log: Optional[RunLogService] = None,
        detector_type: str = "sphere_voting",
    ):
        """
        Initialize the detector.

        Args:
            config: Resolved run configuration (defaults when omitted)
            cache: Mapping table cache; tables are built in memory when omitted
            run_log: Execution record sink
            detector_type: Type identifier used in logs and records
        """
        super().__init__(detector_type, config or RunConfig(), run_log=run_log)
        self.cache = cache
        self._tables: dict[int, MappingTable] = {}
        self.last_cache_hash: Optional[str] = None

    @property
    def lattice(self) -> SphereLattice:
        lattice = self.config.lattice
        return shared_lattice(lattice.n_points, lattice.k, lattice.variant)

    def mapping_for(self, intrinsics: CameraIntrinsics) -> MappingTable:
        """Mapping table for grid intrinsics, from memory, the cache or a fresh build."""
        key = intrinsics.content_hash()
        self.last_cache_hash = MappingCacheService.cache_key(
            self.config.hough, self.lattice, intrinsics, self.config.mapping
        )
        update_cache_hash(self.last_cache_hash)
        if key not in self._tables:
            args = (self.config.hough, self.lattice, intrinsics, self.config.mapping)
            if self.cache is not None:
                table = self.cache.get_or_build(*args)
            else:
                table = shared_mapping(self.last_cache_hash, lambda: build_mapping(*args))
            self._tables[key] = table
        return self._tables[key]

    def prepare_grid(
        self, image: GrayImage, intrinsics: CameraIntrinsics
    ) -> tuple[HoughGrid, CameraIntrinsics]:
        """
        Filtered Hough grid of an image and the matching grid intrinsics.

        Raises:
            DimensionMismatch: Intrinsics describe a different image size
            NoEvidence: Nothing survives the Hough filter
        """
        if intrinsics.image_size != (image.width, image.height):
            raise DimensionMismatch(
                f"intrinsics are for {intrinsics.width}x{intrinsics.height}, "
                f"image is {image.width}x{image.height}"
            )
        side = self.config.hough.grid_side
        grid_image, transform = resize_to_grid(image, side)
        letterboxed = transform.content_box != (0, 0, side, side)
        edges = detect_edges(
            grid_image, self.config.edges, transform.content_box if letterboxed else None
        )
        detector = self.config.detector
        votes = hough_accumulate(edges, self.config.hough)
        if detector.filter_theta_window == 1:
            grid = hough_filter(votes, window=detector.filter_window, floor=detector.filter_floor)
        else:
            grid = hough_peaks(
                votes,
                window=detector.filter_window,
                theta_window=detector.filter_theta_window,
                floor=detector.filter_floor,
            )
        if grid.total <= 0:
            raise NoEvidence("no Hough bin survives filtering")
        return grid, grid_intrinsics(intrinsics, transform, side)

    def candidates(self, field: SphereField) -> list[VanishingPoint]:
        """Ranked candidate directions of a smoothed field."""
        return cluster_field(field, self.config.cluster, self.config.detector.threshold_quantile)

    def _detect(self, request: DetectionRequest, timer: StageTimer) -> Detection:
        detector = self.config.detector
        grid, intrinsics = self.prepare_grid(request.image, request.intrinsics)
        timer.lap("hough")

        meta = {
            "mode": detector.mode,
            "focal_source": request.focal_source,
            "scales": detector.scales,
            "lattice_points": self.config.lattice.n_points,
        }

        if detector.mode == DetectionMode.MANHATTAN and not detector.full_lattice:
            return self._manhattan_fast(grid, intrinsics, timer, meta)

        table = self.mapping_for(intrinsics)
        timer.lap("mapping")
        field = smooth_field(
            accumulate_field(grid, table, self.lattice), detector.smoothing_rounds
        )
        timer.lap("sphere")
        candidates = self.candidates(field)
        timer.lap("cluster")
        logger.debug("candidates_ranked", count=len(candidates), mass=field.total)

        if detector.mode == DetectionMode.MANHATTAN and len(candidates) < 3:
            candidates = sphere_nms(field, self.config.cluster.merge_radius, detector.shortlist)
        # full-lattice anchors are already finer than a hemispheric scale
        local = [scale for scale in detector.scales if not scale.hemispheric]
        if detector.polish_top:
            candidates = polish_candidates(
                candidates,
                grid,
                intrinsics,
                local,
                self.config.cluster.merge_radius,
                detector.polish_top,
            )
            timer.lap("polish")

        if detector.mode == DetectionMode.MULTI:
            if not candidates:
                raise NoEvidence("no cluster on the sphere")
            vps = candidates[: detector.max_vps] if detector.max_vps else candidates
            return Detection(vps=vps, **meta)

        return self._manhattan(candidates, grid, intrinsics, local, timer, meta)

    def _manhattan(
        self,
        candidates: list[VanishingPoint],
        grid: HoughGrid,
        intrinsics: CameraIntrinsics,
        scales: list[ScaleSpec],
        timer: StageTimer,
        meta: dict,
    ) -> Detection:
        detector = self.config.detector
        triple = select_manhattan_triple(candidates, detector.ortho_tol, detector.shortlist)
        timer.lap("triple")
        refined = refine_multiscale(
            triple.vps, grid, intrinsics, scales, snap=detector.snap_manhattan
        )
        timer.lap("refine")
        return Detection(
            vps=refined.vps,
            relaxed=triple.relaxed,
            raw_vps=refined.raw_vps if detector.snap_manhattan else None,
            **meta,
        )

    def _manhattan_fast(
        self, grid: HoughGrid, intrinsics: CameraIntrinsics, timer: StageTimer, meta: dict
    ) -> Detection:
        detector = self.config.detector
        scales = detector.scales
        coarse = scales[0] if scales[0].hemispheric else COARSE_FALLBACK_SCALE
        candidates = hemisphere_candidates(
            grid, intrinsics, coarse, self.config.cluster.merge_radius, detector.shortlist
        )
        timer.lap("coarse")
        remaining = scales[1:] if scales[0].hemispheric else scales
        return self._manhattan(candidates, grid, intrinsics, remaining, timer, meta)


def detect_vps(
    image: GrayImage,
    intrinsics: CameraIntrinsics,
    config: Optional[RunConfig] = None,
    focal_source: FocalSource = FocalSource.PROVIDED,
    cache: Optional[MappingCacheService] = None,
) -> Detection:
    """
    Detect vanishing points in one image.

    Args:
        image: Luminance image
        intrinsics: Camera intrinsics of the image
        config: Run configuration (defaults when omitted)
        focal_source: Recorded in the result
        cache: Mapping table cache

    Returns:
        Ranked detection

    Raises:
        NoEvidence: Filtered Hough grid is empty
        VPError: Any stage failure
    """
    detector = SphereVotingDetector(config, cache=cache)
    request = DetectionRequest(image=image, intrinsics=intrinsics, focal_source=focal_source)
    return detector.detect(request)
