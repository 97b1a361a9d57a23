import math
from collections import OrderedDict

import numpy as np
import pytest

import detectors.sphere_voting as sphere_voting
from detectors import (
    DETECTORS,
    SphereNMSDetector,
    SphereVotingDetector,
    build_detector,
    detect_vps,
)
from vp_core.camera.models import FocalSource
from vp_core.config import RunConfig
from vp_core.detect.models import DetectionMode, DetectorConfig
from vp_core.errors import NoEvidence
from vp_core.evaluation import match_bipartite, match_errors, recall_auc
from vp_core.hough.models import HoughParams
from vp_core.imaging.models import GrayImage
from vp_core.pipeline.base_detector import DetectionRequest, DetectionStatus
from vp_core.sphere.lattice import cap_spacing
from vp_core.sphere.models import LatticeConfig, MappingConfig
from vp_core.synth import SceneSpec, generate_scene

ACCURACY_SIDE = 128
ACCURACY_SEEDS = range(10)


@pytest.fixture(scope="module")
def manhattan_scene():
    return generate_scene(SceneSpec(seed=11, image_size=64))


@pytest.fixture(scope="module")
def accuracy_config() -> RunConfig:
    return RunConfig(
        hough=HoughParams(n_rho=184, n_theta=180, grid_side=ACCURACY_SIDE),
        lattice=LatticeConfig(n_points=8192, k=8),
        mapping=MappingConfig(m_samples=256),
        detector=DetectorConfig(smoothing_rounds=1),
    )


def error_bound(config: RunConfig) -> float:
    """Twice the point spacing of the finest patch plus half an angle bin, in degrees."""
    finest = config.detector.scales[-1]
    spacing = math.degrees(cap_spacing(finest.delta, finest.n_points))
    return 2.0 * spacing + 0.5 * math.degrees(config.hough.theta_step)


class TestDetectVps:
    def test_manhattan_frame(self, manhattan_scene, small_config):
        image, truth = manhattan_scene
        detection = detect_vps(image, truth.intrinsics, small_config)

        assert detection.mode == DetectionMode.MANHATTAN
        assert len(detection.vps) == 3
        assert detection.lattice_points == small_config.lattice.n_points
        assert detection.raw_vps is not None and len(detection.raw_vps) == 3

        frame = detection.directions()
        np.testing.assert_allclose(frame @ frame.T, np.eye(3), atol=1e-6)
        assert all(vp.vector[2] >= 0.0 for vp in detection.vps)

    def test_deterministic(self, manhattan_scene, small_config):
        image, truth = manhattan_scene
        first = detect_vps(image, truth.intrinsics, small_config)
        second = detect_vps(image, truth.intrinsics, small_config)
        assert first.to_json() == second.to_json()

    def test_focal_source_recorded(self, manhattan_scene, small_config):
        image, truth = manhattan_scene
        detection = detect_vps(image, truth.intrinsics, small_config, FocalSource.DEFAULT)
        assert detection.focal_source == FocalSource.DEFAULT

    def test_multi_mode_is_ranked(self, manhattan_scene, small_config):
        image, truth = manhattan_scene
        config = small_config.with_overrides({"detector.mode": "multi"})
        detection = detect_vps(image, truth.intrinsics, config)
        assert detection.mode == DetectionMode.MULTI
        confidences = [vp.confidence for vp in detection.vps]
        assert confidences == sorted(confidences, reverse=True)

    def test_blank_image(self, manhattan_scene, small_config):
        _, truth = manhattan_scene
        with pytest.raises(NoEvidence):
            detect_vps(GrayImage(np.zeros((64, 64))), truth.intrinsics, small_config)

    def test_peak_window_thins_the_grid(self, manhattan_scene, small_config):
        image, truth = manhattan_scene
        offsets_only = small_config.with_overrides({"detector.filter_theta_window": 1})
        peaks, _ = SphereVotingDetector(small_config).prepare_grid(image, truth.intrinsics)
        columns, _ = SphereVotingDetector(offsets_only).prepare_grid(image, truth.intrinsics)
        assert 0 < peaks.active_bins().size < columns.active_bins().size


class TestAccuracy:
    def test_manhattan_scenes_match_ground_truth(self, accuracy_config):
        errors = []
        for seed in ACCURACY_SEEDS:
            image, truth = generate_scene(SceneSpec(seed=seed, image_size=ACCURACY_SIDE))
            detection = detect_vps(image, truth.intrinsics, accuracy_config)
            matches = match_bipartite(detection.directions(), np.array(truth.directions))
            errors.extend(match_errors(matches))

        assert len(errors) == 3 * len(ACCURACY_SEEDS)
        assert float(np.median(errors)) <= error_bound(accuracy_config)
        assert np.mean(np.asarray(errors) <= 10.0) >= 0.9

    def test_five_direction_scenes_are_recalled(self, accuracy_config):
        config = accuracy_config.with_overrides({"detector.mode": "multi"})
        errors = []
        for seed in range(5):
            spec = SceneSpec(
                seed=seed,
                image_size=ACCURACY_SIDE,
                manhattan=False,
                n_directions=5,
                lines_per_direction=6,
            )
            image, truth = generate_scene(spec)
            detection = detect_vps(image, truth.intrinsics, config)
            matches = match_bipartite(detection.directions(), np.array(truth.directions))
            errors.extend(match_errors(matches))

        _, _, auc = recall_auc(errors, tau_max=10.0)
        assert auc > 0.3


class TestSharedMappings:
    @pytest.fixture
    def builds(self, monkeypatch):
        calls = []
        real_build = sphere_voting.build_mapping

        def counting_build(*args):
            calls.append(args[2].focal)
            return real_build(*args)

        monkeypatch.setattr(sphere_voting, "build_mapping", counting_build)
        monkeypatch.setattr(sphere_voting, "_shared_tables", OrderedDict())
        return calls

    def test_detect_calls_share_one_table(self, builds, manhattan_scene, small_config):
        image, truth = manhattan_scene
        detect_vps(image, truth.intrinsics, small_config)
        detect_vps(image, truth.intrinsics, small_config)
        build_detector("nms", small_config).detect(
            DetectionRequest(image=image, intrinsics=truth.intrinsics)
        )
        assert len(builds) == 1

    def test_other_intrinsics_build_another_table(self, builds, manhattan_scene, small_config):
        image, truth = manhattan_scene
        detect_vps(image, truth.intrinsics, small_config)
        wider = truth.intrinsics.model_copy(update={"focal": 0.8 * truth.intrinsics.focal})
        detect_vps(image, wider, small_config)
        assert builds == [truth.intrinsics.focal, wider.focal]

    def test_least_recently_used_table_is_evicted(self, builds):
        made = []

        def build_for(key):
            def build():
                made.append(key)
                return key

            return build

        keys = [f"table-{i}" for i in range(sphere_voting.MAX_SHARED_TABLES + 1)]
        for key in keys:
            sphere_voting.shared_mapping(key, build_for(key))
        sphere_voting.shared_mapping(keys[-1], build_for(keys[-1]))
        sphere_voting.shared_mapping(keys[0], build_for(keys[0]))
        assert made == keys + [keys[0]]


class TestRegistry:
    def test_known_detectors(self, small_config):
        assert set(DETECTORS) == {"sphere", "nms"}
        assert isinstance(build_detector("nms", small_config), SphereNMSDetector)

    def test_unknown_detector(self, small_config):
        with pytest.raises(KeyError):
            build_detector("lsd", small_config)

    def test_nms_detector_executes(self, manhattan_scene, small_config):
        image, truth = manhattan_scene
        detector = build_detector("nms", small_config)
        result = detector.execute(DetectionRequest(image=image, intrinsics=truth.intrinsics))
        assert result.status == DetectionStatus.SUCCESS
        assert len(result.output.vps) == 3
