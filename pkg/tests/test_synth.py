import math

import numpy as np
import pytest
from pydantic import ValidationError

from vp_core.camera import angular_distance, is_canonical, lift_pixel
from vp_core.errors import DegenerateFamily, InfeasibleSpec
from vp_core.evaluation import read_manifest
from vp_core.imaging import load_image
from vp_core.synth import (
    DatasetSpec,
    Rasterizer,
    SceneSpec,
    SceneTruth,
    Segment,
    clip_segment,
    generate_scene,
    oracle_vps,
    write_dataset,
)


def segment_normals(truth: SceneTruth, family: int) -> np.ndarray:
    segments = truth.family(family)
    starts = lift_pixel(np.array([s.start for s in segments]), truth.intrinsics)
    ends = lift_pixel(np.array([s.end for s in segments]), truth.intrinsics)
    normals = np.cross(starts, ends)
    return normals / np.linalg.norm(normals, axis=1, keepdims=True)


class TestScene:
    def test_same_seed_same_scene(self):
        spec = SceneSpec(seed=11, image_size=96)
        image_a, truth_a = generate_scene(spec)
        image_b, truth_b = generate_scene(spec)
        assert np.array_equal(image_a.values, image_b.values)
        assert truth_a == truth_b
        _, truth_c = generate_scene(spec.model_copy(update={"seed": 12}))
        assert truth_c.directions != truth_a.directions

    def test_manhattan_directions_are_orthonormal_and_canonical(self):
        _, truth = generate_scene(SceneSpec(seed=3))
        frame = np.array(truth.directions)
        assert np.allclose(frame @ frame.T, np.eye(3), atol=1e-12)
        assert np.all(is_canonical(frame))
        assert truth.manhattan

    def test_segments_are_incident_to_their_direction(self):
        _, truth = generate_scene(SceneSpec(seed=4, lines_per_direction=10))
        for family, direction in enumerate(truth.directions):
            assert len(truth.family(family)) == 10
            assert np.max(np.abs(segment_normals(truth, family) @ np.array(direction))) < 1e-6

    def test_segments_stay_in_the_image_and_are_long_enough(self):
        spec = SceneSpec(seed=5, image_size=128)
        _, truth = generate_scene(spec)
        for segment in truth.segments:
            ends = np.array([segment.start, segment.end])
            assert np.all((ends >= -1e-9) & (ends <= 128 + 1e-9))
            assert np.linalg.norm(ends[1] - ends[0]) >= spec.min_segment_px

    def test_image_is_white_lines_on_black(self):
        image, _ = generate_scene(SceneSpec(seed=6, image_size=64))
        values = image.values
        assert values.max() > 0.5
        assert values.min() == 0.0
        assert np.count_nonzero(values) < values.size // 2
        assert np.allclose(values * 255, np.round(values * 255))

    def test_hard_rasterizer_is_binary(self):
        image, _ = generate_scene(SceneSpec(seed=6, image_size=64, rasterizer=Rasterizer.HARD))
        assert set(np.unique(image.values)) <= {0.0, 1.0}

    def test_outliers_are_labelled(self):
        _, truth = generate_scene(SceneSpec(seed=7, lines_per_direction=4, outlier_fraction=0.5))
        assert len(truth.family(-1)) == 6

    def test_general_scenes_respect_separation(self):
        spec = SceneSpec(seed=8, n_directions=5, manhattan=False, min_separation_deg=20.0)
        _, truth = generate_scene(spec)
        directions = np.array(truth.directions)
        assert directions.shape == (5, 3)
        for i in range(5):
            for j in range(i + 1, 5):
                assert float(angular_distance(directions[i], directions[j])) >= math.radians(20.0)

    def test_infeasible_separation(self):
        spec = SceneSpec(seed=0, n_directions=8, manhattan=False, min_separation_deg=89.0)
        with pytest.raises(InfeasibleSpec):
            generate_scene(spec)

    def test_manhattan_needs_three_directions(self):
        with pytest.raises(ValidationError):
            SceneSpec(n_directions=4, manhattan=True)

    def test_default_focal(self):
        assert SceneSpec(image_size=100).intrinsics.focal == pytest.approx(210.0)
        assert SceneSpec(image_size=100, focal=50.0).intrinsics.focal == 50.0


class TestOracle:
    def test_recovers_directions_exactly_without_noise(self):
        _, truth = generate_scene(SceneSpec(seed=9))
        for recovered, direction in zip(oracle_vps(truth, truth.intrinsics), truth.directions):
            assert float(angular_distance(recovered, direction)) < 1e-8

    def test_error_grows_with_jitter(self):
        def mean_error(sigma: float) -> float:
            errors = []
            for seed in range(6):
                _, truth = generate_scene(SceneSpec(seed=seed, jitter_sigma=sigma, lines_per_direction=12))
                recovered = oracle_vps(truth, truth.intrinsics)
                errors += [float(angular_distance(r, d)) for r, d in zip(recovered, truth.directions)]
            return float(np.mean(errors))

        assert mean_error(0.0) < mean_error(0.5) < mean_error(4.0)

    def test_single_segment_family_is_degenerate(self):
        _, truth = generate_scene(SceneSpec(seed=1, lines_per_direction=1))
        with pytest.raises(DegenerateFamily):
            oracle_vps(truth, truth.intrinsics)

    def test_coplanar_family_is_degenerate(self):
        _, truth = generate_scene(SceneSpec(seed=2, lines_per_direction=2))
        first = truth.family(0)[0]
        segments = [first, Segment(family=0, start=first.end, end=first.start)]
        segments += [s for s in truth.segments if s.family != 0]
        coplanar = truth.model_copy(update={"segments": segments})
        with pytest.raises(DegenerateFamily):
            oracle_vps(coplanar, truth.intrinsics)


class TestClip:
    def test_inside_segment_is_unchanged(self):
        a, b = clip_segment(np.array([1.0, 1.0]), np.array([5.0, 5.0]), 10, 10)
        assert np.allclose(a, [1, 1]) and np.allclose(b, [5, 5])

    def test_crossing_segment_is_cut(self):
        a, b = clip_segment(np.array([-5.0, 5.0]), np.array([15.0, 5.0]), 10, 10)
        assert np.allclose(a, [0, 5]) and np.allclose(b, [10, 5])

    def test_outside_segment_is_dropped(self):
        assert clip_segment(np.array([-5.0, -5.0]), np.array([-1.0, -2.0]), 10, 10) is None


class TestDataset:
    spec = DatasetSpec(scene=SceneSpec(image_size=64), count=3, seed=21)

    def test_dataset_is_reproducible(self, tmp_path):
        write_dataset(self.spec, tmp_path / "a")
        write_dataset(self.spec, tmp_path / "b")
        for name in ["manifest.jsonl", "scene_00000.png", "scene_00001.png", "scene_00002.png"]:
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_saved_images_match_the_render(self, tmp_path):
        records = write_dataset(self.spec, tmp_path)
        assert [r.image for r in records] == ["scene_00000.png", "scene_00001.png", "scene_00002.png"]
        assert read_manifest(tmp_path / "manifest.jsonl") == records

        from vp_core.synth import dataset_scenes

        image, truth = generate_scene(dataset_scenes(self.spec)[1])
        assert np.array_equal(load_image(tmp_path / "scene_00001.png").values, image.values)
        assert records[1].focal == pytest.approx(2.1 * 64)
        assert records[1].vps == truth.directions

    def test_direction_counts_follow_the_range(self, tmp_path):
        spec = DatasetSpec(
            scene=SceneSpec(image_size=64, manhattan=False, n_directions=2),
            count=6,
            seed=4,
            n_directions_range=(2, 8),
        )
        records = write_dataset(spec, tmp_path)
        assert all(2 <= len(r.vps) <= 8 for r in records)
        assert not any(r.manhattan for r in records)

    def test_from_bare_scene_payload(self):
        spec = DatasetSpec.from_payload({"seed": 3, "image_size": 64, "count": 2})
        assert spec.count == 2
        assert spec.seed == 3
        assert spec.scene.image_size == 64
        nested = DatasetSpec.from_payload({"scene": {"image_size": 32}, "count": 4})
        assert nested.count == 4
