import math

import numpy as np
import pytest
from pydantic import ValidationError

from vp_core.camera import CameraIntrinsics, angular_distance
from vp_core.detect import (
    ClusterConfig,
    Detection,
    DetectionMode,
    DetectorConfig,
    ScaleSpec,
    VanishingPoint,
    assign_lines,
    cluster_field,
    grid_lines,
    nearest_orthonormal_frame,
    polish_candidates,
    refine_multiscale,
    render_overlay,
    select_manhattan_triple,
    smooth_field,
    sphere_nms,
)
from vp_core.detect.assignment import UNASSIGNED
from vp_core.detect.clustering import cosine_distance_matrix, rank_order
from vp_core.errors import InsufficientCandidates, ParamsMismatch
from vp_core.hough import HoughGrid, HoughParams
from vp_core.imaging import GrayImage, GridTransform
from vp_core.sphere.models import SphereField

EX, EY, EZ = np.eye(3)


def vp(vector, confidence: float) -> VanishingPoint:
    return VanishingPoint.from_vector(np.asarray(vector, dtype=np.float64), confidence)


def blob(lattice, center: int, peak: float, values=None) -> np.ndarray:
    """Field values with a peak at `center` and unit mass on its k-NN neighbors."""
    values = np.zeros(lattice.n_points) if values is None else values
    values[lattice.knn[center]] = np.maximum(values[lattice.knn[center]], 1.0)
    values[center] = peak
    return values


def random_frame(rng) -> np.ndarray:
    q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
    return q


def vertical_lines(params) -> HoughGrid:
    votes = np.zeros((params.n_rho, params.n_theta))
    votes[:, 0] = 1.0
    return HoughGrid(params, votes)


class TestModels:
    def test_direction_is_canonicalized(self):
        point = vp([0.0, 0.0, -2.0], 1.0)
        assert point.direction == (0.0, 0.0, 1.0)

    def test_zero_direction_is_rejected(self):
        with pytest.raises(ValidationError):
            vp([0.0, 0.0, 0.0], 1.0)

    def test_detection_requires_descending_confidence(self):
        with pytest.raises(ValidationError):
            Detection(vps=[vp(EX, 1.0), vp(EY, 2.0)], mode=DetectionMode.MULTI)

    def test_detection_json(self):
        detection = Detection(vps=[vp(EZ, 2.0), vp(EX, 1.0)], mode=DetectionMode.MULTI)
        payload = detection.to_json()
        assert payload["mode"] == "multi"
        assert payload["vps"][0]["dir"] == [0.0, 0.0, 1.0]
        assert payload["vps"][1]["azimuth_deg"] == pytest.approx(90.0)
        assert "raw_vps" not in payload
        assert detection.directions().shape == (2, 3)

    def test_config_validation(self):
        with pytest.raises(ValidationError):
            DetectorConfig(filter_window=8)
        with pytest.raises(ValidationError):
            DetectorConfig(filter_theta_window=4)
        with pytest.raises(ValidationError):
            DetectorConfig(scales=[])
        with pytest.raises(ValidationError):
            DetectorConfig(shortlist=2)
        assert [s.n_points for s in DetectorConfig().scales] == [512, 128, 128]


class TestSmoothing:
    def test_zero_rounds_is_identity(self, small_lattice, rng):
        field = SphereField(small_lattice, rng.uniform(size=small_lattice.n_points))
        assert smooth_field(field, 0) is field

    def test_constant_field_is_fixed(self, small_lattice):
        field = SphereField(small_lattice, np.full(small_lattice.n_points, 2.5))
        assert np.allclose(smooth_field(field, 3).values, 2.5)

    def test_one_round_spreads_a_spike(self, small_lattice):
        values = np.zeros(small_lattice.n_points)
        values[100] = 9.0
        smoothed = smooth_field(SphereField(small_lattice, values), 1).values
        receivers = np.flatnonzero(np.any(small_lattice.knn == 100, axis=1))
        assert smoothed[100] == pytest.approx(1.0)
        assert np.allclose(smoothed[receivers], 1.0)
        assert np.count_nonzero(smoothed) == receivers.size + 1

    def test_negative_rounds_are_rejected(self, small_lattice):
        with pytest.raises(ValueError):
            smooth_field(SphereField(small_lattice, np.zeros(small_lattice.n_points)), -1)


class TestClustering:
    config = ClusterConfig(split_peaks=False)

    def test_cosine_distance_identifies_antipodes(self):
        points = np.array([EX, -EX, EY])
        distances = cosine_distance_matrix(points)
        assert distances[0, 1] == 0.0
        assert distances[0, 2] == pytest.approx(1.0)

    def test_rank_order_breaks_ties_by_index(self):
        values = np.array([1.0, 3.0, 3.0, 2.0])
        assert rank_order(values, np.arange(4)).tolist() == [1, 2, 3, 0]

    def test_empty_field_has_no_clusters(self, small_lattice):
        assert cluster_field(SphereField(small_lattice, np.zeros(small_lattice.n_points))) == []

    def test_isolated_spike_is_one_direction(self, small_lattice):
        values = np.zeros(small_lattice.n_points)
        values[10] = 5.0
        field = SphereField(small_lattice, values)
        for config in (self.config, ClusterConfig()):
            vps = cluster_field(field, config)
            assert len(vps) == 1
            assert np.allclose(vps[0].vector, small_lattice.points[10])
            assert vps[0].confidence == 5.0

    def test_sparse_pair_below_min_points_is_noise(self, small_lattice):
        values = np.zeros(small_lattice.n_points)
        values[10], values[small_lattice.knn[10, 0]] = 5.0, 4.0
        assert cluster_field(SphereField(small_lattice, values), self.config) == []

    def test_blob_gives_one_direction_at_its_peak(self, small_lattice):
        values = blob(small_lattice, 10, 8.0)
        vps = cluster_field(SphereField(small_lattice, values), self.config)
        assert len(vps) == 1
        assert np.allclose(vps[0].vector, small_lattice.points[10])
        assert vps[0].confidence == 8.0

    def test_two_blobs_are_ranked(self, small_lattice):
        far = int(np.argmin(small_lattice.points[:, 2]))
        values = blob(small_lattice, 0, 5.0)
        values = blob(small_lattice, far, 9.0, values)
        vps = cluster_field(SphereField(small_lattice, values), self.config)
        assert [v.confidence for v in vps] == [9.0, 5.0]
        assert np.allclose(vps[0].vector, small_lattice.points[far])
        assert np.allclose(vps[1].vector, small_lattice.points[0])

    def test_nms_suppresses_nearby_weaker_peaks(self, small_lattice):
        far = int(np.argmin(small_lattice.points[:, 2]))
        near = int(small_lattice.knn[0, 0])
        values = np.zeros(small_lattice.n_points)
        values[0], values[near], values[far] = 10.0, 7.0, 5.0
        field = SphereField(small_lattice, values)

        vps = sphere_nms(field, math.radians(10.0))
        assert [v.confidence for v in vps] == [10.0, 5.0]
        assert [v.confidence for v in sphere_nms(field, math.radians(10.0), top=1)] == [10.0]
        assert sphere_nms(SphereField(small_lattice, np.zeros(small_lattice.n_points)), 0.1) == []


class TestManhattan:
    def test_orthogonal_triple_beats_stronger_distractors(self):
        candidates = [
            vp([1.0, 1.0, 0.0], 6.0),
            vp(EX, 5.0),
            vp([0.0, 1.0, 1.0], 4.5),
            vp(EY, 4.0),
            vp(EZ, 3.0),
        ]
        triple = select_manhattan_triple(candidates, math.radians(2.0))
        assert not triple.relaxed
        assert [v.direction for v in triple.vps] == [tuple(EX), tuple(EY), tuple(EZ)]

    def test_two_candidates_synthesize_the_third(self):
        triple = select_manhattan_triple([vp(EY, 1.0), vp(EX, 2.0)], math.radians(2.0))
        assert triple.relaxed
        assert [v.confidence for v in triple.vps] == [2.0, 1.0, 0.0]
        assert float(angular_distance(triple.vps[2].vector, EZ)) < 1e-12

    def test_single_candidate_is_insufficient(self):
        with pytest.raises(InsufficientCandidates):
            select_manhattan_triple([vp(EX, 1.0)], math.radians(2.0))

    def test_planted_triple_among_distractors(self, rng):
        frame = random_frame(rng)
        planted = [vp(frame[i], c) for i, c in enumerate((10.0, 9.0, 8.0))]
        distractors = [vp(rng.normal(size=3), float(rng.uniform(0, 7))) for _ in range(17)]
        candidates = distractors + planted
        rng.shuffle(candidates)
        triple = select_manhattan_triple(candidates, math.radians(2.0), shortlist=20)
        assert not triple.relaxed
        assert [v.confidence for v in triple.vps] == [10.0, 9.0, 8.0]

    def test_nearest_frame_of_a_perturbed_rotation(self, rng):
        frame = random_frame(rng)
        noisy = frame + rng.normal(scale=0.01, size=(3, 3))
        snapped = nearest_orthonormal_frame(noisy)
        assert np.allclose(snapped @ snapped.T, np.eye(3), atol=1e-12)
        assert np.all(angular_distance(snapped, frame) < math.radians(3.0))

    def test_nearest_frame_keeps_an_orthonormal_frame(self):
        snapped = nearest_orthonormal_frame(np.array([EX, EY, -EZ]))
        assert np.allclose(snapped, np.eye(3))


class TestMultiscale:
    scales = [ScaleSpec(delta_deg=13.0, n_points=64), ScaleSpec(delta_deg=4.0, n_points=64)]

    def test_common_point_of_all_lines_is_a_fixed_point(self, small_params, grid_camera):
        # vertical image lines all pass through the vertical vanishing direction
        grid = vertical_lines(small_params)
        refinement = refine_multiscale([vp(EY, 1.0)], grid, grid_camera, self.scales)
        assert len(refinement.trace) == 3
        assert refinement.vps[0].direction == pytest.approx(tuple(EY))
        assert refinement.vps[0].confidence == pytest.approx(small_params.n_rho)

    def test_local_steps_stay_within_their_caps(self, small_params, grid_camera):
        grid = vertical_lines(small_params)
        start = np.array([0.2, 0.9, 0.3])
        refinement = refine_multiscale([vp(start, 1.0)], grid, grid_camera, self.scales)
        for before, after, scale in zip(refinement.trace, refinement.trace[1:], self.scales):
            assert float(angular_distance(before[0], after[0])) <= scale.delta + 1e-9

    def test_grid_lines_require_grid_intrinsics(self, small_params):
        camera = CameraIntrinsics(focal=500.0, cx=320.0, cy=240.0, width=640, height=480)
        with pytest.raises(ParamsMismatch):
            grid_lines(vertical_lines(small_params), camera)

    def test_grid_lines_carry_bin_votes(self, small_params, grid_camera):
        lines = grid_lines(vertical_lines(small_params), grid_camera)
        assert lines.normals.shape == (small_params.n_rho, 3)
        assert np.allclose(lines.normals @ EY, 0.0)
        assert np.all(lines.weights == 1.0)

    def test_refinement_never_moves_away_from_the_common_point(self, grid_camera, rng):
        # lines through the principal point at every angle meet along the optical axis
        params = HoughParams(n_rho=47, n_theta=180, grid_side=64)
        votes = np.zeros((47, 180))
        votes[23, :] = 1.0
        grid = HoughGrid(params, votes)
        for _ in range(8):
            tilt = math.radians(rng.uniform(3.0, 10.0))
            spin = rng.uniform(0.0, 2.0 * math.pi)
            start = np.array(
                [math.sin(tilt) * math.cos(spin), math.sin(tilt) * math.sin(spin), math.cos(tilt)]
            )
            refinement = refine_multiscale([vp(start, 1.0)], grid, grid_camera, self.scales)
            coarse = float(angular_distance(start, EZ))
            refined = float(angular_distance(refinement.vps[0].vector, EZ))
            assert refined < coarse
            assert refined < math.radians(1.0)

    def test_polish_reranks_by_line_concurrency(self, small_params, grid_camera):
        grid = vertical_lines(small_params)
        polished = polish_candidates(
            [vp(EX, 5.0), vp(EY, 1.0)], grid, grid_camera, self.scales, math.radians(3.0)
        )
        assert [v.confidence for v in polished] == [small_params.n_rho, 0.0]
        assert polished[0].direction == pytest.approx(tuple(EY))
        assert polished[1].direction == pytest.approx(tuple(EX))

    def test_polish_merges_candidates_that_converge(self, small_params, grid_camera):
        grid = vertical_lines(small_params)
        near = np.array([0.0, math.cos(math.radians(0.05)), math.sin(math.radians(0.05))])
        polished = polish_candidates(
            [vp(EY, 2.0), vp(near, 1.0)], grid, grid_camera, self.scales, math.radians(3.0)
        )
        assert len(polished) == 1
        assert polished[0].confidence == pytest.approx(small_params.n_rho)

    def test_polish_without_local_scales_is_a_no_op(self, small_params, grid_camera):
        candidates = [vp(EX, 5.0), vp(EY, 1.0)]
        hemispheric = [ScaleSpec(delta_deg=90.0, n_points=64)]
        grid = vertical_lines(small_params)
        assert polish_candidates(candidates, grid, grid_camera, hemispheric, 0.05) == candidates


class TestAssignment:
    def test_vertical_lines_go_to_the_vertical_direction(self, small_params, grid_camera):
        grid = vertical_lines(small_params)
        assignment = assign_lines(grid, grid_camera, [vp(EX, 2.0), vp(EY, 1.0)])
        assert np.all(assignment.labels == 1)
        assert np.allclose(assignment.residuals, 0.0, atol=1e-12)

    def test_without_directions_nothing_is_assigned(self, small_params, grid_camera):
        assignment = assign_lines(vertical_lines(small_params), grid_camera, [])
        assert np.all(assignment.labels == UNASSIGNED)

    def test_overlay_draws_colored_lines(self, small_params, grid_camera):
        grid = vertical_lines(small_params)
        assignment = assign_lines(grid, grid_camera, [vp(EY, 1.0)])
        overlay = render_overlay(
            GrayImage(np.zeros((64, 64))),
            GridTransform(1.0, 0.0, 0.0, (0, 0, 64, 64)),
            grid,
            grid_camera,
            assignment,
        )
        assert overlay.shape == (64, 64, 3)
        assert overlay.min() >= 0.0 and overlay.max() <= 1.0
        assert np.any(overlay[..., 0] != overlay[..., 2])
