import json

import numpy as np
import pytest

from vp_core.cli import build_parser, run
from vp_core.imaging import GrayImage, save_image
from vp_core.synth import SceneSpec, generate_scene

SMALL = [
    "--set", "hough.grid_side=64",
    "--set", "hough.n_rho=46",
    "--set", "hough.n_theta=45",
    "--set", "lattice.n_points=2048",
    "--set", "lattice.k=8",
    "--set", "mapping.m_samples=256",
]


def stdout_json(capsys) -> dict:
    return json.loads(capsys.readouterr().out)


class TestUsage:
    def test_missing_command(self, capsys):
        assert run([]) == 1
        assert "vp-sphere" in capsys.readouterr().err

    def test_missing_positional(self):
        assert run(["detect"]) == 1

    def test_bad_list_argument(self, tmp_path):
        assert run(["sweep", str(tmp_path / "m.jsonl"), "--out", "x.csv", "--n-theta", "a,b"]) == 1

    def test_bad_override(self, tmp_path):
        assert run(["precompute", "--set", "hough.n_theta"]) == 1
        assert run(["precompute", "--set", "hough.n_theta=1"]) == 1

    def test_non_positive_workers(self, tmp_path):
        assert run(["eval", str(tmp_path / "m.jsonl"), "--workers", "0"]) == 1

    def test_parser_accepts_sweep_defaults(self):
        args = build_parser().parse_args(["sweep", "m.jsonl", "--out", "s.csv"])
        assert args.n_theta == [45, 90, 180]
        assert args.n_points == [8192, 16384, 32768]


class TestErrors:
    def test_missing_image_is_io_error(self, tmp_path):
        assert run(["detect", str(tmp_path / "absent.png"), "--no-cache"]) == 2

    def test_missing_manifest_is_io_error(self, tmp_path):
        assert run(["eval", str(tmp_path / "absent.jsonl"), "--workers", "1"]) == 2

    def test_blank_image_has_no_evidence(self, tmp_path):
        path = save_image(GrayImage(np.zeros((64, 64))), tmp_path / "blank.png")
        assert run(["detect", str(path), "--no-cache", *SMALL]) == 3


class TestSynth:
    def test_writes_dataset(self, tmp_path, capsys):
        spec = tmp_path / "spec.json"
        spec.write_text(json.dumps({"seed": 1, "image_size": 64, "count": 2}))
        assert run(["synth", str(spec), "--out", str(tmp_path / "data")]) == 0
        payload = stdout_json(capsys)
        assert payload["scenes"] == 2
        assert (tmp_path / "data" / "manifest.jsonl").is_file()
        assert (tmp_path / "data" / "scene_00000.png").is_file()
        assert (tmp_path / "data" / "scene_00001.png").is_file()

    def test_invalid_spec(self, tmp_path):
        spec = tmp_path / "spec.json"
        spec.write_text(json.dumps({"n_directions": 4, "manhattan": True}))
        assert run(["synth", str(spec), "--out", str(tmp_path / "data")]) == 1

    def test_infeasible_spec(self, tmp_path):
        spec = tmp_path / "spec.json"
        spec.write_text(
            json.dumps({"n_directions": 8, "manhattan": False, "min_separation_deg": 89.0})
        )
        assert run(["synth", str(spec), "--out", str(tmp_path / "data")]) == 3


class TestPrecompute:
    def test_builds_then_reuses(self, tmp_path, capsys):
        argv = ["precompute", "--cache-dir", str(tmp_path), "--focal", "134.4", *SMALL]
        assert run(argv) == 0
        first = stdout_json(capsys)
        assert first["bins"] == 46 * 45
        assert first["lattice_points"] == 2048
        assert first["focal_source"] == "provided"
        assert first["entries_per_bin"]["min"] > 0

        cache_file = tmp_path / f"mapping-{first['cache_hash']}.vpmt"
        assert first["cache_file"] == str(cache_file)
        built = cache_file.stat().st_mtime_ns

        assert run(argv) == 0
        assert stdout_json(capsys) == first
        assert cache_file.stat().st_mtime_ns == built

    def test_other_camera_gets_another_table(self, tmp_path, capsys):
        assert run(["precompute", "--cache-dir", str(tmp_path), "--focal", "100", *SMALL]) == 0
        a = stdout_json(capsys)["cache_hash"]
        assert run(["precompute", "--cache-dir", str(tmp_path), "--focal", "120", *SMALL]) == 0
        b = stdout_json(capsys)["cache_hash"]
        assert a != b
        assert len(list(tmp_path.glob("mapping-*.vpmt"))) == 2


class TestDetect:
    @pytest.fixture
    def scene(self, tmp_path):
        image, truth = generate_scene(SceneSpec(seed=2, image_size=64))
        return save_image(image, tmp_path / "scene.png"), truth

    def test_detect_writes_json_and_artifacts(self, scene, tmp_path, capsys):
        path, truth = scene
        argv = [
            "detect", str(path), "--focal", str(truth.intrinsics.focal),
            "--cache-dir", str(tmp_path / "cache"),
            "--overlay", str(tmp_path / "overlay.png"),
            "--hough-dump", str(tmp_path / "hough.pgm"),
            "--run-log", str(tmp_path / "runs.jsonl"),
            *SMALL,
        ]
        assert run(argv) == 0
        payload = stdout_json(capsys)
        detection = payload["detection"]
        assert detection["mode"] == "manhattan"
        assert len(detection["vps"]) == 3
        assert detection["focal_source"] == "provided"
        assert payload["cache_hash"]
        assert payload["config"]["hough"]["grid_side"] == 64
        assert (tmp_path / "overlay.png").is_file()
        assert (tmp_path / "hough.pgm").is_file()
        assert len((tmp_path / "runs.jsonl").read_text().splitlines()) == 1

        assert run(argv) == 0
        assert stdout_json(capsys) == payload

    def test_missing_focal_is_reported(self, scene, tmp_path, capsys):
        path, _ = scene
        argv = ["detect", str(path), "--mode", "multi", "--no-cache", "--out", str(tmp_path / "d.json"), *SMALL]
        assert run(argv) == 0
        payload = json.loads((tmp_path / "d.json").read_text())
        assert payload["detection"]["focal_source"] == "default"
        assert payload["detection"]["mode"] == "multi"
        assert capsys.readouterr().out == ""
