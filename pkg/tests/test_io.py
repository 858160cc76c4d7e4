import json

import numpy as np
import pytest

from taskmap import (
    CameraFrame,
    DepthMap,
    Frame,
    LikelihoodModel,
    MaskObservation,
    ObjectCluster,
    OrientedBox,
)
from taskmap.evaluation import GroundTruthObject, MetricsReport
from taskmap.io import (
    SceneData,
    SchemaError,
    read_calibration,
    read_ground_truth,
    read_likelihood,
    read_map,
    read_metrics,
    read_observation_log,
    read_scene,
    read_tasks,
    rle_decode,
    rle_encode,
    write_calibration,
    write_ground_truth,
    write_likelihood,
    write_map,
    write_metrics,
    write_observation_log,
    write_scene,
    write_tasks,
)


class TestRle:
    def test_round_trip(self):
        pixels = [0, 1, 2, 10, 11, 40]
        rle = rle_encode(pixels)
        assert rle == [0, 3, 10, 2, 40, 1]
        assert rle_decode(rle, 100).tolist() == pixels

    def test_empty(self):
        assert rle_encode([]) == []
        assert rle_decode([], 10).size == 0

    def test_random_round_trips(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            n = int(rng.integers(1, 400))
            pixels = sorted(rng.choice(1000, size=n, replace=False).tolist())
            assert rle_decode(rle_encode(pixels), 1000).tolist() == pixels

    def test_rejects_odd_length(self):
        with pytest.raises(SchemaError):
            rle_decode([0, 3, 5], 100)

    def test_rejects_overlap(self):
        with pytest.raises(SchemaError):
            rle_decode([0, 5, 3, 2], 100)

    def test_rejects_out_of_bounds(self):
        with pytest.raises(SchemaError):
            rle_decode([95, 10], 100)


class TestSceneFile:
    def test_round_trip(self, tmp_path):
        path = tmp_path / "scene.json"
        scene = SceneData(gaussians=[(3, (0.5, -1.0, 2.0)), (9, (1.0, 2.0, 3.0))])
        write_scene(path, scene)
        got = read_scene(path)
        assert got.gaussians == scene.gaussians
        write_scene(tmp_path / "again.json", got)
        assert (tmp_path / "again.json").read_bytes() == path.read_bytes()

    def test_unknown_keys_preserved(self, tmp_path):
        path = tmp_path / "scene.json"
        doc = {
            "gaussians": [
                {"id": 1, "center": [0, 0, 0], "opacity": 0.7},
            ],
            "generator": "external-tool",
        }
        path.write_text(json.dumps(doc))
        scene = read_scene(path)
        assert scene.extra == {"generator": "external-tool"}
        assert scene.gaussian_extra[0] == {"opacity": 0.7}
        out = tmp_path / "out.json"
        write_scene(out, scene)
        again = json.loads(out.read_text())
        assert again["generator"] == "external-tool"
        assert again["gaussians"][0]["opacity"] == 0.7

    def test_missing_key_diagnostics(self, tmp_path):
        path = tmp_path / "scene.json"
        path.write_text(json.dumps({"gaussians": [{"id": 1}]}))
        with pytest.raises(SchemaError, match="center"):
            read_scene(path)

    def test_bad_center_length(self, tmp_path):
        path = tmp_path / "scene.json"
        path.write_text(json.dumps({"gaussians": [{"id": 1, "center": [1, 2]}]}))
        with pytest.raises(SchemaError, match="3 components"):
            read_scene(path)


class TestSmallFiles:
    def test_tasks_round_trip(self, tmp_path):
        path = tmp_path / "tasks.json"
        write_tasks(path, ["find mugs", "wipe desk"])
        assert read_tasks(path) == ["find mugs", "wipe desk"]

    def test_tasks_schema(self, tmp_path):
        path = tmp_path / "tasks.json"
        path.write_text(json.dumps({"tasks": []}))
        with pytest.raises(SchemaError):
            read_tasks(path)

    def test_likelihood_round_trip(self, tmp_path):
        path = tmp_path / "model.json"
        model = LikelihoodModel(mu_neg=0.1, sigma_neg=0.02, mu_pos=0.3,
                                sigma_pos=0.04, sigma_eps=0.01, prior_relevant=0.07)
        write_likelihood(path, model)
        assert read_likelihood(path) == model

    def test_likelihood_defaults_when_absent(self, tmp_path):
        path = tmp_path / "model.json"
        path.write_text(json.dumps({"mu_neg": 0.18}))
        model = read_likelihood(path)
        assert model.mu_neg == 0.18
        assert model.mu_pos == 0.27
        assert model.sigma_neg == 0.035
        assert model.prior_relevant == 0.05

    def test_likelihood_unknown_key(self, tmp_path):
        path = tmp_path / "model.json"
        path.write_text(json.dumps({"mu": 0.2}))
        with pytest.raises(SchemaError, match="unknown"):
            read_likelihood(path)

    def test_calibration_round_trip(self, tmp_path):
        path = tmp_path / "cal.json"
        write_calibration(path, [0.1, 0.2], [0.3, 0.4])
        neg, pos = read_calibration(path)
        assert neg == [0.1, 0.2]
        assert pos == [0.3, 0.4]
        write_calibration(path, [0.1])
        neg, pos = read_calibration(path)
        assert pos is None

    def test_metrics_round_trip(self, tmp_path):
        path = tmp_path / "metrics.json"
        report = MetricsReport(strict_osr=0.9, relaxed_osr=1.0, mean_iou=0.5,
                               m_acc=0.8, object_count=7)
        write_metrics(path, report)
        got = read_metrics(path)
        assert got["strict_osr"] == 0.9
        assert got["object_count"] == 7

    def test_ground_truth_round_trip(self, tmp_path):
        path = tmp_path / "gt.json"
        records = [
            GroundTruthObject(task_index=0, points=np.array([[0.0, 1.0, 2.0]]),
                              label="mug"),
            GroundTruthObject(task_index=2, points=np.array([[3.0, 4.0, 5.0]])),
        ]
        write_ground_truth(path, records)
        got = read_ground_truth(path)
        assert got[0].task_index == 0
        assert got[0].label == "mug"
        assert np.array_equal(got[1].points, records[1].points)


def _camera():
    return CameraFrame(rotation=np.eye(3), translation=np.zeros(3), fx=100.0,
                       fy=100.0, cx=8.0, cy=6.0, width=16, height=12)


def _frame(frame_id, with_depth=True):
    depth = None
    if with_depth:
        depth = DepthMap(width=16, height=12,
                         depths=np.arange(192, dtype=np.float32).reshape(12, 16))
    return Frame(
        frame_id=frame_id,
        camera=_camera(),
        masks=[
            MaskObservation(mask_id=0, scores=[0.25, 0.1], rle=[0, 4]),
            MaskObservation(mask_id=1, scores=[0.1, 0.3], gaussian_ids=[4, 5]),
        ],
        depth=depth,
    )


class TestObservationLog:
    def test_round_trip(self, tmp_path):
        path = tmp_path / "log.jsonl"
        write_observation_log(path, [_frame(0), _frame(2)])
        frames = list(read_observation_log(path))
        assert [f.frame_id for f in frames] == [0, 2]
        assert frames[0].masks[0].rle == [0, 4]
        assert frames[0].masks[1].gaussian_ids == [4, 5]
        assert np.array_equal(frames[0].depth.depths,
                              np.arange(192, dtype=np.float32).reshape(12, 16))
        out = tmp_path / "again.jsonl"
        write_observation_log(out, frames)
        assert out.read_bytes() == path.read_bytes()

    def test_streaming_is_lazy(self, tmp_path):
        path = tmp_path / "log.jsonl"
        write_observation_log(path, [_frame(i) for i in range(5)])
        it = read_observation_log(path)
        first = next(it)
        assert first.frame_id == 0

    def test_unsorted_frames_rejected(self, tmp_path):
        path = tmp_path / "log.jsonl"
        with open(path, "w") as f:
            for frame in (_frame(3), _frame(1)):
                from taskmap.io import frame_to_json
                f.write(json.dumps(frame_to_json(frame)) + "\n")
        with pytest.raises(SchemaError, match="frame_id"):
            list(read_observation_log(path))

    def test_bad_depth_payload(self, tmp_path):
        from taskmap.io import frame_to_json

        path = tmp_path / "log.jsonl"
        doc = frame_to_json(_frame(0))
        doc["depth"]["data"] = doc["depth"]["data"][: len(doc["depth"]["data"]) // 2]
        path.write_text(json.dumps(doc) + "\n")
        with pytest.raises(SchemaError, match="bytes"):
            list(read_observation_log(path))

    def test_depth_sidecar(self, tmp_path):
        from taskmap.io import frame_to_json

        raw = np.arange(192, dtype="<f4").tobytes()
        (tmp_path / "depth0.f32").write_bytes(raw)
        doc = frame_to_json(_frame(0, with_depth=False))
        doc["depth"] = {"encoding": "f32le", "path": "depth0.f32"}
        path = tmp_path / "log.jsonl"
        path.write_text(json.dumps(doc) + "\n")
        frames = list(read_observation_log(path))
        assert frames[0].depth.at(1, 0) == 1.0

    def test_invalid_json_line_numbered(self, tmp_path):
        path = tmp_path / "log.jsonl"
        path.write_text("{not json}\n")
        with pytest.raises(SchemaError, match=":1"):
            list(read_observation_log(path))

    def test_mask_needs_region_or_ids(self, tmp_path):
        path = tmp_path / "log.jsonl"
        doc = {"frame_id": 0, "camera": {
            "rotation": list(np.eye(3).reshape(-1)), "translation": [0, 0, 0],
            "fx": 10, "fy": 10, "cx": 1, "cy": 1, "width": 4, "height": 4},
            "masks": [{"mask_id": 0, "scores": [0.1]}]}
        path.write_text(json.dumps(doc) + "\n")
        with pytest.raises(SchemaError, match="rle"):
            list(read_observation_log(path))


class TestMapFile:
    def test_round_trip(self, tmp_path):
        path = tmp_path / "map.json"
        clusters = [
            ObjectCluster(
                id=0,
                primitive_ids={1, 2},
                gaussian_ids={10, 11, 12},
                task_dist=np.array([0.6, 0.3, 0.1]),
                obb=OrientedBox(center=[0, 0, 0], rotation=np.eye(3),
                                half_extents=[1, 2, 3]),
            )
        ]
        write_map(path, clusters)
        got = read_map(path)
        assert got[0].id == 0
        assert got[0].gaussian_ids == {10, 11, 12}
        assert got[0].task_dist.tolist() == [0.6, 0.3, 0.1]
        assert np.array_equal(got[0].obb.rotation, np.eye(3))
        out = tmp_path / "again.json"
        write_map(out, got)
        assert out.read_bytes() == path.read_bytes()

    def test_schema_error(self, tmp_path):
        path = tmp_path / "map.json"
        path.write_text(json.dumps({"wrong": []}))
        with pytest.raises(SchemaError):
            read_map(path)
