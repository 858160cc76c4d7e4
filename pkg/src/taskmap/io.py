"""File formats: scene, tasks, likelihood, calibration, observation log,
ground truth, output map, and metrics.

The observation log is JSON Lines with one frame per line so ingestion can
stream; every other format is a single JSON document. All writers emit
canonical bytes (fixed key order, compact separators), so identical inputs
produce identical files.
"""

from __future__ import annotations

import base64
import json
import os
from dataclasses import dataclass, field
from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from .relevance import LikelihoodModel
from .types import CameraFrame, DepthMap, Frame, MaskObservation, ObjectCluster, OrientedBox


class SchemaError(ValueError):
    """Input file violates a format contract; message carries line/field context."""


def _dump(obj) -> str:
    return json.dumps(obj, separators=(",", ":"))


def _require(record: dict, key: str, where: str):
    if key not in record:
        raise SchemaError(f"{where}: missing required key '{key}'")
    return record[key]


# ---------------------------------------------------------------------------
# Run-length encoding over row-major pixel indices


def rle_encode(pixels) -> List[int]:
    """Encode a set of row-major pixel indices as flat [start, length, ...] runs."""
    idx = np.asarray(sorted(int(p) for p in pixels), dtype=np.int64)
    if idx.size == 0:
        return []
    breaks = np.nonzero(np.diff(idx) != 1)[0]
    starts = np.concatenate(([0], breaks + 1))
    ends = np.concatenate((breaks, [idx.size - 1]))
    out: List[int] = []
    for s, e in zip(starts, ends):
        out.append(int(idx[s]))
        out.append(int(e - s + 1))
    return out


def rle_decode(rle: Sequence[int], n_pixels: int) -> np.ndarray:
    """Decode flat [start, length, ...] runs to sorted pixel indices."""
    if rle is None or len(rle) == 0:
        return np.empty(0, dtype=np.int64)
    if len(rle) % 2 != 0:
        raise SchemaError("rle must hold start,length pairs (even length)")
    starts = np.asarray(rle[0::2], dtype=np.int64)
    lengths = np.asarray(rle[1::2], dtype=np.int64)
    if np.any(lengths <= 0) or np.any(starts < 0):
        raise SchemaError("rle runs must have positive length and nonnegative start")
    ends = starts + lengths
    if np.any(starts[1:] < ends[:-1]):
        raise SchemaError("rle runs must be ascending and non-overlapping")
    if ends[-1] > n_pixels:
        raise SchemaError(f"rle run ends at {int(ends[-1])}, beyond {n_pixels} pixels")
    return np.concatenate([np.arange(s, e) for s, e in zip(starts, ends)])


# ---------------------------------------------------------------------------
# Scene file


@dataclass
class SceneData:
    """Gaussian IDs and centroids; unknown keys survive a round trip untouched."""

    gaussians: List[Tuple[int, Tuple[float, float, float]]]
    gaussian_extra: List[Dict] = field(default_factory=list)
    extra: Dict = field(default_factory=dict)

    def as_scene(self) -> List[Tuple[int, Tuple[float, float, float]]]:
        return self.gaussians


def write_scene(path, scene: SceneData) -> None:
    records = []
    extras = scene.gaussian_extra or [{}] * len(scene.gaussians)
    for (gid, center), extra in zip(scene.gaussians, extras):
        rec = {"id": int(gid), "center": [float(c) for c in center]}
        rec.update(extra)
        records.append(rec)
    doc = {"gaussians": records}
    doc.update(scene.extra)
    with open(path, "w", encoding="utf-8") as f:
        f.write(_dump(doc))
        f.write("\n")


def read_scene(path) -> SceneData:
    with open(path, "r", encoding="utf-8") as f:
        try:
            doc = json.load(f)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(doc, dict):
        raise SchemaError(f"{path}: top level must be an object")
    raw = _require(doc, "gaussians", str(path))
    gaussians = []
    gaussian_extra = []
    for i, rec in enumerate(raw):
        where = f"{path}: gaussians[{i}]"
        gid = int(_require(rec, "id", where))
        center = _require(rec, "center", where)
        if len(center) != 3:
            raise SchemaError(f"{where}: center must have 3 components")
        gaussians.append((gid, tuple(float(c) for c in center)))
        gaussian_extra.append({k: v for k, v in rec.items() if k not in ("id", "center")})
    extra = {k: v for k, v in doc.items() if k != "gaussians"}
    return SceneData(gaussians=gaussians, gaussian_extra=gaussian_extra, extra=extra)


# ---------------------------------------------------------------------------
# Task list


def write_tasks(path, tasks: Sequence[str]) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(json.dumps(list(tasks), indent=2))
        f.write("\n")


def read_tasks(path) -> List[str]:
    with open(path, "r", encoding="utf-8") as f:
        doc = json.load(f)
    if not isinstance(doc, list) or not all(isinstance(t, str) for t in doc):
        raise SchemaError(f"{path}: task file must be an array of strings")
    return doc


# ---------------------------------------------------------------------------
# Likelihood model file

_LIKELIHOOD_KEYS = ("mu_neg", "sigma_neg", "mu_pos", "sigma_pos", "sigma_eps", "prior_relevant")


def write_likelihood(path, model: LikelihoodModel) -> None:
    doc = {k: getattr(model, k) for k in _LIKELIHOOD_KEYS}
    with open(path, "w", encoding="utf-8") as f:
        f.write(json.dumps(doc, indent=2))
        f.write("\n")


def read_likelihood(path) -> LikelihoodModel:
    with open(path, "r", encoding="utf-8") as f:
        doc = json.load(f)
    if not isinstance(doc, dict):
        raise SchemaError(f"{path}: likelihood file must be an object")
    unknown = set(doc) - set(_LIKELIHOOD_KEYS)
    if unknown:
        raise SchemaError(f"{path}: unknown likelihood keys {sorted(unknown)}")
    kwargs = {k: float(doc[k]) for k in _LIKELIHOOD_KEYS if k in doc}
    return LikelihoodModel(**kwargs)


# ---------------------------------------------------------------------------
# Calibration sample file


def write_calibration(path, negative_scores, positive_scores=None) -> None:
    doc = {"negative_scores": [float(s) for s in negative_scores]}
    if positive_scores is not None:
        doc["positive_scores"] = [float(s) for s in positive_scores]
    with open(path, "w", encoding="utf-8") as f:
        f.write(_dump(doc))
        f.write("\n")


def read_calibration(path) -> Tuple[List[float], Optional[List[float]]]:
    with open(path, "r", encoding="utf-8") as f:
        doc = json.load(f)
    if not isinstance(doc, dict):
        raise SchemaError(f"{path}: calibration file must be an object")
    neg = _require(doc, "negative_scores", str(path))
    pos = doc.get("positive_scores")
    return [float(s) for s in neg], None if pos is None else [float(s) for s in pos]


# ---------------------------------------------------------------------------
# Observation log (JSON Lines, one frame per line)


def _camera_to_json(cam: CameraFrame) -> dict:
    return {
        "rotation": [float(x) for x in cam.rotation.reshape(-1)],
        "translation": [float(x) for x in cam.translation],
        "fx": cam.fx,
        "fy": cam.fy,
        "cx": cam.cx,
        "cy": cam.cy,
        "width": cam.width,
        "height": cam.height,
    }


def _camera_from_json(doc: dict, where: str) -> CameraFrame:
    rotation = np.asarray(_require(doc, "rotation", where), dtype=np.float64)
    if rotation.size != 9:
        raise SchemaError(f"{where}: rotation must have 9 entries (row-major)")
    try:
        return CameraFrame(
            rotation=rotation.reshape(3, 3),
            translation=np.asarray(_require(doc, "translation", where), dtype=np.float64),
            fx=float(_require(doc, "fx", where)),
            fy=float(_require(doc, "fy", where)),
            cx=float(_require(doc, "cx", where)),
            cy=float(_require(doc, "cy", where)),
            width=int(_require(doc, "width", where)),
            height=int(_require(doc, "height", where)),
        )
    except ValueError as exc:
        raise SchemaError(f"{where}: {exc}") from None


def _depth_to_json(depth: DepthMap) -> dict:
    raw = depth.depths.astype("<f4").tobytes()
    return {"encoding": "f32le", "data": base64.b64encode(raw).decode("ascii")}


def _depth_from_json(doc: dict, cam: CameraFrame, where: str, base_dir: str) -> DepthMap:
    encoding = _require(doc, "encoding", where)
    if encoding != "f32le":
        raise SchemaError(f"{where}: unsupported depth encoding '{encoding}'")
    if "data" in doc:
        raw = base64.b64decode(doc["data"])
    elif "path" in doc:
        with open(os.path.join(base_dir, doc["path"]), "rb") as f:
            raw = f.read()
    else:
        raise SchemaError(f"{where}: depth needs 'data' or 'path'")
    expected = cam.width * cam.height * 4
    if len(raw) != expected:
        raise SchemaError(
            f"{where}: depth payload is {len(raw)} bytes, expected {expected}"
        )
    depths = np.frombuffer(raw, dtype="<f4").reshape(cam.height, cam.width)
    return DepthMap(width=cam.width, height=cam.height, depths=depths)


def frame_to_json(frame: Frame) -> dict:
    doc = {"frame_id": int(frame.frame_id), "camera": _camera_to_json(frame.camera)}
    if frame.depth is not None:
        doc["depth"] = _depth_to_json(frame.depth)
    masks = []
    for m in frame.masks:
        rec: dict = {"mask_id": int(m.mask_id)}
        if m.gaussian_ids is not None:
            rec["gaussian_ids"] = [int(g) for g in m.gaussian_ids]
        else:
            rec["rle"] = [int(x) for x in m.rle]
        rec["scores"] = [float(s) for s in m.scores]
        masks.append(rec)
    doc["masks"] = masks
    return doc


def frame_from_json(doc: dict, where: str, base_dir: str = ".") -> Frame:
    frame_id = int(_require(doc, "frame_id", where))
    cam = _camera_from_json(_require(doc, "camera", where), f"{where}: camera")
    depth = None
    if "depth" in doc and doc["depth"] is not None:
        depth = _depth_from_json(doc["depth"], cam, f"{where}: depth", base_dir)
    masks = []
    for j, rec in enumerate(_require(doc, "masks", where)):
        mwhere = f"{where}: masks[{j}]"
        try:
            masks.append(
                MaskObservation(
                    mask_id=int(_require(rec, "mask_id", mwhere)),
                    scores=_require(rec, "scores", mwhere),
                    rle=rec.get("rle"),
                    gaussian_ids=rec.get("gaussian_ids"),
                )
            )
        except ValueError as exc:
            raise SchemaError(f"{mwhere}: {exc}") from None
    return Frame(frame_id=frame_id, camera=cam, masks=masks, depth=depth)


def write_observation_log(path, frames: Iterable[Frame]) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for frame in frames:
            f.write(_dump(frame_to_json(frame)))
            f.write("\n")


def read_observation_log(path) -> Iterator[Frame]:
    """Stream frames one line at a time; frame_ids must be strictly ascending."""
    base_dir = os.path.dirname(os.path.abspath(path))
    last_id = None
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            where = f"{path}:{lineno}"
            try:
                doc = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"{where}: invalid JSON ({exc})") from None
            frame = frame_from_json(doc, where, base_dir)
            if last_id is not None and frame.frame_id <= last_id:
                raise SchemaError(
                    f"{where}: frame_id {frame.frame_id} not greater than previous {last_id}"
                )
            last_id = frame.frame_id
            yield frame


# ---------------------------------------------------------------------------
# Ground-truth file


def write_ground_truth(path, records) -> None:
    doc = []
    for rec in records:
        entry = {
            "task_index": int(rec.task_index),
            "points": [[float(c) for c in p] for p in np.asarray(rec.points)],
        }
        if getattr(rec, "label", None) is not None:
            entry["label"] = rec.label
        doc.append(entry)
    with open(path, "w", encoding="utf-8") as f:
        f.write(_dump(doc))
        f.write("\n")


def read_ground_truth(path):
    from .evaluation import GroundTruthObject

    with open(path, "r", encoding="utf-8") as f:
        doc = json.load(f)
    if not isinstance(doc, list):
        raise SchemaError(f"{path}: ground-truth file must be an array")
    out = []
    for i, rec in enumerate(doc):
        where = f"{path}: [{i}]"
        out.append(
            GroundTruthObject(
                task_index=int(_require(rec, "task_index", where)),
                points=np.asarray(_require(rec, "points", where), dtype=np.float64),
                label=rec.get("label"),
            )
        )
    return out


# ---------------------------------------------------------------------------
# Output map and metrics


def _obb_to_json(obb: OrientedBox) -> dict:
    return {
        "center": [float(x) for x in obb.center],
        "rotation": [float(x) for x in obb.rotation.reshape(-1)],
        "half_extents": [float(x) for x in obb.half_extents],
    }


def _obb_from_json(doc: dict, where: str) -> OrientedBox:
    rotation = np.asarray(_require(doc, "rotation", where), dtype=np.float64)
    if rotation.size != 9:
        raise SchemaError(f"{where}: obb rotation must have 9 entries")
    return OrientedBox(
        center=np.asarray(_require(doc, "center", where), dtype=np.float64),
        rotation=rotation.reshape(3, 3),
        half_extents=np.asarray(_require(doc, "half_extents", where), dtype=np.float64),
    )


def write_map(path, clusters: Sequence[ObjectCluster]) -> None:
    objects = []
    for c in clusters:
        rec = {
            "id": int(c.id),
            "gaussian_ids": sorted(int(g) for g in c.gaussian_ids),
            "task_dist": [float(p) for p in c.task_dist],
        }
        if c.obb is not None:
            rec["obb"] = _obb_to_json(c.obb)
        objects.append(rec)
    with open(path, "w", encoding="utf-8") as f:
        f.write(_dump({"objects": objects}))
        f.write("\n")


def read_map(path) -> List[ObjectCluster]:
    with open(path, "r", encoding="utf-8") as f:
        doc = json.load(f)
    if not isinstance(doc, dict) or "objects" not in doc:
        raise SchemaError(f"{path}: map file must be an object with 'objects'")
    clusters = []
    for i, rec in enumerate(doc["objects"]):
        where = f"{path}: objects[{i}]"
        obb = None
        if rec.get("obb") is not None:
            obb = _obb_from_json(rec["obb"], where)
        clusters.append(
            ObjectCluster(
                id=int(_require(rec, "id", where)),
                primitive_ids=set(),
                gaussian_ids={int(g) for g in _require(rec, "gaussian_ids", where)},
                task_dist=np.asarray(_require(rec, "task_dist", where), dtype=np.float64),
                obb=obb,
            )
        )
    return clusters


_METRIC_KEYS = ("strict_osr", "relaxed_osr", "mean_iou", "m_acc", "object_count")


def write_metrics(path, metrics) -> None:
    doc = {
        "strict_osr": metrics.strict_osr,
        "relaxed_osr": metrics.relaxed_osr,
        "mean_iou": metrics.mean_iou,
        "m_acc": metrics.m_acc,
        "object_count": metrics.object_count,
    }
    with open(path, "w", encoding="utf-8") as f:
        f.write(json.dumps(doc, indent=2))
        f.write("\n")


def read_metrics(path) -> dict:
    with open(path, "r", encoding="utf-8") as f:
        doc = json.load(f)
    missing = [k for k in _METRIC_KEYS if k not in doc]
    if missing:
        raise SchemaError(f"{path}: metrics file missing {missing}")
    return doc


# ---------------------------------------------------------------------------
# Semantic payload accounting (the three compression stages)


def semantic_payload_sizes(state, primitives, clusters) -> Tuple[int, int, int]:
    """Serialized byte sizes of the per-Gaussian, primitive, and object stages.

    Every stage carries the same per-Gaussian base (ID plus primitive
    assignment, int32 each) and the probabilities at its own resolution
    (float32); the object stage adds the primitive-to-object mapping.
    """
    base = (
        state.ids.astype("<i4").tobytes()
        + state.primitive_of.astype("<i4").tobytes()
    )

    gauss_stage = base + state.posteriors.astype("<f4").tobytes()

    prim_dists = np.asarray([p.task_dist for p in primitives], dtype="<f4")
    prim_stage = base + prim_dists.tobytes()

    cluster_of = {int(p): c.id for c in clusters for p in c.primitive_ids}
    prim_to_obj = np.asarray(
        [cluster_of.get(int(p.id), -1) for p in primitives], dtype="<i4"
    )
    obj_dists = np.asarray([c.task_dist for c in clusters], dtype="<f4")
    obj_stage = base + prim_to_obj.tobytes() + obj_dists.tobytes()

    return len(gauss_stage), len(prim_stage), len(obj_stage)
