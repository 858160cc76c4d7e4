"""Synthetic scenes and observation logs with known ground truth.

Objects are disjoint point clusters observed by an orbiting pinhole camera.
Depth maps are exact point-splatted z-buffers of the known centroids, and
scores follow the additive measurement model: a per-class mean, a sinusoidal
view-angle term, Gaussian noise, and distance-gated outliers that swap the
relevant score for a negative-class draw.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Set, Tuple

import numpy as np

from .evaluation import GroundTruthObject
from .io import SceneData, rle_encode
from .types import CameraFrame, DepthMap, Frame, MaskObservation

MAX_PLACEMENT_TRIES = 2000


@dataclass(frozen=True)
class SynthConfig:
    n_objects: int = 5
    gaussians_per_object: int = 60
    object_extent: float = 0.15  # ball radius, meters
    scene_extent: float = 4.0
    n_frames: int = 30
    n_tasks: Optional[int] = None  # defaults to n_objects
    relevant_tasks: Optional[Tuple[int, ...]] = None  # per object; defaults to i % T
    # Score model
    mu_neg: float = 0.20
    mu_pos: float = 0.27
    sigma_eps: float = 0.0
    angle_amp: float = 0.0
    outlier_rate: float = 0.0
    outlier_range: Tuple[float, Optional[float]] = (0.0, None)  # None = unbounded
    # Scene clutter
    n_floaters: int = 0
    mask_dilate_px: int = 0
    # Camera
    width: int = 320
    height: int = 240
    fx: float = 250.0
    fy: float = 250.0
    orbit_radius: Optional[float] = None  # defaults to 1.15 * scene_extent
    orbit_height: Optional[float] = None  # defaults to 0.5 * scene_extent
    # Association tolerance used when computing visibility truth
    depth_tol: float = 0.05
    depth_tol_rel: float = 0.02
    # Emit masks as pixel runs ("geometric") or ID lists ("precomputed")
    emit: str = "geometric"
    seed: int = 0

    def __post_init__(self):
        if self.object_extent <= 0 or self.scene_extent <= 0:
            raise ValueError("extents must be positive")
        if not (0.0 <= self.outlier_rate <= 1.0):
            raise ValueError("outlier_rate must be in [0, 1]")
        if self.emit not in ("geometric", "precomputed"):
            raise ValueError("emit must be 'geometric' or 'precomputed'")

    @property
    def task_count(self) -> int:
        return self.n_tasks if self.n_tasks is not None else self.n_objects


@dataclass
class SynthDataset:
    scene: SceneData
    tasks: List[str]
    frames: List[Frame]
    ground_truth: List[GroundTruthObject]
    # Generator-side truth, keyed per frame: mask_id -> visible Gaussian IDs
    visible_sets: List[Dict[int, Set[int]]] = field(default_factory=list)
    # (frame_id, object_index) pairs whose relevant score was an outlier draw
    outlier_events: List[Tuple[int, int]] = field(default_factory=list)
    config: Optional[SynthConfig] = None


def look_at_camera(eye, target, cfg: SynthConfig) -> CameraFrame:
    """Camera-from-world pose looking from eye toward target, z forward, y down."""
    eye = np.asarray(eye, dtype=np.float64)
    forward = np.asarray(target, dtype=np.float64) - eye
    forward = forward / np.linalg.norm(forward)
    right = np.cross(forward, np.array([0.0, 0.0, 1.0]))
    norm = np.linalg.norm(right)
    if norm < 1e-9:
        right = np.array([1.0, 0.0, 0.0])
    else:
        right = right / norm
    down = np.cross(forward, right)
    rotation = np.stack([right, down, forward])
    return CameraFrame(
        rotation=rotation,
        translation=-rotation @ eye,
        fx=cfg.fx,
        fy=cfg.fy,
        cx=cfg.width / 2.0,
        cy=cfg.height / 2.0,
        width=cfg.width,
        height=cfg.height,
    )


def _place_objects(cfg: SynthConfig, rng: np.random.Generator) -> np.ndarray:
    half = cfg.scene_extent / 2.0
    lo = np.array([-0.7 * half, -0.7 * half, 0.0])
    hi = np.array([0.7 * half, 0.7 * half, 0.4 * half])
    # Euclidean separation of 2 * sqrt(3) * r guarantees disjoint axis-aligned
    # boxes of the member points; pad a little beyond that.
    min_sep = 2.0 * math.sqrt(3.0) * cfg.object_extent * 1.1
    centers: List[np.ndarray] = []
    tries = 0
    while len(centers) < cfg.n_objects:
        tries += 1
        if tries > MAX_PLACEMENT_TRIES:
            raise ValueError(
                f"cannot place {cfg.n_objects} disjoint objects of extent "
                f"{cfg.object_extent} within scene_extent {cfg.scene_extent}"
            )
        cand = rng.uniform(lo, hi)
        if all(np.linalg.norm(cand - c) >= min_sep for c in centers):
            centers.append(cand)
    return np.asarray(centers)


def _ball_points(center, radius, n, rng: np.random.Generator) -> np.ndarray:
    direction = rng.normal(size=(n, 3))
    direction /= np.linalg.norm(direction, axis=1, keepdims=True)
    r = radius * rng.uniform(0.0, 1.0, size=(n, 1)) ** (1.0 / 3.0)
    return center + direction * r


def _zbuffer(points: np.ndarray, cam: CameraFrame):
    """Nearest point per pixel. Returns (depth image, winner index per pixel)."""
    p = points @ cam.rotation.T + cam.translation
    z = p[:, 2]
    with np.errstate(divide="ignore", invalid="ignore"):
        u = cam.fx * p[:, 0] / z + cam.cx
        v = cam.fy * p[:, 1] / z + cam.cy
    pu = np.floor(u + 0.5).astype(np.int64)
    pv = np.floor(v + 0.5).astype(np.int64)
    valid = (z > 0) & (pu >= 0) & (pu < cam.width) & (pv >= 0) & (pv < cam.height)
    pixel = np.where(valid, pv * cam.width + pu, -1)

    n_pixels = cam.width * cam.height
    depth = np.zeros(n_pixels, dtype=np.float32)
    winner = np.full(n_pixels, -1, dtype=np.int64)
    idx = np.nonzero(valid)[0]
    # Lower index wins exact depth ties, making the buffer deterministic.
    order = idx[np.lexsort((idx, z[idx], pixel[idx]))]
    pix_sorted = pixel[order]
    first = np.ones(order.size, dtype=bool)
    first[1:] = pix_sorted[1:] != pix_sorted[:-1]
    sel = order[first]
    winner[pixel[sel]] = sel
    depth[pixel[sel]] = z[sel].astype(np.float32)
    return depth.reshape(cam.height, cam.width), winner, pixel, z


def _dilate(pixels: np.ndarray, radius: int, width: int, height: int) -> np.ndarray:
    if radius <= 0 or pixels.size == 0:
        return pixels
    vs, us = np.divmod(pixels, width)
    chunks = []
    for dv in range(-radius, radius + 1):
        for du in range(-radius, radius + 1):
            nv = vs + dv
            nu = us + du
            ok = (nv >= 0) & (nv < height) & (nu >= 0) & (nu < width)
            chunks.append(nv[ok] * width + nu[ok])
    return np.unique(np.concatenate(chunks))


def generate(cfg: SynthConfig) -> SynthDataset:
    """Generate a full dataset; identical configs and seeds give identical output."""
    rng = np.random.default_rng(cfg.seed)
    n_tasks = cfg.task_count
    relevant = cfg.relevant_tasks
    if relevant is None:
        relevant = tuple(i % n_tasks for i in range(cfg.n_objects))
    if len(relevant) != cfg.n_objects or any(
        not (0 <= t < n_tasks) for t in relevant
    ):
        raise ValueError("relevant_tasks must give one valid task index per object")

    obj_centers = _place_objects(cfg, rng)
    points_per_obj = [
        _ball_points(obj_centers[i], cfg.object_extent, cfg.gaussians_per_object, rng)
        for i in range(cfg.n_objects)
    ]
    all_points = np.concatenate(points_per_obj)
    owner = np.repeat(np.arange(cfg.n_objects), cfg.gaussians_per_object)
    if cfg.n_floaters > 0:
        half = cfg.scene_extent / 2.0
        floaters = rng.uniform(
            [-0.7 * half, -0.7 * half, 0.0],
            [0.7 * half, 0.7 * half, 0.4 * half],
            size=(cfg.n_floaters, 3),
        )
        all_points = np.concatenate([all_points, floaters])
        owner = np.concatenate([owner, np.full(cfg.n_floaters, -1)])

    ids = np.arange(all_points.shape[0], dtype=np.int64)
    scene = SceneData(
        gaussians=[(int(g), tuple(float(c) for c in p)) for g, p in zip(ids, all_points)]
    )
    tasks = [f"task {t}" for t in range(n_tasks)]
    target = np.array(
        [0.0, 0.0, float(np.mean(obj_centers[:, 2]))], dtype=np.float64
    )
    orbit_radius = cfg.orbit_radius or 1.15 * cfg.scene_extent
    orbit_height = cfg.orbit_height or 0.5 * cfg.scene_extent

    dataset = SynthDataset(
        scene=scene,
        tasks=tasks,
        frames=[],
        ground_truth=[
            GroundTruthObject(
                task_index=int(relevant[i]),
                points=points_per_obj[i],
                label=f"object-{i}",
            )
            for i in range(cfg.n_objects)
        ],
        config=cfg,
    )

    for f in range(cfg.n_frames):
        theta = 2.0 * math.pi * f / cfg.n_frames
        eye = np.array(
            [
                orbit_radius * math.cos(theta),
                orbit_radius * math.sin(theta),
                orbit_height,
            ]
        )
        cam = look_at_camera(eye, target, cfg)
        depth, winner, pixel, z = _zbuffer(all_points, cam)
        flat_depth = depth.reshape(-1)

        masks: List[MaskObservation] = []
        visible: Dict[int, Set[int]] = {}
        claimed = np.zeros(cfg.width * cfg.height, dtype=bool)
        for obj in range(cfg.n_objects):
            won = np.nonzero((winner >= 0) & (owner[np.maximum(winner, 0)] == obj))[0]
            mask_pixels = _dilate(won, cfg.mask_dilate_px, cfg.width, cfg.height)
            mask_pixels = mask_pixels[~claimed[mask_pixels]]
            if mask_pixels.size == 0:
                continue
            claimed[mask_pixels] = True

            in_mask = np.zeros(cfg.width * cfg.height, dtype=bool)
            in_mask[mask_pixels] = True
            cand = np.nonzero((pixel >= 0) & in_mask[np.maximum(pixel, 0)])[0]
            tol = np.maximum(cfg.depth_tol, cfg.depth_tol_rel * z[cand])
            d = flat_depth[pixel[cand]].astype(np.float64)
            vis = cand[(d > 0) & (np.abs(z[cand] - d) <= tol)]
            vis_ids = {int(g) for g in ids[vis]}

            scores = np.empty(n_tasks, dtype=np.float64)
            dist_to_cam = float(np.linalg.norm(eye - obj_centers[obj]))
            lo, hi = cfg.outlier_range
            in_range = dist_to_cam >= lo and (hi is None or dist_to_cam <= hi)
            for t in range(n_tasks):
                eps = rng.normal(0.0, cfg.sigma_eps) if cfg.sigma_eps > 0 else 0.0
                if t == relevant[obj]:
                    if in_range and cfg.outlier_rate > 0 and rng.random() < cfg.outlier_rate:
                        scores[t] = cfg.mu_neg + eps
                        dataset.outlier_events.append((f, obj))
                    else:
                        scores[t] = cfg.mu_pos + cfg.angle_amp * math.sin(theta) + eps
                else:
                    scores[t] = cfg.mu_neg + eps
            np.clip(scores, -1.0, 1.0, out=scores)

            if cfg.emit == "precomputed":
                masks.append(
                    MaskObservation(
                        mask_id=obj, scores=scores, gaussian_ids=sorted(vis_ids)
                    )
                )
            else:
                masks.append(
                    MaskObservation(
                        mask_id=obj, scores=scores, rle=rle_encode(mask_pixels)
                    )
                )
            visible[obj] = vis_ids

        frame_depth = None
        if cfg.emit == "geometric":
            frame_depth = DepthMap(width=cfg.width, height=cfg.height, depths=depth)
        dataset.frames.append(
            Frame(frame_id=f, camera=cam, masks=masks, depth=frame_depth)
        )
        dataset.visible_sets.append(visible)

    return dataset
