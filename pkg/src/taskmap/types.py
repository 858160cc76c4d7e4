"""Core domain types and the mutable map state threaded through the pipeline.

The map state keeps per-Gaussian task posteriors in one dense array so that
multi-view fusion stays branch-free and vectorized; the dataclasses below are
the value types exposed at module boundaries.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Set, Tuple

import numpy as np

from .validation import as_points, check_rotation


@dataclass(frozen=True)
class TaskList:
    """Ordered natural-language tasks; the index space is fixed for a session."""

    tasks: Tuple[str, ...]

    def __post_init__(self):
        if len(self.tasks) == 0:
            raise ValueError("task list must contain at least one task")
        if any(not t for t in self.tasks):
            raise ValueError("task strings must be non-empty")
        if len(set(self.tasks)) != len(self.tasks):
            raise ValueError("task strings must be unique")

    def __len__(self) -> int:
        return len(self.tasks)

    def index(self, task: str) -> int:
        return self.tasks.index(task)


@dataclass
class GaussianRecord:
    """Snapshot of one 3D Gaussian: identity, centroid, and per-task posterior."""

    id: int
    center: np.ndarray
    posterior: np.ndarray
    primitive_id: Optional[int] = None
    update_count: int = 0


@dataclass
class Primitive:
    """Over-segmented group of Gaussians with its normalized task distribution.

    ``task_dist`` has T+1 entries (T tasks plus the trailing null task) and
    sums to one. ``prior_mass`` is the fraction of original primitives this
    node accounts for during clustering.
    """

    id: int
    gaussian_ids: Set[int]
    task_dist: np.ndarray
    prior_mass: float = 0.0


@dataclass
class ObjectCluster:
    """Task-granular cluster of primitives produced by agglomerative merging."""

    id: int
    primitive_ids: Set[int]
    gaussian_ids: Set[int]
    task_dist: np.ndarray
    obb: Optional["OrientedBox"] = None


@dataclass(frozen=True)
class OrientedBox:
    """Oriented 3D box: rotation columns are the box axes in world frame."""

    center: np.ndarray
    rotation: np.ndarray
    half_extents: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=np.float64))
        object.__setattr__(
            self, "rotation", check_rotation(self.rotation, name="rotation")
        )
        he = np.asarray(self.half_extents, dtype=np.float64)
        if np.any(he <= 0):
            raise ValueError("half_extents must be positive")
        object.__setattr__(self, "half_extents", he)

    @property
    def volume(self) -> float:
        return float(np.prod(2.0 * self.half_extents))


@dataclass(frozen=True)
class CameraFrame:
    """Pinhole camera: rigid camera-from-world transform plus intrinsics."""

    rotation: np.ndarray  # 3x3, camera-from-world
    translation: np.ndarray  # 3-vector, meters
    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self):
        object.__setattr__(
            self, "rotation", check_rotation(self.rotation, name="camera rotation")
        )
        object.__setattr__(
            self, "translation", np.asarray(self.translation, dtype=np.float64)
        )
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError("focal lengths must be positive")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise ValueError("principal point must lie inside the image")


@dataclass
class DepthMap:
    """Row-major depth in meters; zero or NaN marks invalid pixels."""

    width: int
    height: int
    depths: np.ndarray

    def __post_init__(self):
        self.depths = np.asarray(self.depths, dtype=np.float32).reshape(
            self.height, self.width
        )

    def at(self, u: int, v: int) -> float:
        return float(self.depths[v, u])


@dataclass
class MaskObservation:
    """One masked 2D region with per-task cosine scores.

    Exactly one of ``scores`` / ``embedding`` is present, and exactly one of
    ``rle`` / ``gaussian_ids`` identifies the region (precomputed association
    lists skip the geometric lookup entirely).
    """

    mask_id: int
    scores: Optional[np.ndarray] = None
    embedding: Optional[np.ndarray] = None
    rle: Optional[List[int]] = None
    gaussian_ids: Optional[List[int]] = None

    def __post_init__(self):
        if (self.scores is None) == (self.embedding is None):
            raise ValueError("exactly one of scores/embedding must be present")
        if self.scores is not None:
            self.scores = np.asarray(self.scores, dtype=np.float64).reshape(-1)
            if np.any(np.abs(self.scores) > 1.0 + 1e-12):
                raise ValueError("cosine scores must lie in [-1, 1]")
        if self.embedding is not None:
            self.embedding = np.asarray(self.embedding, dtype=np.float64).reshape(-1)
            norm = float(np.linalg.norm(self.embedding))
            if abs(norm - 1.0) > 1e-5:
                raise ValueError(f"embedding must be unit-norm, got |e| = {norm}")
        if self.rle is None and self.gaussian_ids is None:
            raise ValueError("mask needs either an rle region or gaussian_ids")


@dataclass
class Frame:
    """One record of the observation log."""

    frame_id: int
    camera: CameraFrame
    masks: List[MaskObservation]
    depth: Optional[DepthMap] = None


class MapState:
    """Single-writer mutable state: posteriors, primitive membership, bookkeeping.

    Gaussian IDs are caller-supplied and stable; internally each maps to a row
    of the dense ``posteriors`` array. Primitive IDs are never reused.
    """

    def __init__(self, ids, centers, tasks: TaskList, prior: float):
        self.tasks = tasks
        self.prior = float(prior)
        self.ids = np.asarray(ids, dtype=np.int64)
        self.centers = as_points(centers, name="centers")
        if self.ids.size != self.centers.shape[0]:
            raise ValueError("ids and centers must have matching lengths")
        self.id_to_row: Dict[int, int] = {int(g): i for i, g in enumerate(self.ids)}
        if len(self.id_to_row) != self.ids.size:
            raise ValueError("duplicate Gaussian IDs in scene")
        n = self.ids.size
        t = len(tasks)
        self.posteriors = np.full((n, t), self.prior, dtype=np.float64)
        self.update_counts = np.zeros(n, dtype=np.int64)
        # -1 means unassigned
        self.primitive_of = np.full(n, -1, dtype=np.int64)
        self.primitive_members: Dict[int, Set[int]] = {}
        self._next_primitive_id = 0

    @property
    def n_gaussians(self) -> int:
        return int(self.ids.size)

    @property
    def n_tasks(self) -> int:
        return len(self.tasks)

    def rows_for(self, gaussian_ids) -> np.ndarray:
        try:
            return np.fromiter(
                (self.id_to_row[int(g)] for g in gaussian_ids), dtype=np.int64
            )
        except KeyError as exc:
            raise KeyError(f"unknown Gaussian ID {exc.args[0]}") from None

    def gaussian(self, gaussian_id: int) -> GaussianRecord:
        row = self.id_to_row[int(gaussian_id)]
        pid = int(self.primitive_of[row])
        return GaussianRecord(
            id=int(gaussian_id),
            center=self.centers[row].copy(),
            posterior=self.posteriors[row].copy(),
            primitive_id=None if pid < 0 else pid,
            update_count=int(self.update_counts[row]),
        )

    def new_primitive_id(self) -> int:
        pid = self._next_primitive_id
        self._next_primitive_id += 1
        return pid

    def primitive_gaussian_ids(self, primitive_id: int) -> Set[int]:
        rows = self.primitive_members[primitive_id]
        return {int(self.ids[r]) for r in rows}


def new_map_state(
    scene: Sequence[Tuple[int, Sequence[float]]],
    tasks: TaskList,
    prior_relevant: float = 0.05,
) -> MapState:
    """Initialize map state with every posterior at the configured prior.

    ``scene`` is a sequence of (id, center) pairs; IDs must be unique.
    """
    if len(scene) == 0:
        raise ValueError("scene must contain at least one Gaussian")
    if not (0.0 < prior_relevant < 1.0):
        raise ValueError("prior_relevant must be in (0, 1)")
    ids = [int(g) for g, _ in scene]
    centers = [c for _, c in scene]
    return MapState(ids, centers, tasks, prior_relevant)
