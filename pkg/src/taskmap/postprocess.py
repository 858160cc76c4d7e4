"""Per-object cleanup and querying: floater removal, box fitting, selection."""

from __future__ import annotations

from typing import List, Sequence

import numpy as np
from scipy.spatial import cKDTree

from .types import ObjectCluster, OrientedBox
from .validation import as_points

OBB_EXTENT_FLOOR = 1e-4


def knn_filter(points, k: int = 8, alpha: float = 2.0) -> np.ndarray:
    """Indices of points kept by statistical outlier removal.

    Each point's mean distance to its k nearest neighbors is compared against
    mean + alpha * std of those distances over the whole set; points above
    the cutoff are dropped. Sets of at most k + 1 points are kept whole.
    """
    pts = as_points(points)
    if k < 1:
        raise ValueError("k must be at least 1")
    n = pts.shape[0]
    if n <= k + 1:
        return np.arange(n, dtype=np.int64)
    tree = cKDTree(pts)
    # First neighbor is the point itself.
    dists, _ = tree.query(pts, k=k + 1)
    mean_d = dists[:, 1:].mean(axis=1)
    cutoff = mean_d.mean() + alpha * mean_d.std()
    return np.nonzero(mean_d <= cutoff)[0].astype(np.int64)


def fit_obb(points) -> OrientedBox:
    """PCA-aligned bounding box of a point set.

    Axes are covariance eigenvectors ordered by decreasing eigenvalue, each
    signed so its largest-magnitude component is positive; the third axis is
    their cross product, making the frame right-handed. Extents are half the
    projection ranges, floored at 1e-4 m for degenerate dimensions.
    """
    pts = as_points(points)
    centroid = pts.mean(axis=0)
    centered = pts - centroid
    if pts.shape[0] == 1:
        rotation = np.eye(3)
    else:
        cov = centered.T @ centered / pts.shape[0]
        eigvals, eigvecs = np.linalg.eigh(cov)
        order = np.argsort(eigvals)[::-1]
        axes = eigvecs[:, order]
        for i in range(2):
            j = int(np.argmax(np.abs(axes[:, i])))
            if axes[j, i] < 0:
                axes[:, i] = -axes[:, i]
        axes[:, 2] = np.cross(axes[:, 0], axes[:, 1])
        rotation = axes
    proj = centered @ rotation
    lo = proj.min(axis=0)
    hi = proj.max(axis=0)
    half = np.maximum((hi - lo) / 2.0, OBB_EXTENT_FLOOR)
    center = centroid + rotation @ ((hi + lo) / 2.0)
    return OrientedBox(center=center, rotation=rotation, half_extents=half)


def select_top_k(
    clusters: Sequence[ObjectCluster], task_index: int, k: int
) -> List[ObjectCluster]:
    """The k clusters with the highest probability for a task, descending.

    Ties break toward the lower cluster ID; asking for more clusters than
    exist returns them all, ordered.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    ranked = sorted(clusters, key=lambda c: (-float(c.task_dist[task_index]), c.id))
    return ranked[:k]


def select_fraction(
    clusters: Sequence[ObjectCluster], task_index: int, fraction: float = 0.8
) -> List[ObjectCluster]:
    """All clusters within ``fraction`` of the task's best probability."""
    if not clusters:
        raise ValueError("cluster list is empty")
    if not (0.0 < fraction <= 1.0):
        raise ValueError("fraction must be in (0, 1]")
    probs = [float(c.task_dist[task_index]) for c in clusters]
    cutoff = fraction * max(probs)
    return [c for c, p in zip(clusters, probs) if p >= cutoff]
