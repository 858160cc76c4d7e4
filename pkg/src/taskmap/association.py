"""Mask-to-Gaussian association: pinhole projection plus depth-based occlusion.

A mask either ships a precomputed Gaussian-ID list (returned verbatim) or is
resolved geometrically: a Gaussian belongs to the mask when its centroid
projects onto a mask pixel and agrees with the depth map there. Centroids map
to a single nearest pixel; no depth interpolation across pixels, since masks
are pixel sets and interpolating across object boundaries fabricates
occlusion values.
"""

from __future__ import annotations

from typing import Optional, Set

import numpy as np

from .io import rle_decode
from .types import CameraFrame, DepthMap, MapState, MaskObservation

# Depth agreement tolerance: absolute floor plus a relative term, since splat
# depth noise grows with range.
DEFAULT_DEPTH_TOL = 0.05
DEFAULT_DEPTH_TOL_REL = 0.02


def project_centroid(center, cam: CameraFrame):
    """Project a world point; None if behind the camera or off the image.

    Returns (u, v, z_cam) with continuous pixel coordinates; a point counts
    as inside the image when its nearest pixel is.
    """
    p = cam.rotation @ np.asarray(center, dtype=np.float64) + cam.translation
    z = float(p[2])
    if z <= 0.0:
        return None
    u = cam.fx * float(p[0]) / z + cam.cx
    v = cam.fy * float(p[1]) / z + cam.cy
    pu = int(np.floor(u + 0.5))
    pv = int(np.floor(v + 0.5))
    if not (0 <= pu < cam.width and 0 <= pv < cam.height):
        return None
    return u, v, z


class FrameProjection:
    """All Gaussian centroids projected into one camera, computed once per frame."""

    def __init__(self, state: MapState, cam: CameraFrame):
        self.cam = cam
        p = state.centers @ cam.rotation.T + cam.translation
        z = p[:, 2]
        with np.errstate(divide="ignore", invalid="ignore"):
            u = cam.fx * p[:, 0] / z + cam.cx
            v = cam.fy * p[:, 1] / z + cam.cy
        pu = np.floor(u + 0.5).astype(np.int64)
        pv = np.floor(v + 0.5).astype(np.int64)
        valid = (
            (z > 0.0)
            & (pu >= 0)
            & (pu < cam.width)
            & (pv >= 0)
            & (pv < cam.height)
        )
        self.z = z
        self.valid = valid
        # Row-major linear pixel index; -1 for invalid projections.
        self.pixel = np.where(valid, pv * cam.width + pu, -1)

    def in_mask_rows(
        self,
        mask_pixels: np.ndarray,
        depth: Optional[DepthMap],
        depth_tol: float,
        depth_tol_rel: float,
    ) -> np.ndarray:
        """Rows whose projection lands on a mask pixel and passes the depth test."""
        n_pixels = self.cam.width * self.cam.height
        lookup = np.zeros(n_pixels, dtype=bool)
        lookup[mask_pixels] = True
        hit = self.valid & lookup[np.clip(self.pixel, 0, n_pixels - 1)]
        rows = np.nonzero(hit)[0]
        if depth is None:
            return rows
        d = depth.depths.reshape(-1)[self.pixel[rows]].astype(np.float64)
        z = self.z[rows]
        tol = np.maximum(depth_tol, depth_tol_rel * z)
        ok = np.isfinite(d) & (d > 0.0) & (np.abs(z - d) <= tol)
        return rows[ok]


def associate_mask(
    mask: MaskObservation,
    cam: CameraFrame,
    depth: Optional[DepthMap],
    state: MapState,
    depth_tol: float = DEFAULT_DEPTH_TOL,
    depth_tol_rel: float = DEFAULT_DEPTH_TOL_REL,
    projection: Optional[FrameProjection] = None,
) -> Set[int]:
    """Resolve the set of visible, unoccluded Gaussian IDs for one mask.

    Precomputed ``gaussian_ids`` pass through verbatim. Otherwise every
    Gaussian whose nearest projected pixel lies in the mask and whose camera
    depth agrees with the depth map within max(depth_tol, depth_tol_rel * z)
    is included; invalid depth pixels exclude the Gaussian.
    """
    if mask.gaussian_ids is not None:
        unknown = [g for g in mask.gaussian_ids if int(g) not in state.id_to_row]
        if unknown:
            raise KeyError(f"unknown Gaussian ID {unknown[0]} in mask {mask.mask_id}")
        return {int(g) for g in mask.gaussian_ids}
    if depth is None:
        raise ValueError(
            f"mask {mask.mask_id} has no precomputed gaussian_ids and no depth map"
        )
    if projection is None:
        projection = FrameProjection(state, cam)
    mask_pixels = rle_decode(mask.rle, cam.width * cam.height)
    rows = projection.in_mask_rows(mask_pixels, depth, depth_tol, depth_tol_rel)
    return {int(state.ids[r]) for r in rows}
