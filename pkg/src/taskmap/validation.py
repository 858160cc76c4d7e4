"""Input validation helpers shared across the package."""

from __future__ import annotations

import numpy as np


def as_points(points, name="points"):
    """Coerce to a float64 (n, 3) array, rejecting anything else."""
    arr = np.asarray(points, dtype=np.float64)
    if arr.ndim == 1 and arr.size == 3:
        arr = arr.reshape(1, 3)
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise ValueError(f"{name} must have shape (n, 3), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def as_vector(x, length=None, name="vector"):
    arr = np.asarray(x, dtype=np.float64).reshape(-1)
    if length is not None and arr.size != length:
        raise ValueError(f"{name} must have length {length}, got {arr.size}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def check_probability(p, name="probability", open_interval=False):
    p = float(p)
    if open_interval:
        if not (0.0 < p < 1.0):
            raise ValueError(f"{name} must be in (0, 1), got {p}")
    elif not (0.0 <= p <= 1.0):
        raise ValueError(f"{name} must be in [0, 1], got {p}")
    return p


def check_distribution(dist, length=None, name="distribution", tol=1e-9):
    """Validate a probability vector: entries in [0, 1], sums to 1 within tol."""
    arr = as_vector(dist, length=length, name=name)
    if np.any(arr < -tol) or np.any(arr > 1.0 + tol):
        raise ValueError(f"{name} has entries outside [0, 1]")
    total = float(arr.sum())
    if abs(total - 1.0) > tol:
        raise ValueError(f"{name} sums to {total}, expected 1 within {tol}")
    return arr


def check_rotation(matrix, name="rotation", tol=1e-6):
    """Validate a 3x3 rotation: orthonormal within tol, det = +1."""
    arr = np.asarray(matrix, dtype=np.float64)
    if arr.shape != (3, 3):
        raise ValueError(f"{name} must be 3x3, got {arr.shape}")
    err = np.abs(arr.T @ arr - np.eye(3)).max()
    if err > tol:
        raise ValueError(f"{name} is not orthonormal (max deviation {err:.2e})")
    if np.linalg.det(arr) < 0:
        raise ValueError(f"{name} has negative determinant")
    return arr


def check_is_fitted(estimator, attribute):
    """Raise if the estimator has not been fitted (sklearn convention)."""
    if not hasattr(estimator, attribute):
        raise RuntimeError(
            f"{type(estimator).__name__} is not fitted; call fit() first"
        )
