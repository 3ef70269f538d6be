"""Core vector math shared by the cache, the oracles, and the generators.

All distance work happens in float64 regardless of how vectors are stored;
trace files keep float32 for compactness.
"""
from __future__ import annotations

import numpy as np

# A single strict hit predicate is used everywhere so that edge cases at the
# threshold boundary cannot diverge between the online engine and the
# clairvoyant replays.


def is_hit(dist: float, threshold: float) -> bool:
    """True when a neighbor at `dist` counts as a cache hit."""
    return dist < threshold


def as_float64(v: np.ndarray) -> np.ndarray:
    arr = np.asarray(v, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"expected a 1-d vector, got shape {arr.shape}")
    return arr


def check_finite(v: np.ndarray) -> None:
    if not np.all(np.isfinite(v)):
        raise ValueError("vector has non-finite components")


def l2_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Euclidean distance between two vectors of equal dimension."""
    a64 = as_float64(a)
    b64 = as_float64(b)
    if a64.shape[0] != b64.shape[0]:
        raise ValueError(
            f"dimension mismatch: {a64.shape[0]} vs {b64.shape[0]}"
        )
    diff = a64 - b64
    return float(np.sqrt(np.dot(diff, diff)))


def normalize(v: np.ndarray) -> np.ndarray:
    """Scale `v` to unit length. Raises on the zero vector."""
    v64 = as_float64(v)
    check_finite(v64)
    norm = float(np.linalg.norm(v64))
    if norm == 0.0:
        raise ValueError("cannot normalize the zero vector")
    return v64 / norm


def l2_to_cosine(dist: float) -> float:
    """Cosine similarity equivalent to an L2 distance between unit vectors.

    For unit vectors ||a-b||^2 = 2 - 2*cos(a,b), so cos = 1 - dist^2 / 2.
    Only defined on [0, 2]: unit vectors cannot be farther apart than
    antipodal.
    """
    if not (0.0 <= dist <= 2.0):
        raise ValueError(f"distance {dist} outside [0, 2] for unit vectors")
    return 1.0 - dist * dist / 2.0


def is_unit(v: np.ndarray, tol: float = 1e-6) -> bool:
    return abs(float(np.linalg.norm(np.asarray(v, dtype=np.float64))) - 1.0) <= tol


def check_threshold(d_thresh: float) -> float:
    """Validate a similarity threshold: must sit strictly inside (0, 2)."""
    d = float(d_thresh)
    if not (0.0 < d < 2.0):
        raise ValueError(f"threshold must lie in (0, 2), got {d}")
    return d
