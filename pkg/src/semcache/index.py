"""Exact nearest-neighbor index over the currently cached vectors.

Only a brute-force flat backend ships; the base class exists so an
approximate backend can be swapped in without touching the engine. Results
are deterministic: ties on distance break toward the lower entry id, and
entry ids are never reused within a run.
"""
from __future__ import annotations

from typing import NamedTuple

import numpy as np

from semcache.vectors import check_finite


class Neighbor(NamedTuple):
    id: int
    dist: float


class VectorIndex:
    """Interface required by the cache engine."""

    def insert(self, vector: np.ndarray) -> int:
        raise NotImplementedError

    def remove(self, entry_id: int) -> None:
        raise NotImplementedError

    def query_range(self, query: np.ndarray, threshold: float) -> list[Neighbor]:
        raise NotImplementedError

    def query_topm(self, query: np.ndarray, m: int, threshold: float) -> list[Neighbor]:
        raise NotImplementedError


class FlatIndex(VectorIndex):
    """Brute-force scan in float64 with O(size * dim) queries."""

    def __init__(self, dim: int):
        if dim < 1:
            raise ValueError("dimension must be at least 1")
        self.dim = int(dim)
        self._next_id = 0
        self._size = 0
        cap = 16
        self._vecs = np.empty((cap, self.dim), dtype=np.float64)
        self._norms2 = np.empty(cap, dtype=np.float64)  # squared row norms
        self._ids = np.empty(cap, dtype=np.int64)
        self._row_of: dict[int, int] = {}

    def __len__(self) -> int:
        return self._size

    def __contains__(self, entry_id: int) -> bool:
        return entry_id in self._row_of

    def ids(self) -> list[int]:
        return sorted(self._row_of)

    def _check_query(self, v: np.ndarray) -> np.ndarray:
        arr = np.asarray(v, dtype=np.float64)
        if arr.ndim != 1 or arr.shape[0] != self.dim:
            raise ValueError(f"expected a vector of dimension {self.dim}, got shape {arr.shape}")
        check_finite(arr)
        return arr

    def insert(self, vector: np.ndarray) -> int:
        v = self._check_query(vector)
        if self._size == self._vecs.shape[0]:
            cap = self._vecs.shape[0] * 2
            self._vecs = np.resize(self._vecs, (cap, self.dim))
            self._norms2 = np.resize(self._norms2, cap)
            self._ids = np.resize(self._ids, cap)
        row = self._size
        self._vecs[row] = v
        self._norms2[row] = float(np.dot(v, v))
        entry_id = self._next_id
        self._next_id += 1
        self._ids[row] = entry_id
        self._row_of[entry_id] = row
        self._size += 1
        return entry_id

    def remove(self, entry_id: int) -> None:
        try:
            row = self._row_of.pop(entry_id)
        except KeyError:
            raise KeyError(f"entry id {entry_id} is not in the index") from None
        last = self._size - 1
        if row != last:
            self._vecs[row] = self._vecs[last]
            self._norms2[row] = self._norms2[last]
            moved = int(self._ids[last])
            self._ids[row] = moved
            self._row_of[moved] = row
        self._size = last

    def _distances(self, q: np.ndarray) -> np.ndarray:
        n = self._size
        # ||x - q||^2 = ||x||^2 + ||q||^2 - 2 x.q, clamped against rounding
        d2 = self._norms2[:n] + float(np.dot(q, q)) - 2.0 * (self._vecs[:n] @ q)
        np.maximum(d2, 0.0, out=d2)
        return np.sqrt(d2)

    def query_range(self, query: np.ndarray, threshold: float) -> list[Neighbor]:
        """All entries strictly within `threshold`, nearest first."""
        q = self._check_query(query)
        if self._size == 0:
            return []
        dists = self._distances(q)
        mask = dists < threshold
        if not mask.any():
            return []
        ids = self._ids[: self._size][mask]
        hits = dists[mask]
        order = np.lexsort((ids, hits))
        return [Neighbor(int(ids[i]), float(hits[i])) for i in order]

    def query_topm(self, query: np.ndarray, m: int, threshold: float) -> list[Neighbor]:
        """At most `m` nearest entries strictly within `threshold`."""
        if m < 0:
            raise ValueError("m must be non-negative")
        return self.query_range(query, threshold)[:m]
