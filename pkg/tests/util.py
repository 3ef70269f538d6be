"""Shared helpers for building traces and replaying them through the engine."""
from __future__ import annotations

import numpy as np

from semcache.engine import CacheConfig, SemanticCache
from semcache.policies import make_policy
from semcache.traceio import TraceEntry


def random_unit_rows(count: int, dim: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    mat = rng.standard_normal((count, dim))
    mat /= np.linalg.norm(mat, axis=1, keepdims=True)
    return np.ascontiguousarray(mat, dtype=np.float32)


def min_pairwise_distance(mat: np.ndarray) -> float:
    m = np.asarray(mat, dtype=np.float64)
    d2 = np.sum((m[:, None, :] - m[None, :, :]) ** 2, axis=-1)
    np.fill_diagonal(d2, np.inf)
    return float(np.sqrt(d2.min()))


def replay_engine(
    name: str,
    vectors: np.ndarray,
    capacity: int,
    d_thresh: float,
    seed: int | None = None,
    params: dict | None = None,
    surprisals=None,
    require_unit: bool = True,
):
    """Run one policy over raw vectors; returns (hit list, evicted vector bytes)."""
    policy = make_policy(name, seed=seed, **(params or {}))
    cache = SemanticCache(
        CacheConfig(vectors.shape[1], capacity, d_thresh, require_unit=require_unit),
        policy,
    )
    evicted: list[bytes] = []
    original = policy.on_evict

    def spy(entry, _orig=original):
        evicted.append(np.asarray(entry.vector, dtype=np.float64).tobytes())
        _orig(entry)

    policy.on_evict = spy
    if surprisals is None:
        surprisals = [None] * len(vectors)
    hits = [
        cache.process_request(TraceEntry(i, v, s)).hit
        for i, (v, s) in enumerate(zip(vectors, surprisals))
    ]
    return hits, evicted, cache


def pool_key_lookup(pool: np.ndarray) -> dict[bytes, int]:
    return {
        np.asarray(row, dtype=np.float64).tobytes(): i for i, row in enumerate(pool)
    }


def zipfish_keys(pool_size: int, requests: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    weights = 1.0 / np.arange(1, pool_size + 1, dtype=np.float64)
    weights /= weights.sum()
    return rng.choice(pool_size, size=requests, p=weights)


def degenerate_twin_run(
    name: str,
    requests: int = 400,
    pool_size: int = 30,
    capacity: int = 8,
    seed: int = 5,
    params: dict | None = None,
):
    """Replay one skewed exact-repeat trace through the semantic engine at a
    threshold below the minimum pairwise distance, and through the matching
    exact-match reference simulator; returns both hit and victim sequences
    keyed by pool index."""
    from exact_sim import make_sim

    pool = random_unit_rows(pool_size, 16, seed)
    d_thresh = min_pairwise_distance(pool) / 2.0
    keys = zipfish_keys(pool_size, requests, seed + 1)
    per_key_surprisal = np.abs(np.random.default_rng(seed + 2).normal(size=pool_size))
    surprisals = [float(per_key_surprisal[k]) for k in keys]

    hits, evicted, _ = replay_engine(
        name,
        pool[keys],
        capacity,
        d_thresh,
        seed=seed + 3,
        params=params,
        surprisals=surprisals,
    )
    lookup = pool_key_lookup(pool)
    engine_victims = [lookup[raw] for raw in evicted]

    sim = make_sim(name, capacity, seed=seed + 3, **(params or {}))
    sim_hits = sim.replay([int(k) for k in keys], surprisals)
    return hits, engine_victims, sim_hits, sim.evictions
