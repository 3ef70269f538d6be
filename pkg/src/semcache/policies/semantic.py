"""Similarity-aware eviction policies.

These consume the geometry of a hit: the kernel-weighted neighborhood
(SphereLfu), hit proximity (DistanceLfu), an online clustering of the
residents (ClusterLfu/ClusterLru), or per-query surprisal scores carried
by the trace (Surprisal, SurprisalLfu).
"""
from __future__ import annotations

import math

import numpy as np

from semcache.engine import CacheEntry, ConfigError, Policy, PolicyDecision, RequestOutcome
from semcache.index import FlatIndex
from semcache.policies.base import LazyMinHeap
from semcache.policies.classic import LfuPolicy


class SphereLfuPolicy(Policy):
    """Soft frequency counting over hit neighborhoods.

    Every neighbor of a hit receives a responsibility share proportional to
    (count + alpha) * exp(-kappa * dist^2 / 2); the shares of one hit sum to
    one, so with gamma=1 total counter mass grows by exactly one per hit.
    Instead of decaying every counter on every request, all counters are
    halved every `halve_every` requests (defaults to the cache capacity;
    None disables). Victim is the lowest counter, ties by oldest insertion.
    """

    name = "sphere-lfu"

    def __init__(
        self,
        kappa: float = 8.0,
        alpha: float = 1.0,
        gamma: float = 1.0,
        top_k: int | None = None,
        halve_every: int | None = 0,
    ):
        if kappa < 0:
            raise ConfigError(f"kappa must be non-negative, got {kappa}")
        if alpha <= 0:
            raise ConfigError(f"alpha must be positive, got {alpha}")
        if not (0.0 < gamma <= 1.0):
            raise ConfigError(f"gamma must lie in (0, 1], got {gamma}")
        if top_k is not None and top_k < 1:
            raise ConfigError(f"top_k must be at least 1, got {top_k}")
        self.kappa = float(kappa)
        self.alpha = float(alpha)
        self.gamma = float(gamma)
        self.top_k = top_k
        self._halve_every = halve_every  # 0 means "use the cache capacity"
        self.counts: dict[int, float] = {}
        self._heap = LazyMinHeap()

    def bind(self, cache) -> None:
        super().bind(cache)
        if self._halve_every == 0:
            self._halve_every = cache.config.capacity

    def _key(self, entry_id: int):
        count = self.counts.get(entry_id)
        if count is None:
            return None
        return (count, self.cache.entries[entry_id].inserted_at)

    def on_request(self, index: int) -> None:
        if self._halve_every and index > 0 and index % self._halve_every == 0:
            for eid in self.counts:
                self.counts[eid] *= 0.5
            self._heap.rebuild((self._key(eid), eid) for eid in self.counts)

    def responsibilities(self, neighbors) -> np.ndarray:
        """Normalized kernel weights for a hit neighborhood (nearest first)."""
        dists = np.array([n.dist for n in neighbors], dtype=np.float64)
        counts = np.array([self.counts[n.id] for n in neighbors], dtype=np.float64)
        # shift exponents by the nearest distance so the top weight is
        # exp(0) and enormous kappa cannot underflow the whole neighborhood
        expo = -0.5 * self.kappa * (dists * dists - dists[0] * dists[0])
        weights = (counts + self.alpha) * np.exp(expo)
        return weights / weights.sum()

    def on_hit(self, outcome: RequestOutcome, query) -> None:
        neighbors = outcome.neighbors
        if self.top_k is not None:
            neighbors = neighbors[: self.top_k]
        shares = self.responsibilities(neighbors)
        for neighbor, share in zip(neighbors, shares):
            self.counts[neighbor.id] = self.gamma * self.counts[neighbor.id] + float(share)
            self._heap.push(self._key(neighbor.id), neighbor.id)

    def on_insert(self, entry: CacheEntry) -> None:
        self.counts[entry.id] = 0.0
        self._heap.push((0.0, entry.inserted_at), entry.id)

    def on_evict(self, entry: CacheEntry) -> None:
        del self.counts[entry.id]

    def decide(self, query, index) -> PolicyDecision:
        victim = self._heap.pop_valid(self._key)
        return PolicyDecision(admit=True, victim=victim)


class MissLfuPolicy(LfuPolicy):
    """LFU that only admits entries with no stored semantic duplicate.

    Under strict range-query semantics every miss already has no resident
    within the threshold, and a batch is folded request by request, so the
    admission filter never fires and behavior coincides with plain LFU.
    Kept as a distinct name so traces record which rule was intended.
    """

    name = "miss-lfu"


class _Cluster:
    __slots__ = ("members", "counter", "last_access", "created_at")

    def __init__(self, created_at: int):
        self.members: dict[int, None] = {}
        self.counter = 0
        self.last_access = created_at
        self.created_at = created_at


class _ClusterPolicy(Policy):
    """Greedy online clustering of residents.

    The first member of a cluster is its representative and never changes.
    An inserted entry joins the cluster with the nearest representative
    strictly within the threshold, otherwise it founds a new cluster. A hit
    on any member bumps the member's cluster. Eviction picks the coldest
    cluster (subclass-defined key, ties by oldest creation) and removes a
    uniformly random member.

    The directory persists across residency: a cluster that loses its last
    member keeps its representative, counter, and creation time, it just
    stops being an eviction candidate until someone joins again. Without
    that persistence no cluster could ever reach two members, because any
    request within the threshold of a resident representative is a hit and
    hits never insert.
    """

    def __init__(self, rng: np.random.Generator):
        self.rng = rng
        self.clusters: dict[int, _Cluster] = {}
        self.cluster_of: dict[int, int] = {}
        self._reps: FlatIndex | None = None
        self._heap = LazyMinHeap()

    def bind(self, cache) -> None:
        super().bind(cache)
        self._reps = FlatIndex(cache.config.dim)

    def _cluster_key(self, cid: int):
        raise NotImplementedError

    def _key(self, cid: int):
        # memberless clusters stay in the directory but cannot be victims
        cluster = self.clusters[cid]
        if not cluster.members:
            return None
        return (self._cluster_key(cid), cluster.created_at)

    def on_insert(self, entry: CacheEntry) -> None:
        near = self._reps.query_topm(entry.vector, 1, self.cache.config.d_thresh)
        if near:
            cid = near[0].id
            cluster = self.clusters[cid]
        else:
            cid = self._reps.insert(entry.vector)
            cluster = _Cluster(created_at=entry.inserted_at)
            self.clusters[cid] = cluster
        cluster.members[entry.id] = None
        cluster.last_access = entry.inserted_at
        self.cluster_of[entry.id] = cid
        self._heap.push(self._key(cid), cid)

    def on_hit(self, outcome: RequestOutcome, query) -> None:
        cid = self.cluster_of[outcome.top.id]
        cluster = self.clusters[cid]
        cluster.counter += 1
        cluster.last_access = outcome.index
        self._heap.push(self._key(cid), cid)

    def decide(self, query, index) -> PolicyDecision:
        key, cid = self._heap.peek_valid(self._key)
        members = list(self.clusters[cid].members)
        victim = members[int(self.rng.integers(len(members)))]
        return PolicyDecision(admit=True, victim=victim)

    def on_evict(self, entry: CacheEntry) -> None:
        cid = self.cluster_of.pop(entry.id)
        del self.clusters[cid].members[entry.id]


class ClusterLfuPolicy(_ClusterPolicy):
    """Coldest cluster by total member-directed hits."""

    name = "cluster-lfu"

    def _cluster_key(self, cid: int):
        return self.clusters[cid].counter


class ClusterLruPolicy(_ClusterPolicy):
    """Coldest cluster by most recent access to any member."""

    name = "cluster-lru"

    def _cluster_key(self, cid: int):
        return self.clusters[cid].last_access


class DistanceLfuPolicy(Policy):
    """Proximity-weighted frequency: a hit at distance d adds 1 - d/t, so
    near-identical reuse counts fully and boundary reuse barely counts."""

    name = "distance-lfu"

    def __init__(self) -> None:
        self.counts: dict[int, float] = {}
        self._heap = LazyMinHeap()

    def _key(self, entry_id: int):
        count = self.counts.get(entry_id)
        if count is None:
            return None
        return (count, self.cache.entries[entry_id].inserted_at)

    def on_insert(self, entry: CacheEntry) -> None:
        self.counts[entry.id] = 0.0
        self._heap.push((0.0, entry.inserted_at), entry.id)

    def on_hit(self, outcome: RequestOutcome, query) -> None:
        eid = outcome.top.id
        self.counts[eid] += 1.0 - outcome.top.dist / self.cache.config.d_thresh
        self._heap.push(self._key(eid), eid)

    def on_evict(self, entry: CacheEntry) -> None:
        del self.counts[entry.id]

    def decide(self, query, index) -> PolicyDecision:
        victim = self._heap.pop_valid(self._key)
        return PolicyDecision(admit=True, victim=victim)


class SurprisalPolicy(Policy):
    """Evict the highest-surprisal resident: rare wording is the least
    likely to be asked again. Ties by oldest insertion."""

    name = "surprisal"
    requires_surprisal = True

    def __init__(self) -> None:
        self._heap = LazyMinHeap()

    def _key(self, entry_id: int):
        entry = self.cache.entries.get(entry_id)
        if entry is None:
            return None
        return (-entry.surprisal, entry.inserted_at)

    def on_insert(self, entry: CacheEntry) -> None:
        if entry.surprisal is None:
            raise ConfigError("surprisal policy requires surprisal on every entry")
        self._heap.push(self._key(entry.id), entry.id)

    def decide(self, query, index) -> PolicyDecision:
        victim = self._heap.pop_valid(self._key)
        return PolicyDecision(admit=True, victim=victim)


class SurprisalLfuPolicy(Policy):
    """Among the lowest-hit-count residents, evict the highest surprisal;
    remaining ties by oldest insertion."""

    name = "surprisal-lfu"
    requires_surprisal = True

    def __init__(self) -> None:
        self.counts: dict[int, int] = {}
        self._heap = LazyMinHeap()

    def _key(self, entry_id: int):
        count = self.counts.get(entry_id)
        if count is None:
            return None
        entry = self.cache.entries[entry_id]
        return (count, -entry.surprisal, entry.inserted_at)

    def on_insert(self, entry: CacheEntry) -> None:
        if entry.surprisal is None:
            raise ConfigError("surprisal-lfu policy requires surprisal on every entry")
        self.counts[entry.id] = 0
        self._heap.push(self._key(entry.id), entry.id)

    def on_hit(self, outcome: RequestOutcome, query) -> None:
        eid = outcome.top.id
        self.counts[eid] += 1
        self._heap.push(self._key(eid), eid)

    def on_evict(self, entry: CacheEntry) -> None:
        del self.counts[entry.id]

    def decide(self, query, index) -> PolicyDecision:
        victim = self._heap.pop_valid(self._key)
        return PolicyDecision(admit=True, victim=victim)
