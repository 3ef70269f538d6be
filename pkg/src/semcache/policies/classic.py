"""Classic cache replacement policies lifted onto the semantic engine.

Bookkeeping targets the top (nearest) item of a hit. Frequency counters
start at zero on insertion and count hits only, so counter mass always
equals the number of hits an entry has absorbed. All count/recency ties
break toward the oldest insertion, which is unique per run.
"""
from __future__ import annotations

from collections import OrderedDict, deque

import numpy as np

from semcache.engine import CacheEntry, ConfigError, Policy, PolicyDecision, RequestOutcome
from semcache.index import FlatIndex
from semcache.policies.base import LazyMinHeap


class FifoPolicy(Policy):
    """Evict the oldest insertion; hits change nothing."""

    name = "fifo"

    def decide(self, query, index) -> PolicyDecision:
        oldest = next(iter(self.cache.entries))
        return PolicyDecision(admit=True, victim=oldest)


class RandomPolicy(Policy):
    """Evict a uniformly random resident (one draw per eviction)."""

    name = "random"

    def __init__(self, rng: np.random.Generator):
        self.rng = rng

    def decide(self, query, index) -> PolicyDecision:
        ids = list(self.cache.entries)
        victim = ids[int(self.rng.integers(len(ids)))]
        return PolicyDecision(admit=True, victim=victim)


class LruPolicy(Policy):
    """Evict the least recently used entry; a hit refreshes only the top item."""

    name = "lru"

    def __init__(self) -> None:
        self._order: OrderedDict[int, None] = OrderedDict()

    def on_insert(self, entry: CacheEntry) -> None:
        self._order[entry.id] = None

    def on_hit(self, outcome: RequestOutcome, query) -> None:
        self._order.move_to_end(outcome.top.id)

    def on_evict(self, entry: CacheEntry) -> None:
        del self._order[entry.id]

    def decide(self, query, index) -> PolicyDecision:
        victim = next(iter(self._order))
        return PolicyDecision(admit=True, victim=victim)


class LfuPolicy(Policy):
    """Evict the lowest hit count, ties by oldest insertion."""

    name = "lfu"

    def __init__(self) -> None:
        self.counts: dict[int, int] = {}
        self._heap = LazyMinHeap()

    def _key(self, entry_id: int):
        count = self.counts.get(entry_id)
        if count is None:
            return None
        return (count, self.cache.entries[entry_id].inserted_at)

    def on_insert(self, entry: CacheEntry) -> None:
        self.counts[entry.id] = 0
        self._heap.push((0, entry.inserted_at), entry.id)

    def on_hit(self, outcome: RequestOutcome, query) -> None:
        eid = outcome.top.id
        self.counts[eid] += 1
        self._heap.push(self._key(eid), eid)

    def on_evict(self, entry: CacheEntry) -> None:
        del self.counts[entry.id]

    def decide(self, query, index) -> PolicyDecision:
        victim = self._heap.pop_valid(self._key)
        return PolicyDecision(admit=True, victim=victim)


class LfuDaPolicy(Policy):
    """LFU with dynamic aging: priorities carry a floor that rises to the
    priority of whatever was last evicted, so stale heavy hitters age out."""

    name = "lfuda"

    def __init__(self) -> None:
        self.priority: dict[int, float] = {}
        self.age = 0.0
        self._heap = LazyMinHeap()

    def _key(self, entry_id: int):
        prio = self.priority.get(entry_id)
        if prio is None:
            return None
        return (prio, self.cache.entries[entry_id].inserted_at)

    def on_insert(self, entry: CacheEntry) -> None:
        self.priority[entry.id] = self.age
        self._heap.push(self._key(entry.id), entry.id)

    def on_hit(self, outcome: RequestOutcome, query) -> None:
        eid = outcome.top.id
        self.priority[eid] += 1.0
        self._heap.push(self._key(eid), eid)

    def on_evict(self, entry: CacheEntry) -> None:
        self.age = self.priority.pop(entry.id)

    def decide(self, query, index) -> PolicyDecision:
        victim = self._heap.pop_valid(self._key)
        return PolicyDecision(admit=True, victim=victim)


class LruKPolicy(Policy):
    """Evict by oldest K-th most recent access; insertion counts as the
    first access. Entries with fewer than K accesses go first, ordered by
    plain LRU among themselves."""

    name = "lru-k"

    def __init__(self, k: int = 2):
        if k < 1:
            raise ConfigError(f"lru-k needs k >= 1, got {k}")
        self.k = int(k)
        self.history: dict[int, deque[int]] = {}
        self._heap = LazyMinHeap()

    def _key(self, entry_id: int):
        hist = self.history.get(entry_id)
        if hist is None:
            return None
        if len(hist) < self.k:
            return (0, hist[-1])
        return (1, hist[0])

    def on_insert(self, entry: CacheEntry) -> None:
        self.history[entry.id] = deque([entry.inserted_at], maxlen=self.k)
        self._heap.push(self._key(entry.id), entry.id)

    def on_hit(self, outcome: RequestOutcome, query) -> None:
        eid = outcome.top.id
        self.history[eid].append(outcome.index)
        self._heap.push(self._key(eid), eid)

    def on_evict(self, entry: CacheEntry) -> None:
        del self.history[entry.id]

    def decide(self, query, index) -> PolicyDecision:
        victim = self._heap.pop_valid(self._key)
        return PolicyDecision(admit=True, victim=victim)


class ArcPolicy(Policy):
    """Adaptive replacement cache with a semantic ghost directory.

    Residents split into a recency list T1 and a frequency list T2; evicted
    entries leave their vectors behind in ghost lists B1/B2. A miss that
    lands strictly within the threshold of a ghost counts as a directory
    hit for that ghost's list and steers the adaptation target p. Ghost
    bookkeeping follows the classic algorithm: |T1|+|B1| never exceeds the
    capacity and the whole directory never exceeds twice the capacity.
    """

    name = "arc"

    def __init__(self) -> None:
        self.t1: OrderedDict[int, None] = OrderedDict()
        self.t2: OrderedDict[int, None] = OrderedDict()
        self.b1: OrderedDict[int, None] = OrderedDict()
        self.b2: OrderedDict[int, None] = OrderedDict()
        self.p = 0.0
        self._ghosts: FlatIndex | None = None
        self._pending: tuple[str, int | None] = ("cold", None)
        self._evict_dest: str | None = None

    def bind(self, cache) -> None:
        super().bind(cache)
        self._ghosts = FlatIndex(cache.config.dim)

    def _drop_ghost_lru(self, book: OrderedDict) -> None:
        gid, _ = book.popitem(last=False)
        self._ghosts.remove(gid)

    def on_hit(self, outcome: RequestOutcome, query) -> None:
        eid = outcome.top.id
        if eid in self.t1:
            del self.t1[eid]
            self.t2[eid] = None
        else:
            self.t2.move_to_end(eid)

    def on_miss(self, query, index) -> None:
        cap = self.cache.config.capacity
        match = self._ghosts.query_topm(query, 1, self.cache.config.d_thresh)
        if match and match[0].id in self.b1:
            delta = max(1.0, len(self.b2) / len(self.b1))
            self.p = min(self.p + delta, float(cap))
            self._pending = ("b1", match[0].id)
        elif match and match[0].id in self.b2:
            delta = max(1.0, len(self.b1) / len(self.b2))
            self.p = max(self.p - delta, 0.0)
            self._pending = ("b2", match[0].id)
        else:
            self._pending = ("cold", None)
            l1 = len(self.t1) + len(self.b1)
            total = l1 + len(self.t2) + len(self.b2)
            if l1 >= cap:
                if self.b1:
                    self._drop_ghost_lru(self.b1)
            elif total >= 2 * cap and self.b2:
                self._drop_ghost_lru(self.b2)

    def decide(self, query, index) -> PolicyDecision:
        case, _ = self._pending
        if case == "cold" and len(self.t1) >= self.cache.config.capacity:
            # T1 fills the whole cache: recycle its LRU without ghosting it
            victim = next(iter(self.t1))
            self._evict_dest = None
            return PolicyDecision(admit=True, victim=victim)
        take_t1 = bool(self.t1) and (
            len(self.t1) > self.p or (case == "b2" and len(self.t1) == self.p)
        )
        if take_t1 or not self.t2:
            victim = next(iter(self.t1))
            self._evict_dest = "b1"
        else:
            victim = next(iter(self.t2))
            self._evict_dest = "b2"
        return PolicyDecision(admit=True, victim=victim)

    def on_evict(self, entry: CacheEntry) -> None:
        if entry.id in self.t1:
            del self.t1[entry.id]
        else:
            del self.t2[entry.id]
        if self._evict_dest is not None:
            gid = self._ghosts.insert(entry.vector)
            book = self.b1 if self._evict_dest == "b1" else self.b2
            book[gid] = None
        self._evict_dest = None

    def on_insert(self, entry: CacheEntry) -> None:
        case, gid = self._pending
        if case in ("b1", "b2"):
            book = self.b1 if case == "b1" else self.b2
            del book[gid]
            self._ghosts.remove(gid)
            self.t2[entry.id] = None
        else:
            self.t1[entry.id] = None
        self._pending = ("cold", None)


class RapPolicy(Policy):
    """Randomized admission: the LFU-minimal resident with counter C is
    replaced with probability 1 / (C + 1); otherwise the miss is refused.
    Reuses the residents' own hit counters, no shadow state."""

    name = "rap"

    def __init__(self, rng: np.random.Generator):
        self.rng = rng
        self.counts: dict[int, int] = {}
        self._heap = LazyMinHeap()

    def _key(self, entry_id: int):
        count = self.counts.get(entry_id)
        if count is None:
            return None
        return (count, self.cache.entries[entry_id].inserted_at)

    def on_insert(self, entry: CacheEntry) -> None:
        self.counts[entry.id] = 0
        self._heap.push((0, entry.inserted_at), entry.id)

    def on_hit(self, outcome: RequestOutcome, query) -> None:
        eid = outcome.top.id
        self.counts[eid] += 1
        self._heap.push(self._key(eid), eid)

    def on_evict(self, entry: CacheEntry) -> None:
        del self.counts[entry.id]

    def decide(self, query, index) -> PolicyDecision:
        key, victim = self._heap.peek_valid(self._key)
        admit_prob = 1.0 / (key[0] + 1.0)
        if float(self.rng.random()) < admit_prob:
            return PolicyDecision(admit=True, victim=victim)
        return PolicyDecision(admit=False)
