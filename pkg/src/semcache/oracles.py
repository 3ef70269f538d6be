"""Clairvoyant replay baselines.

Everything here sees the whole trace in advance. `belady_opt` is the classic
farthest-next-use rule over exact keys, extended with bypass: a missed item
whose own next use is no nearer than every resident's is not admitted, which
is what makes the rule optimal when admission is optional. The semantic
oracles work off a precomputed cover table (future request indices within
the threshold) and come in three flavors: cluster-then-Belady (crvb),
marginal future coverage (fgrvb), and next-covered-request greedy (rgrvb).
`vopt_bruteforce` solves tiny instances exactly by dynamic programming.
"""
from __future__ import annotations

import heapq
from math import comb

import numpy as np

from semcache.engine import ConfigError
from semcache.vectors import check_threshold

# past this the O(n^2) pairwise pass stops being a desk-scale computation
COVER_CAP = 100_000
_BLOCK = 256


def _as_matrix(vectors) -> np.ndarray:
    mat = np.ascontiguousarray(np.asarray(vectors, dtype=np.float64))
    if mat.ndim != 2:
        raise ConfigError(f"expected a (count, dim) array, got shape {mat.shape}")
    return mat


def build_cover_table(vectors, threshold: float, cap: int = COVER_CAP) -> list[np.ndarray]:
    """cover[i] = sorted future indices j > i with d(r_i, r_j) < threshold."""
    check_threshold(threshold)
    mat = _as_matrix(vectors)
    n = len(mat)
    if n > cap:
        raise ConfigError(
            f"cover table needs {n}x{n} pairwise distances; {n} requests exceeds "
            f"the cap of {cap}. Pass a larger cap explicitly or cut the trace."
        )
    norms2 = np.einsum("ij,ij->i", mat, mat)
    t2 = threshold * threshold
    cover: list[np.ndarray] = []
    for start in range(0, n, _BLOCK):
        stop = min(start + _BLOCK, n)
        # only columns > start can land in this block's cover sets
        tail = mat[start:]
        d2 = norms2[start:stop, None] + norms2[start:] - 2.0 * (mat[start:stop] @ tail.T)
        np.maximum(d2, 0.0, out=d2)
        for i in range(start, stop):
            row = d2[i - start]
            hits = np.nonzero(row[i - start + 1 :] < t2)[0]
            cover.append((hits + i + 1).astype(np.int64))
    return cover


def _belady_replay(keys: list, capacity: int) -> tuple[list[bool], list]:
    """Farthest-next-use with bypass over hashable keys.

    Returns (hits, server) where server[i] is the request index whose
    admission created the resident copy serving request i (None on miss).
    """
    if capacity < 1:
        raise ConfigError(f"capacity must be at least 1, got {capacity}")
    n = len(keys)
    inf = n  # strictly beyond every real index
    next_use = [inf] * n
    last_seen: dict = {}
    for i in range(n - 1, -1, -1):
        next_use[i] = last_seen.get(keys[i], inf)
        last_seen[keys[i]] = i

    resident_next: dict = {}  # key -> current next use
    inserted_by: dict = {}  # key -> request index of the admitting miss
    heap: list = []  # (-next_use, key), lazily invalidated
    hits: list[bool] = []
    server: list = []
    for i, key in enumerate(keys):
        nxt = next_use[i]
        if key in resident_next:
            hits.append(True)
            server.append(inserted_by[key])
            resident_next[key] = nxt
            heapq.heappush(heap, (-nxt, key))
            continue
        hits.append(False)
        server.append(None)
        if len(resident_next) < capacity:
            resident_next[key] = nxt
            inserted_by[key] = i
            heapq.heappush(heap, (-nxt, key))
            continue
        while True:
            far_neg, far_key = heap[0]
            if resident_next.get(far_key) == -far_neg:
                break
            heapq.heappop(heap)
        if nxt < -far_neg:
            heapq.heappop(heap)
            del resident_next[far_key]
            del inserted_by[far_key]
            resident_next[key] = nxt
            inserted_by[key] = i
            heapq.heappush(heap, (-nxt, key))
        # else bypass: every resident's next use is at least as near
    return hits, server


def belady_opt(keys, capacity: int) -> list[bool]:
    """Hit/miss sequence of the clairvoyant exact-match optimum."""
    return _belady_replay(list(keys), capacity)[0]


def crvb_cluster(vectors, threshold: float, cover: list[np.ndarray] | None = None) -> np.ndarray:
    """Greedy maximal-clique cover of the similarity graph.

    Repeatedly seeds a clique at the highest-degree unassigned node (ties to
    the lowest index) and grows it through the seed's neighbors in ascending
    index, keeping a candidate only while it is adjacent to every member so
    far. Returns a cluster id per request, ids in extraction order.
    """
    if cover is None:
        cover = build_cover_table(vectors, threshold)
    n = len(cover)
    # symmetric adjacency from the future-only cover lists
    back: list[list[int]] = [[] for _ in range(n)]
    for i, fwd in enumerate(cover):
        for j in fwd:
            back[j].append(i)
    adj = [
        np.concatenate((np.array(back[i], dtype=np.int64), cover[i]))
        for i in range(n)
    ]
    alive = np.ones(n, dtype=bool)
    labels = np.full(n, -1, dtype=np.int64)
    # max-heap on degree with lazy re-push; degrees only ever shrink
    heap = [(-len(adj[i]), i) for i in range(n)]
    heapq.heapify(heap)
    next_label = 0
    while heap:
        neg_deg, seed = heapq.heappop(heap)
        if not alive[seed]:
            continue
        degree = int(np.count_nonzero(alive[adj[seed]]))
        if degree < -neg_deg:
            heapq.heappush(heap, (-degree, seed))
            continue
        members = [seed]
        candidates = adj[seed][alive[adj[seed]]]
        candidates.sort()
        while candidates.size:
            nxt = int(candidates[0])
            members.append(nxt)
            grown = adj[nxt][alive[adj[nxt]]]
            candidates = np.intersect1d(candidates[1:], grown, assume_unique=False)
        labels[members] = next_label
        alive[members] = False
        next_label += 1
    return labels


def crvb_replay(cluster_ids, capacity: int) -> list[bool]:
    """Belady over cluster ids; each cache slot holds one cluster."""
    return belady_opt(list(cluster_ids), capacity)


class _NextCoverHeap:
    """Tracks every resident's next covered request index.

    Residents are trace positions. Supports the three things the greedy
    oracles need: who covers the current request (minimum), who is the
    least promising resident (maximum, infinity first), and pointer
    advancement as time moves on. Both heaps are lazy.
    """

    INF = float("inf")

    def __init__(self, cover: list[np.ndarray]):
        self.cover = cover
        self.ptr: dict[int, int] = {}
        self.nc: dict[int, float] = {}
        self._min: list = []
        self._max: list = []

    def _advance(self, pos: int, now: int) -> None:
        arr = self.cover[pos]
        p = self.ptr[pos]
        while p < len(arr) and arr[p] <= now:
            p += 1
        self.ptr[pos] = p
        nc = float(arr[p]) if p < len(arr) else self.INF
        self.nc[pos] = nc
        heapq.heappush(self._min, (nc, pos))
        heapq.heappush(self._max, (-nc, pos))

    def add(self, pos: int, now: int) -> None:
        self.ptr[pos] = 0
        self._advance(pos, now)

    def remove(self, pos: int) -> None:
        del self.nc[pos]
        del self.ptr[pos]

    def covering(self, now: int) -> list[int]:
        """Residents whose next covered request is exactly `now`."""
        found = []
        while self._min:
            nc, pos = self._min[0]
            if self.nc.get(pos) != nc:
                heapq.heappop(self._min)
                continue
            if nc != now:
                break
            heapq.heappop(self._min)
            found.append(pos)
        for pos in found:
            self._advance(pos, now)
        return found

    def farthest(self) -> int:
        """Resident with the maximum next cover; infinity wins, then oldest."""
        best_pos = -1
        best_nc = None
        while self._max:
            neg_nc, pos = self._max[0]
            if self.nc.get(pos) != -neg_nc:
                heapq.heappop(self._max)
                continue
            best_nc = -neg_nc
            break
        if best_nc is None:
            raise LookupError("no residents")
        # drain ties on nc to honor oldest-insertion tie-breaking
        ties = []
        while self._max and -self._max[0][0] == best_nc:
            neg_nc, pos = heapq.heappop(self._max)
            if self.nc.get(pos) == -neg_nc:
                ties.append(pos)
        best_pos = min(ties)
        for pos in ties:
            heapq.heappush(self._max, (-best_nc, pos))
        return best_pos

    def next_cover_of(self, pos: int) -> float:
        return self.nc[pos]


def _min_dist_to(mat: np.ndarray, query_idx: int, positions: list[int]) -> float:
    q = mat[query_idx]
    best = None
    for p in positions:
        diff = mat[p] - q
        d = float(np.sqrt(diff @ diff))
        if best is None or d < best:
            best = d
    return best


def fgrvb_replay(
    vectors,
    cover: list[np.ndarray],
    capacity: int,
    marginal: bool = True,
) -> tuple[list[bool], list]:
    """Greedy future-coverage oracle.

    On a full miss, each resident is scored by how many future requests it
    alone would cover (`marginal=True`, the default) or by its raw future
    cover count (`marginal=False`, the plain-volume variant). The lowest
    scoring resident is evicted only when the missed request's own score
    strictly exceeds it; ties keep the older resident. Returns the hit
    sequence and the per-hit distance to the nearest covering resident.
    """
    if capacity < 1:
        raise ConfigError(f"capacity must be at least 1, got {capacity}")
    mat = _as_matrix(vectors)
    n = len(mat)
    if len(cover) != n:
        raise ConfigError("cover table does not match the trace length")
    tracker = _NextCoverHeap(cover)
    residents: list[int] = []  # insertion order, positions
    hits: list[bool] = []
    hit_dists: list = []
    for i in range(n):
        covering = tracker.covering(i)
        if covering:
            hits.append(True)
            hit_dists.append(_min_dist_to(mat, i, covering))
            continue
        hits.append(False)
        hit_dists.append(None)
        if len(residents) < capacity:
            residents.append(i)
            tracker.add(i, i)
            continue
        futures = [cover[p][tracker.ptr[p] :] for p in residents]
        miss_future = cover[i]
        if marginal:
            if futures:
                cat = np.concatenate(futures)
            else:
                cat = np.empty(0, dtype=np.int64)
            counts = np.bincount(cat, minlength=n)
            scores = [
                int(np.count_nonzero(counts[fut] == 1)) for fut in futures
            ]
            miss_score = int(np.count_nonzero(counts[miss_future] == 0))
        else:
            scores = [len(fut) for fut in futures]
            miss_score = len(miss_future)
        victim_slot = min(range(len(residents)), key=lambda s: (scores[s], residents[s]))
        if miss_score > scores[victim_slot]:
            tracker.remove(residents.pop(victim_slot))
            residents.append(i)  # i exceeds every resident position; order kept
            tracker.add(i, i)
    return hits, hit_dists


def rgrvb_replay(
    vectors,
    cover: list[np.ndarray],
    capacity: int,
) -> tuple[list[bool], list]:
    """Next-covered-request greedy oracle.

    While the cache has room every miss is admitted. Once full, a missed
    request is admitted only if its next covered index is not already the
    next covered index of some resident; the evicted resident is the one
    whose next covered request lies farthest ahead (never-covered first).
    """
    if capacity < 1:
        raise ConfigError(f"capacity must be at least 1, got {capacity}")
    mat = _as_matrix(vectors)
    n = len(mat)
    if len(cover) != n:
        raise ConfigError("cover table does not match the trace length")
    tracker = _NextCoverHeap(cover)
    size = 0
    hits: list[bool] = []
    hit_dists: list = []
    for i in range(n):
        covering = tracker.covering(i)
        if covering:
            hits.append(True)
            hit_dists.append(_min_dist_to(mat, i, covering))
            continue
        hits.append(False)
        hit_dists.append(None)
        if size < capacity:
            tracker.add(i, i)
            size += 1
            continue
        arr = cover[i]
        miss_nc = float(arr[0]) if len(arr) else _NextCoverHeap.INF
        cache_cover = set(tracker.nc.values())
        if miss_nc in cache_cover:
            continue
        victim = tracker.farthest()
        tracker.remove(victim)
        tracker.add(i, i)
    return hits, hit_dists


def vopt_bruteforce(vectors, threshold: float, capacity: int, max_states: int = 100_000) -> int:
    """Exact maximum semantic hit count by dynamic programming.

    States are subsets (size <= capacity) of the distinct request vectors;
    at each step the cache may bypass the request or admit it, evicting any
    single resident if full. Only the vector just requested can enter the
    cache. Guarded by an explicit state budget since the subset space is
    combinatorial.
    """
    check_threshold(threshold)
    if capacity < 1:
        raise ConfigError(f"capacity must be at least 1, got {capacity}")
    mat = _as_matrix(vectors)
    n = len(mat)
    if n == 0:
        return 0
    seen: dict[bytes, int] = {}
    ids = []
    for row in mat:
        key = row.tobytes()
        if key not in seen:
            seen[key] = len(seen)
        ids.append(seen[key])
    v = len(seen)
    k = min(capacity, v)
    states = sum(comb(v, i) for i in range(k + 1))
    if states > max_states:
        raise ConfigError(
            f"{v} distinct vectors at capacity {capacity} need {states} cache "
            f"states, over the budget of {max_states}; this solver is for tiny instances"
        )
    distinct = np.empty((v, mat.shape[1]), dtype=np.float64)
    for key, idx in seen.items():
        distinct[idx] = np.frombuffer(key, dtype=np.float64)
    d2 = (
        np.einsum("ij,ij->i", distinct, distinct)[:, None]
        + np.einsum("ij,ij->i", distinct, distinct)[None, :]
        - 2.0 * (distinct @ distinct.T)
    )
    adj_mask = [0] * v
    t2 = threshold * threshold
    for a in range(v):
        mask = 0
        for b in range(v):
            if max(d2[a, b], 0.0) < t2:
                mask |= 1 << b
        adj_mask[a] = mask

    best: dict[int, int] = {0: 0}
    for x in ids:
        xbit = 1 << x
        cover_x = adj_mask[x]
        nxt: dict[int, int] = {}
        for state, hits in best.items():
            gained = hits + (1 if state & cover_x else 0)
            if nxt.get(state, -1) < gained:
                nxt[state] = gained
            if state & xbit:
                continue
            if state.bit_count() < k:
                grown = state | xbit
                if nxt.get(grown, -1) < gained:
                    nxt[grown] = gained
            else:
                rest = state
                while rest:
                    vbit = rest & -rest
                    rest ^= vbit
                    swapped = (state | xbit) ^ vbit
                    if nxt.get(swapped, -1) < gained:
                        nxt[swapped] = gained
        best = nxt
    return max(best.values())
