"""Semantic cache engine.

The engine owns the vector index and the entry table; the eviction policy
owns its metadata and is driven through a small event interface. A request
is served by a strict range query: any stored vector strictly within the
threshold makes it a hit, and a hit never inserts. The request counter is
the only clock; policies receive it through the event hooks.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from semcache.index import FlatIndex, Neighbor, VectorIndex
from semcache.traceio import NORM_TOL, TraceEntry
from semcache.vectors import check_finite, check_threshold


class ConfigError(ValueError):
    """Invalid run or policy configuration."""


class CacheStateError(RuntimeError):
    """The policy asked the engine to do something inconsistent."""


@dataclass(frozen=True)
class CacheConfig:
    dim: int
    capacity: int
    d_thresh: float
    require_unit: bool = True

    def __post_init__(self) -> None:
        if self.dim < 1:
            raise ConfigError(f"dim must be at least 1, got {self.dim}")
        if self.capacity < 1:
            raise ConfigError(f"capacity must be at least 1, got {self.capacity}")
        try:
            check_threshold(self.d_thresh)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None


@dataclass
class CacheEntry:
    id: int
    vector: np.ndarray          # float64 copy of the stored vector
    surprisal: float | None
    inserted_at: int            # request index at insertion, never updated


@dataclass
class RequestOutcome:
    index: int
    hit: bool
    top: Neighbor | None
    neighbors: list[Neighbor] = field(default_factory=list)


@dataclass(frozen=True)
class PolicyDecision:
    admit: bool
    victim: int | None = None

    def __post_init__(self) -> None:
        if self.victim is not None and not self.admit:
            raise CacheStateError("a decision naming a victim must also admit")


class Policy:
    """Event hooks for an online eviction policy; all are optional.

    `decide` is consulted only on a miss with a full cache. Naming a victim
    commits the engine to evict it before inserting the new entry; returning
    admit=False refuses the insertion and leaves the cache untouched.
    """

    name = "policy"
    requires_surprisal = False

    def bind(self, cache: "SemanticCache") -> None:
        self.cache = cache

    def on_request(self, index: int) -> None:
        pass

    def on_hit(self, outcome: RequestOutcome, query: np.ndarray) -> None:
        pass

    def on_miss(self, query: np.ndarray, index: int) -> None:
        pass

    def decide(self, query: np.ndarray, index: int) -> PolicyDecision:
        raise NotImplementedError

    def on_insert(self, entry: CacheEntry) -> None:
        pass

    def on_evict(self, entry: CacheEntry) -> None:
        pass


class SemanticCache:
    def __init__(self, config: CacheConfig, policy: Policy, index: VectorIndex | None = None):
        self.config = config
        self.policy = policy
        self.index = index if index is not None else FlatIndex(config.dim)
        self.entries: dict[int, CacheEntry] = {}
        self.request_count = 0
        policy.bind(self)

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def full(self) -> bool:
        return len(self.entries) >= self.config.capacity

    def _check_vector(self, vector: np.ndarray) -> np.ndarray:
        v = np.asarray(vector, dtype=np.float64)
        if v.ndim != 1 or v.shape[0] != self.config.dim:
            raise ValueError(
                f"expected a vector of dimension {self.config.dim}, got shape {v.shape}"
            )
        check_finite(v)
        if self.config.require_unit:
            norm = float(np.linalg.norm(v))
            if abs(norm - 1.0) > NORM_TOL:
                raise ValueError(
                    f"vector norm {norm:.6f} violates the unit-norm contract; "
                    "normalize at load time or disable require_unit"
                )
        return v

    def _insert(self, vector: np.ndarray, surprisal: float | None, index: int) -> None:
        if self.policy.requires_surprisal and surprisal is None:
            raise ConfigError(
                f"policy {self.policy.name!r} needs surprisal but the request has none"
            )
        entry_id = self.index.insert(vector)
        entry = CacheEntry(entry_id, vector, surprisal, inserted_at=index)
        self.entries[entry_id] = entry
        self.policy.on_insert(entry)

    def process_request(self, entry: TraceEntry) -> RequestOutcome:
        """Serve one request and apply the policy's bookkeeping."""
        index = self.request_count
        self.request_count += 1
        vector = self._check_vector(entry.vector)
        self.policy.on_request(index)
        neighbors = self.index.query_range(vector, self.config.d_thresh)
        if neighbors:
            outcome = RequestOutcome(index, True, neighbors[0], neighbors)
            self.policy.on_hit(outcome, vector)
            return outcome
        outcome = RequestOutcome(index, False, None, [])
        self.policy.on_miss(vector, index)
        if not self.full:
            self._insert(vector, entry.surprisal, index)
            return outcome
        decision = self.policy.decide(vector, index)
        if decision.admit:
            if decision.victim is None:
                raise CacheStateError("admitting into a full cache requires a victim")
            victim = self.entries.pop(decision.victim, None)
            if victim is None:
                raise CacheStateError(f"victim id {decision.victim} is not in the cache")
            self.index.remove(victim.id)
            self.policy.on_evict(victim)
            self._insert(vector, entry.surprisal, index)
        if len(self.entries) > self.config.capacity:
            raise CacheStateError("cache exceeded its capacity")
        return outcome

    def batch_process(self, entries: list[TraceEntry]) -> list[RequestOutcome]:
        """Process a batch; identical to folding the batch one by one."""
        return [self.process_request(e) for e in entries]
