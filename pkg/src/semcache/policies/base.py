"""Shared helpers for eviction policies."""
from __future__ import annotations

import heapq
from typing import Callable, Hashable, Iterable


class LazyMinHeap:
    """Min-heap of (key, id) records with lazy invalidation.

    Push a fresh record whenever an id's key changes; `pop_valid` skims off
    records whose stored key no longer matches the caller's current view
    (or whose id is gone, signalled by a None key). Keys must be totally
    ordered; use tuples to encode tie-breaks.
    """

    def __init__(self) -> None:
        self._heap: list[tuple] = []

    def push(self, key, ident: Hashable) -> None:
        heapq.heappush(self._heap, (key, ident))

    def peek_valid(self, current_key: Callable[[Hashable], object]):
        while self._heap:
            key, ident = self._heap[0]
            current = current_key(ident)
            if current is None or current != key:
                heapq.heappop(self._heap)
                continue
            return key, ident
        raise LookupError("heap has no valid records")

    def pop_valid(self, current_key: Callable[[Hashable], object]) -> Hashable:
        key, ident = self.peek_valid(current_key)
        heapq.heappop(self._heap)
        return ident

    def rebuild(self, records: Iterable[tuple]) -> None:
        self._heap = [(key, ident) for key, ident in records]
        heapq.heapify(self._heap)
