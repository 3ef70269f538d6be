"""Semantic vector cache: engine, eviction policies, clairvoyant oracles,
workload tooling, and a trace-replay benchmark harness."""

__version__ = "0.1.0"

from semcache.vectors import l2_distance, l2_to_cosine, normalize

__all__ = ["l2_distance", "l2_to_cosine", "normalize", "__version__"]
