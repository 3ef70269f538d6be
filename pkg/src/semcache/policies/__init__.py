"""Eviction policy registry.

Policies are constructed by name through `make_policy`, which owns
parameter parsing and seeds the stochastic policies' private generators.
"""
from __future__ import annotations

import numpy as np

from semcache.engine import ConfigError, Policy
from semcache.policies.classic import (
    ArcPolicy,
    FifoPolicy,
    LfuDaPolicy,
    LfuPolicy,
    LruKPolicy,
    LruPolicy,
    RandomPolicy,
    RapPolicy,
)
from semcache.policies.semantic import (
    ClusterLfuPolicy,
    ClusterLruPolicy,
    DistanceLfuPolicy,
    MissLfuPolicy,
    SphereLfuPolicy,
    SurprisalLfuPolicy,
    SurprisalPolicy,
)

__all__ = [
    "POLICY_NAMES",
    "make_policy",
    "ArcPolicy",
    "ClusterLfuPolicy",
    "ClusterLruPolicy",
    "DistanceLfuPolicy",
    "FifoPolicy",
    "LfuDaPolicy",
    "LfuPolicy",
    "LruKPolicy",
    "LruPolicy",
    "MissLfuPolicy",
    "RandomPolicy",
    "RapPolicy",
    "SphereLfuPolicy",
    "SurprisalLfuPolicy",
    "SurprisalPolicy",
]

# name -> (factory, needs_rng, accepted keyword params)
_REGISTRY = {
    "fifo": (FifoPolicy, False, ()),
    "random": (RandomPolicy, True, ()),
    "lru": (LruPolicy, False, ()),
    "lfu": (LfuPolicy, False, ()),
    "lfuda": (LfuDaPolicy, False, ()),
    "lru-k": (LruKPolicy, False, ("k",)),
    "arc": (ArcPolicy, False, ()),
    "rap": (RapPolicy, True, ()),
    "sphere-lfu": (
        SphereLfuPolicy,
        False,
        ("kappa", "alpha", "gamma", "top_k", "halve_every"),
    ),
    "miss-lfu": (MissLfuPolicy, False, ()),
    "cluster-lfu": (ClusterLfuPolicy, True, ()),
    "cluster-lru": (ClusterLruPolicy, True, ()),
    "distance-lfu": (DistanceLfuPolicy, False, ()),
    "surprisal": (SurprisalPolicy, False, ()),
    "surprisal-lfu": (SurprisalLfuPolicy, False, ()),
}

POLICY_NAMES = tuple(_REGISTRY)

_INT_PARAMS = {"k", "top_k", "halve_every"}


def _coerce(name: str, value):
    """Parse a parameter that may arrive as a CLI string."""
    if isinstance(value, str):
        if value.lower() == "none":
            return None
        try:
            value = float(value)
        except ValueError:
            raise ConfigError(f"policy parameter {name}={value!r} is not numeric") from None
    if name in _INT_PARAMS and value is not None:
        if float(value) != int(value):
            raise ConfigError(f"policy parameter {name} must be an integer, got {value}")
        return int(value)
    return value


def make_policy(name: str, seed: int | None = None, **params) -> Policy:
    """Construct a policy by registry name.

    `seed` feeds the policy-private RNG of the stochastic policies and is
    ignored by deterministic ones. Unknown names or parameters raise
    ConfigError so a typo fails loudly instead of silently running defaults.
    """
    try:
        factory, needs_rng, accepted = _REGISTRY[name]
    except KeyError:
        known = ", ".join(sorted(_REGISTRY))
        raise ConfigError(f"unknown policy {name!r} (known: {known})") from None
    for key in params:
        if key not in accepted:
            raise ConfigError(f"policy {name!r} does not accept parameter {key!r}")
    kwargs = {key: _coerce(key, value) for key, value in params.items()}
    if needs_rng:
        kwargs["rng"] = np.random.default_rng(seed)
    return factory(**kwargs)
