"""Maximum-coverage instances rendered as cache traces.

A coverage instance (ground set, set family, budget k) is turned into
vectors in R^(n+m) so that a set vector sits within the hit threshold of
exactly its member elements, while every other pairing stays beyond it.
Replaying all set vectors and then all element vectors therefore makes the
best achievable number of second-phase hits equal the instance's optimal
k-set coverage, which is what makes offline-optimal eviction hard. The
builders here pick provably valid scale parameters, verify the geometry
exhaustively, and solve small instances both greedily and exactly.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from math import comb, sqrt

import numpy as np

from semcache.engine import ConfigError
from semcache.traceio import Trace
from semcache.vectors import check_threshold


@dataclass(frozen=True)
class MCPInstance:
    n_elements: int
    sets: tuple[tuple[int, ...], ...]
    k: int

    def __post_init__(self):
        if self.n_elements < 1:
            raise ConfigError(f"n_elements must be positive, got {self.n_elements}")
        if self.k < 1:
            raise ConfigError(f"k must be positive, got {self.k}")
        if not self.sets:
            raise ConfigError("instance needs at least one set")
        norm = []
        for s in self.sets:
            members = tuple(sorted(set(int(e) for e in s)))
            if not members:
                raise ConfigError("sets must be non-empty")
            if members[0] < 0 or members[-1] >= self.n_elements:
                raise ConfigError(f"set {s} references elements outside the ground set")
            norm.append(members)
        object.__setattr__(self, "sets", tuple(norm))

    @property
    def k_max(self) -> int:
        return max(len(s) for s in self.sets)


@dataclass(frozen=True)
class ReductionParams:
    alpha: float
    beta: float
    gamma: float
    d_thresh: float


@dataclass
class ReductionReport:
    """Exhaustive geometry check of a constructed instance."""

    conditions: dict[str, int] = field(default_factory=dict)  # name -> pairs checked
    margins: dict[str, float] = field(default_factory=dict)  # name -> worst margin
    ok: bool = True

    def _record(self, name: str, count: int, margin: float) -> None:
        self.conditions[name] = count
        self.margins[name] = margin
        if count and margin <= 0:
            self.ok = False


def choose_params(instance: MCPInstance, d_thresh: float) -> ReductionParams:
    """Midpoints of the open parameter intervals that make the geometry work.

    alpha^2 must exceed half the squared threshold (element separation) but
    stay below it times K/(K-1) (so a feasible gamma^2 remains); gamma^2
    must exceed half the squared threshold (set separation) but keep member
    distances strictly inside. Midpoints give the fattest numeric margins.
    """
    check_threshold(d_thresh)
    k_max = instance.k_max
    if k_max < 2:
        raise ConfigError(
            "every set is a singleton; the reduction needs a set of size 2 or more"
        )
    t2 = d_thresh * d_thresh
    alpha_lo, alpha_hi = t2 / 2.0, (t2 / 2.0) * k_max / (k_max - 1)
    alpha2 = (alpha_lo + alpha_hi) / 2.0
    gamma_lo, gamma_hi = t2 / 2.0, t2 - alpha2 * (k_max - 1) / k_max
    gamma2 = (gamma_lo + gamma_hi) / 2.0
    alpha = sqrt(alpha2)
    beta = alpha / k_max
    gamma = sqrt(gamma2)
    member_worst = alpha2 * (1 - 1 / k_max) + gamma2
    checks = (
        2 * alpha2 > t2,
        2 * gamma2 > t2,
        member_worst < t2,
    )
    if not all(checks):
        raise ConfigError(f"derived parameters violate the reduction inequalities: {checks}")
    return ReductionParams(alpha=alpha, beta=beta, gamma=gamma, d_thresh=d_thresh)


def build_vectors(instance: MCPInstance, params: ReductionParams) -> tuple[np.ndarray, np.ndarray]:
    """(set_vectors (m, n+m), element_vectors (n, n+m)) on an orthonormal basis.

    Element axes come first, one per ground-set element, then one identity
    axis per set. These vectors are intentionally not unit-norm.
    """
    n = instance.n_elements
    m = len(instance.sets)
    dim = n + m
    element_vectors = np.zeros((n, dim), dtype=np.float64)
    for i in range(n):
        element_vectors[i, i] = params.alpha
    set_vectors = np.zeros((m, dim), dtype=np.float64)
    for j, members in enumerate(instance.sets):
        for e in members:
            set_vectors[j, e] = params.beta
        set_vectors[j, n + j] = params.gamma
    return set_vectors, element_vectors


def validate_reduction(
    set_vectors: np.ndarray,
    element_vectors: np.ndarray,
    instance: MCPInstance,
    d_thresh: float,
) -> ReductionReport:
    """Check all four geometric conditions by measuring every pair.

    Margins are distances from the threshold, positive when the condition
    holds strictly: separations report d - t, memberships report t - d.
    """
    check_threshold(d_thresh)
    report = ReductionReport()

    def pairwise(a: np.ndarray, b: np.ndarray) -> np.ndarray:
        d2 = (
            np.einsum("ij,ij->i", a, a)[:, None]
            + np.einsum("ij,ij->i", b, b)[None, :]
            - 2.0 * (a @ b.T)
        )
        return np.sqrt(np.maximum(d2, 0.0))

    n, m = len(element_vectors), len(set_vectors)
    ee = pairwise(element_vectors, element_vectors)
    off = ~np.eye(n, dtype=bool)
    count = n * (n - 1) // 2
    margin = float((ee[off] - d_thresh).min()) if count else float("inf")
    report._record("element_separation", count, margin)

    ss = pairwise(set_vectors, set_vectors)
    off = ~np.eye(m, dtype=bool)
    count = m * (m - 1) // 2
    margin = float((ss[off] - d_thresh).min()) if count else float("inf")
    report._record("set_separation", count, margin)

    se = pairwise(set_vectors, element_vectors)
    member = np.zeros((m, n), dtype=bool)
    for j, members in enumerate(instance.sets):
        member[j, list(members)] = True
    mem_count = int(member.sum())
    mem_margin = float((d_thresh - se[member]).min()) if mem_count else float("inf")
    report._record("membership_coverage", mem_count, mem_margin)

    non_count = m * n - mem_count
    non_margin = float((se[~member] - d_thresh).min()) if non_count else float("inf")
    report._record("non_membership_separation", non_count, non_margin)
    return report


def build_trace(instance: MCPInstance, set_vectors: np.ndarray, element_vectors: np.ndarray) -> Trace:
    """All set vectors, then all element vectors, as an un-normalized trace."""
    vectors = np.concatenate((set_vectors, element_vectors)).astype(np.float32)
    meta = {
        "generator": "mcp",
        "n_elements": instance.n_elements,
        "sets": [list(s) for s in instance.sets],
        "k": instance.k,
    }
    return Trace(vectors=vectors, surprisals=None, normalized=False, meta=meta)


def greedy_max_coverage(instance: MCPInstance) -> tuple[list[int], int]:
    """k rounds of picking the set covering the most uncovered elements.

    Ties go to the lowest set index; stops early once every set is taken.
    Returns (chosen set indices in pick order, total covered).
    """
    covered: set[int] = set()
    chosen: list[int] = []
    remaining = set(range(len(instance.sets)))
    for _ in range(instance.k):
        if not remaining:
            break
        best = min(remaining, key=lambda j: (-len(set(instance.sets[j]) - covered), j))
        chosen.append(best)
        remaining.remove(best)
        covered |= set(instance.sets[best])
    return chosen, len(covered)


def max_coverage_bruteforce(instance: MCPInstance, max_subsets: int = 2_000_000) -> int:
    """Exact optimum by enumerating all k-subsets of the set family."""
    m = len(instance.sets)
    pick = min(instance.k, m)
    total = comb(m, pick)
    if total > max_subsets:
        raise ConfigError(
            f"C({m},{pick}) = {total} subsets exceeds the enumeration budget of {max_subsets}"
        )
    masks = []
    for members in instance.sets:
        mask = 0
        for e in members:
            mask |= 1 << e
        masks.append(mask)
    best = 0
    for combo in combinations(range(m), pick):
        union = 0
        for j in combo:
            union |= masks[j]
        best = max(best, union.bit_count())
    return best


def random_instance(n_elements: int, n_sets: int, k: int, seed: int) -> MCPInstance:
    """Seeded random instance; set sizes uniform in [1, n_elements]."""
    rng = np.random.default_rng(seed)
    sets = []
    for _ in range(n_sets):
        size = int(rng.integers(1, n_elements + 1))
        members = rng.choice(n_elements, size=size, replace=False)
        sets.append(tuple(int(e) for e in members))
    return MCPInstance(n_elements=n_elements, sets=tuple(sets), k=k)
