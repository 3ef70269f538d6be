"""Synthetic workloads and dataset characterization.

The generator plants cluster centers on the unit sphere, draws requests
from a Zipf popularity law over the clusters, and perturbs each request
inside a ball around its center before re-normalizing. The stats suite
mirrors the usual embedding-space report card: pairwise cosine/L2 moments,
PCA spectrum entropy, greedy cluster sizes at a threshold, the Hopkins
statistic, and per-threshold neighbor-count curves.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from semcache.engine import ConfigError
from semcache.traceio import Trace
from semcache.vectors import check_threshold

_CHUNK = 16384
_CENTER_RETRIES = 32


def _unit_rows(mat: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(mat, axis=1, keepdims=True)
    bad = norms[:, 0] < 1e-12
    if bad.any():
        mat = mat.copy()
        mat[bad, 0] = 1.0
        norms = np.linalg.norm(mat, axis=1, keepdims=True)
    return mat / norms


def _pairwise_min_dist2(mat: np.ndarray) -> float:
    gram = mat @ mat.T
    norms2 = np.diag(gram).copy()
    d2 = norms2[:, None] + norms2[None, :] - 2.0 * gram
    np.fill_diagonal(d2, np.inf)
    return float(d2.min())


def generate_zipf_workload(
    num_clusters: int,
    requests: int,
    zipf_s: float,
    intra_radius: float,
    dim: int,
    seed: int,
    surprisal: bool = True,
) -> Trace:
    """Seeded Zipf-over-clusters trace of unit vectors.

    Cluster popularity is proportional to 1/rank^s. Centers are random unit
    vectors re-drawn (bounded retries, fresh sub-seed each time) until every
    pair is farther apart than twice the intra-cluster radius, so clusters
    cannot be born overlapping. Each request displaces its center by a
    uniform draw from the radius ball and is re-normalized. Surprisal, when
    requested, is the cluster's negative log popularity plus seeded noise,
    so rare clusters read as linguistically rare.
    """
    if num_clusters < 1 or requests < 1 or dim < 1:
        raise ConfigError("num_clusters, requests, and dim must all be positive")
    if zipf_s < 0:
        raise ConfigError(f"zipf_s must be non-negative, got {zipf_s}")
    if not (0 <= intra_radius < 1):
        raise ConfigError(f"intra_radius must lie in [0, 1), got {intra_radius}")

    centers = None
    min_sep2 = (2.0 * intra_radius) ** 2
    for attempt in range(_CENTER_RETRIES):
        rng = np.random.default_rng([seed, 1, attempt])
        cand = _unit_rows(rng.normal(size=(num_clusters, dim)))
        if num_clusters == 1 or _pairwise_min_dist2(cand) > min_sep2:
            centers = cand
            break
    if centers is None:
        raise ConfigError(
            f"could not place {num_clusters} centers pairwise farther than "
            f"2*{intra_radius} in dimension {dim} after {_CENTER_RETRIES} attempts; "
            "lower intra_radius or raise dim"
        )

    ranks = np.arange(1, num_clusters + 1, dtype=np.float64)
    weights = ranks ** (-zipf_s)
    weights /= weights.sum()
    rng_assign = np.random.default_rng([seed, 2])
    assign = rng_assign.choice(num_clusters, size=requests, p=weights)

    vectors = np.empty((requests, dim), dtype=np.float32)
    for chunk_idx, start in enumerate(range(0, requests, _CHUNK)):
        stop = min(start + _CHUNK, requests)
        count = stop - start
        rng_p = np.random.default_rng([seed, 3, chunk_idx])
        direction = _unit_rows(rng_p.normal(size=(count, dim)))
        # uniform in the ball: radius scales with U^(1/dim)
        radius = intra_radius * rng_p.random(count) ** (1.0 / dim)
        chunk = centers[assign[start:stop]] + direction * radius[:, None]
        vectors[start:stop] = _unit_rows(chunk).astype(np.float32)

    surprisals = None
    if surprisal:
        rng_s = np.random.default_rng([seed, 4])
        base = -np.log(weights)
        noise = np.abs(rng_s.normal(scale=0.5, size=requests))
        surprisals = (base[assign] + noise).astype(np.float32)

    meta = {
        "generator": "zipf",
        "num_clusters": num_clusters,
        "requests": requests,
        "zipf_s": zipf_s,
        "intra_radius": intra_radius,
        "dim": dim,
        "seed": seed,
        "cluster_of": [int(c) for c in assign],
    }
    return Trace(vectors=vectors, surprisals=surprisals, normalized=True, meta=meta)


@dataclass
class DatasetStats:
    count: int
    dim: int
    cos_sim_avg: float
    cos_sim_std: float
    l2_mean: float
    l2_std: float
    pca_entropy: float
    cluster_avg: float
    cluster_std: float
    num_clusters: int
    hopkins: float
    meta: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        out = {k: v for k, v in self.__dict__.items() if k != "meta"}
        out["meta"] = self.meta
        return out


EXACT_PAIRS_BELOW = 5000
DEFAULT_SAMPLE_PAIRS = 200_000


def _pair_moments(mat: np.ndarray, sample_pairs: int, seed: int) -> tuple[float, float, float, float]:
    n = len(mat)
    norms = np.linalg.norm(mat, axis=1)
    if n < EXACT_PAIRS_BELOW:
        gram = mat @ mat.T
        iu = np.triu_indices(n, k=1)
        dots = gram[iu]
        cos = dots / (norms[iu[0]] * norms[iu[1]])
        d2 = norms[iu[0]] ** 2 + norms[iu[1]] ** 2 - 2.0 * dots
        dist = np.sqrt(np.maximum(d2, 0.0))
    else:
        rng = np.random.default_rng(seed)
        i = rng.integers(0, n, size=sample_pairs)
        j = rng.integers(0, n - 1, size=sample_pairs)
        j = np.where(j >= i, j + 1, j)  # never pair a point with itself
        dots = np.einsum("ij,ij->i", mat[i], mat[j])
        cos = dots / (norms[i] * norms[j])
        d2 = norms[i] ** 2 + norms[j] ** 2 - 2.0 * dots
        dist = np.sqrt(np.maximum(d2, 0.0))
    return float(cos.mean()), float(cos.std()), float(dist.mean()), float(dist.std())


def _pca_entropy(mat: np.ndarray) -> float:
    centered = mat - mat.mean(axis=0, keepdims=True)
    n, dim = centered.shape
    # eigenvalues of the covariance via whichever gram matrix is smaller
    if dim <= n:
        cov = (centered.T @ centered) / max(n - 1, 1)
    else:
        cov = (centered @ centered.T) / max(n - 1, 1)
    evals = np.linalg.eigvalsh(cov)
    evals = evals[evals > 1e-12]
    total = evals.sum()
    if total <= 1e-12:
        return 0.0
    ratios = evals / total
    return float(-(ratios * np.log2(ratios)).sum())


def greedy_cluster_sizes(mat: np.ndarray, threshold: float) -> np.ndarray:
    """Sizes under first-member-representative online clustering."""
    check_threshold(threshold)
    reps = np.empty_like(mat)
    rep_count = 0
    sizes: list[int] = []
    t2 = threshold * threshold
    for row in mat:
        if rep_count:
            diff = reps[:rep_count] - row
            d2 = np.einsum("ij,ij->i", diff, diff)
            best = int(np.argmin(d2))
            if d2[best] < t2:
                sizes[best] += 1
                continue
        reps[rep_count] = row
        rep_count += 1
        sizes.append(1)
    return np.array(sizes, dtype=np.int64)


def hopkins_statistic(mat: np.ndarray, seed: int) -> tuple[float, str]:
    """Clustering-tendency score in [0, 1]; 0.5 means spatially uniform.

    Reference points are drawn uniformly in the data bounding box; when the
    data itself is unit-norm they are pushed onto the sphere, since box
    points sit far off the sphere in high dimension and would saturate the
    score at 1 regardless of structure. Returns (score, reference mode).
    """
    n = len(mat)
    m = max(1, min(n // 10, 500))
    rng = np.random.default_rng(seed)
    sample_idx = rng.choice(n, size=m, replace=False)

    norms = np.linalg.norm(mat, axis=1)
    on_sphere = bool(np.all(np.abs(norms - 1.0) <= 1e-4))
    lo, hi = mat.min(axis=0), mat.max(axis=0)
    ref = rng.random((m, mat.shape[1])) * (hi - lo) + lo
    mode = "bbox"
    if on_sphere:
        ref = _unit_rows(ref)
        mode = "sphere"

    norms2 = np.einsum("ij,ij->i", mat, mat)

    def nearest(points: np.ndarray, exclude_idx=None) -> np.ndarray:
        d2 = (
            np.einsum("ij,ij->i", points, points)[:, None]
            + norms2[None, :]
            - 2.0 * (points @ mat.T)
        )
        if exclude_idx is not None:
            d2[np.arange(len(points)), exclude_idx] = np.inf
        return np.sqrt(np.maximum(d2.min(axis=1), 0.0))

    w = nearest(mat[sample_idx], exclude_idx=sample_idx)
    u = nearest(ref)
    denom = u.sum() + w.sum()
    if denom <= 0:
        return 0.5, mode  # all points identical; no spatial signal either way
    return float(u.sum() / denom), mode


def compute_stats(
    entries,
    threshold: float,
    sample_pairs: int = DEFAULT_SAMPLE_PAIRS,
    seed: int = 0,
) -> DatasetStats:
    """The dataset report card at a given clustering threshold."""
    check_threshold(threshold)
    if isinstance(entries, Trace):
        mat = np.asarray(entries.vectors, dtype=np.float64)
    else:
        mat = np.asarray(entries, dtype=np.float64)
        if mat.ndim != 2:
            raise ConfigError(f"expected a (count, dim) array, got shape {mat.shape}")
    if len(mat) < 2:
        raise ConfigError("stats need at least two entries")

    cos_avg, cos_std, l2_mean, l2_std = _pair_moments(mat, sample_pairs, seed)
    sizes = greedy_cluster_sizes(mat, threshold)
    hopkins, mode = hopkins_statistic(mat, seed)
    exact = len(mat) < EXACT_PAIRS_BELOW
    return DatasetStats(
        count=len(mat),
        dim=mat.shape[1],
        cos_sim_avg=cos_avg,
        cos_sim_std=cos_std,
        l2_mean=l2_mean,
        l2_std=l2_std,
        pca_entropy=_pca_entropy(mat),
        cluster_avg=float(sizes.mean()),
        cluster_std=float(sizes.std()),
        num_clusters=len(sizes),
        hopkins=hopkins,
        meta={
            "threshold": threshold,
            "pairs": "exact" if exact else f"sampled:{sample_pairs}",
            "pair_seed": seed,
            "hopkins_reference": mode,
            "hopkins_sample": max(1, min(len(mat) // 10, 500)),
        },
    )


def point_density_curve(entries, thresholds) -> dict[float, np.ndarray]:
    """Per-threshold neighbor counts |{j != i : d(r_i, r_j) < D}| for each i."""
    if isinstance(entries, Trace):
        mat = np.asarray(entries.vectors, dtype=np.float64)
    else:
        mat = np.asarray(entries, dtype=np.float64)
    ts = [float(t) for t in thresholds]
    for t in ts:
        if t <= 0:
            raise ConfigError(f"thresholds must be positive, got {t}")
    n = len(mat)
    norms2 = np.einsum("ij,ij->i", mat, mat)
    counts = {t: np.zeros(n, dtype=np.int64) for t in ts}
    block = 512
    for start in range(0, n, block):
        stop = min(start + block, n)
        d2 = norms2[start:stop, None] + norms2[None, :] - 2.0 * (mat[start:stop] @ mat.T)
        np.maximum(d2, 0.0, out=d2)
        for t in ts:
            within = d2 < t * t
            # self-distance is zero, always inside; drop it from the count
            counts[t][start:stop] = within.sum(axis=1) - 1
    return counts
