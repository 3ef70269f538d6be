"""Workload generator statistics and the dataset report card."""
import numpy as np
import pytest

from semcache.engine import CacheConfig, ConfigError, SemanticCache
from semcache.policies import make_policy
from semcache.traceio import Trace, TraceEntry
from semcache.workload import (
    compute_stats,
    generate_zipf_workload,
    greedy_cluster_sizes,
    hopkins_statistic,
    point_density_curve,
)
from exact_sim import make_sim
from util import min_pairwise_distance, random_unit_rows


class TestZipfGenerator:
    def test_uniform_when_s_zero(self):
        trace = generate_zipf_workload(10, 100_000, 0.0, 0.05, 8, seed=3)
        counts = np.bincount(trace.meta["cluster_of"], minlength=10)
        expected = 100_000 / 10
        chi2 = float(((counts - expected) ** 2 / expected).sum())
        assert chi2 < 27.9  # df=9, far tail

    def test_rank_frequency_slope_near_minus_one(self):
        trace = generate_zipf_workload(50, 100_000, 1.0, 0.05, 8, seed=4)
        counts = np.bincount(trace.meta["cluster_of"], minlength=50)
        freq = np.sort(counts)[::-1].astype(np.float64)
        assert freq.min() > 0
        ranks = np.arange(1, 51, dtype=np.float64)
        slope = np.polyfit(np.log(ranks), np.log(freq), 1)[0]
        assert slope == pytest.approx(-1.0, abs=0.1)

    def test_zero_radius_collapses_clusters_to_points(self):
        trace = generate_zipf_workload(6, 400, 1.0, 0.0, 16, seed=5, surprisal=False)
        assign = np.asarray(trace.meta["cluster_of"])
        for c in range(6):
            rows = trace.vectors[assign == c]
            assert len(np.unique(rows, axis=0)) == 1

    def test_zero_radius_matches_exact_replay_on_cluster_ids(self):
        trace = generate_zipf_workload(6, 400, 1.0, 0.0, 16, seed=5, surprisal=False)
        assign = trace.meta["cluster_of"]
        centers = np.unique(trace.vectors, axis=0)
        t = min_pairwise_distance(centers.astype(np.float64)) / 2.0
        cache = SemanticCache(CacheConfig(16, 3, t), make_policy("lru"))
        sim = make_sim("lru", 3, seed=None)
        for i, vec in enumerate(trace.vectors):
            out = cache.process_request(TraceEntry(i, vec, None))
            assert out.hit == sim.process(assign[i])

    def test_doubling_requests_doubles_cluster_counts(self):
        half = generate_zipf_workload(10, 40_000, 1.0, 0.05, 4, seed=6, surprisal=False)
        full = generate_zipf_workload(10, 80_000, 1.0, 0.05, 4, seed=6, surprisal=False)
        c_half = np.bincount(half.meta["cluster_of"], minlength=10)
        c_full = np.bincount(full.meta["cluster_of"], minlength=10)
        assert c_half.min() > 100  # every cluster comfortably populated
        ratio = c_full / c_half
        assert np.all(ratio > 1.8) and np.all(ratio < 2.2)

    def test_rows_unit_norm_and_surprisal_nonnegative(self):
        trace = generate_zipf_workload(12, 2_000, 1.0, 0.2, 24, seed=7)
        norms = np.linalg.norm(trace.vectors.astype(np.float64), axis=1)
        assert np.all(np.abs(norms - 1.0) <= 1e-4)
        assert trace.normalized
        assert trace.vectors.dtype == np.float32
        assert trace.surprisals is not None
        assert np.all(trace.surprisals >= 0)

    def test_deterministic_under_seed(self):
        a = generate_zipf_workload(8, 500, 1.0, 0.1, 8, seed=8)
        b = generate_zipf_workload(8, 500, 1.0, 0.1, 8, seed=8)
        assert np.array_equal(a.vectors, b.vectors)
        assert np.array_equal(a.surprisals, b.surprisals)
        assert a.meta["cluster_of"] == b.meta["cluster_of"]
        c = generate_zipf_workload(8, 500, 1.0, 0.1, 8, seed=9)
        assert not np.array_equal(a.vectors, c.vectors)

    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(num_clusters=0, requests=10, zipf_s=1.0, intra_radius=0.1, dim=4, seed=0),
            dict(num_clusters=3, requests=0, zipf_s=1.0, intra_radius=0.1, dim=4, seed=0),
            dict(num_clusters=3, requests=10, zipf_s=-0.5, intra_radius=0.1, dim=4, seed=0),
            dict(num_clusters=3, requests=10, zipf_s=1.0, intra_radius=1.0, dim=4, seed=0),
            dict(num_clusters=3, requests=10, zipf_s=1.0, intra_radius=0.1, dim=0, seed=0),
        ],
    )
    def test_argument_guards(self, kwargs):
        with pytest.raises(ConfigError):
            generate_zipf_workload(**kwargs)

    def test_impossible_center_packing_refused(self):
        # 200 separations of 0.9 cannot fit on a 2D unit circle
        with pytest.raises(ConfigError):
            generate_zipf_workload(200, 10, 1.0, 0.45, 2, seed=0)


class TestGreedyClusterSizes:
    def test_first_representative_wins(self):
        a = np.zeros(4)
        a[0] = 1.0
        near = np.zeros(4)
        near[0], near[1] = np.cos(0.3), np.sin(0.3)
        far = np.zeros(4)
        far[2] = 1.0
        sizes = greedy_cluster_sizes(np.stack([a, near, far]), 0.6)
        assert sizes.tolist() == [2, 1]

    def test_sizes_partition_the_input(self):
        mat = random_unit_rows(300, 6, 20).astype(np.float64)
        sizes = greedy_cluster_sizes(mat, 0.9)
        assert sizes.sum() == 300
        assert np.all(sizes >= 1)


class TestComputeStats:
    def test_identical_points(self):
        v = random_unit_rows(1, 8, 21)[0]
        stats = compute_stats(np.tile(v, (20, 1)), threshold=0.5)
        assert stats.cluster_avg == 20
        assert stats.cluster_std == 0
        assert stats.num_clusters == 1
        assert stats.l2_mean == pytest.approx(0.0, abs=1e-9)
        assert stats.cos_sim_avg == pytest.approx(1.0, abs=1e-9)
        assert stats.pca_entropy == 0.0
        assert 0.0 <= stats.hopkins <= 1.0

    def test_isotropic_spectrum_saturates_entropy(self):
        dim = 8
        rows = np.concatenate([np.eye(dim), -np.eye(dim)])
        stats = compute_stats(rows, threshold=0.5)
        assert stats.pca_entropy == pytest.approx(np.log2(dim), abs=1e-9)

    def test_uniform_sphere_hopkins_near_half(self):
        mat = random_unit_rows(2_000, 16, 22).astype(np.float64)
        score, mode = hopkins_statistic(mat, seed=0)
        assert mode == "sphere"
        assert score == pytest.approx(0.5, abs=0.1)

    def test_clustered_data_hopkins_above_uniform(self):
        trace = generate_zipf_workload(20, 2_000, 1.0, 0.15, 16, seed=23)
        score, _ = hopkins_statistic(trace.vectors.astype(np.float64), seed=0)
        uniform_score, _ = hopkins_statistic(
            random_unit_rows(2_000, 16, 24).astype(np.float64), seed=0
        )
        assert score > uniform_score

    def test_cluster_average_times_count_is_n(self):
        mat = random_unit_rows(407, 8, 25)
        stats = compute_stats(mat, threshold=0.9)
        assert stats.cluster_avg * stats.num_clusters == pytest.approx(407, abs=1e-9)

    def test_deterministic(self):
        mat = random_unit_rows(300, 8, 26)
        a = compute_stats(mat, threshold=0.9, seed=5)
        b = compute_stats(mat, threshold=0.9, seed=5)
        assert a.as_dict() == b.as_dict()

    def test_accepts_trace(self):
        trace = generate_zipf_workload(5, 120, 1.0, 0.1, 8, seed=27)
        stats = compute_stats(trace, threshold=0.9)
        assert stats.count == 120
        assert stats.dim == 8
        assert 0.0 <= stats.hopkins <= 1.0
        assert stats.pca_entropy <= np.log2(8) + 1e-9
        assert stats.cos_sim_std >= 0 and stats.l2_std >= 0

    def test_needs_two_entries(self):
        with pytest.raises(ConfigError):
            compute_stats(random_unit_rows(1, 8, 28), threshold=0.5)


class TestPointDensityCurve:
    def test_below_min_pairwise_all_zero(self):
        pool = random_unit_rows(15, 16, 29)
        t = min_pairwise_distance(pool) / 2.0
        counts = point_density_curve(pool, [t])
        assert np.all(counts[t] == 0)

    def test_above_diameter_all_full(self):
        pool = random_unit_rows(15, 8, 30)
        counts = point_density_curve(pool, [2.0 + 1e-6])
        assert np.all(counts[2.0 + 1e-6] == 14)

    def test_matches_naive_count(self):
        pool = random_unit_rows(200, 4, 31).astype(np.float64)
        thresholds = [0.5, 0.9, 1.3]
        counts = point_density_curve(pool, thresholds)
        for t in thresholds:
            naive = np.array(
                [
                    sum(
                        1
                        for j in range(200)
                        if j != i and np.linalg.norm(pool[i] - pool[j]) < t
                    )
                    for i in range(200)
                ]
            )
            assert np.array_equal(counts[t], naive)

    def test_rejects_nonpositive_threshold(self):
        pool = random_unit_rows(5, 4, 32)
        with pytest.raises(ConfigError):
            point_density_curve(pool, [0.0])

    def test_accepts_trace(self):
        trace = generate_zipf_workload(4, 50, 1.0, 0.1, 8, seed=33)
        counts = point_density_curve(trace, [0.9])
        assert counts[0.9].shape == (50,)
