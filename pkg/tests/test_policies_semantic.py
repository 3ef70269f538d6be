import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from semcache.engine import CacheConfig, ConfigError, SemanticCache
from semcache.index import Neighbor
from semcache.policies import POLICY_NAMES, make_policy
from semcache.traceio import TraceEntry
from util import (
    degenerate_twin_run,
    min_pairwise_distance,
    pool_key_lookup,
    random_unit_rows,
    replay_engine,
    zipfish_keys,
)

SEMANTIC = [
    "sphere-lfu", "miss-lfu", "cluster-lfu", "cluster-lru",
    "distance-lfu", "surprisal", "surprisal-lfu",
]


def chord_pair(d, dim=8):
    """Two unit vectors at exact L2 distance d."""
    theta = 2.0 * np.arcsin(d / 2.0)
    v = np.zeros(dim)
    w = np.zeros(dim)
    v[0] = 1.0
    w[0], w[1] = np.cos(theta), np.sin(theta)
    return v, w


def bound_sphere(capacity=4, t=0.9, dim=8, **params):
    policy = make_policy("sphere-lfu", **params)
    cache = SemanticCache(CacheConfig(dim, capacity, t), policy)
    return policy, cache


class TestSphereResponsibilities:
    def test_single_neighbor_gets_all_mass(self):
        policy, cache = bound_sphere()
        cache.process_request(TraceEntry(0, random_unit_rows(1, 8, 0)[0], None))
        (eid,) = cache.entries
        shares = policy.responsibilities([Neighbor(eid, 0.3)])
        assert shares[0] == pytest.approx(1.0, abs=1e-12)

    def test_symmetric_pair_splits_evenly(self):
        policy, cache = bound_sphere()
        v, w = chord_pair(1.2)
        cache.process_request(TraceEntry(0, v, None))
        cache.process_request(TraceEntry(1, w, None))
        ids = list(cache.entries)
        shares = policy.responsibilities([Neighbor(ids[0], 0.4), Neighbor(ids[1], 0.4)])
        assert shares == pytest.approx([0.5, 0.5], abs=1e-12)

    def test_closed_form_value(self):
        # kappa=4, counts 0/0, distances 0 and 0.5:
        # r_near = 1 / (1 + exp(-4 * 0.25 / 2))
        policy, cache = bound_sphere(kappa=4.0, alpha=1.0)
        v, w = chord_pair(1.2)
        cache.process_request(TraceEntry(0, v, None))
        cache.process_request(TraceEntry(1, w, None))
        ids = list(cache.entries)
        shares = policy.responsibilities([Neighbor(ids[0], 0.0), Neighbor(ids[1], 0.5)])
        expected = 1.0 / (1.0 + np.exp(-0.5))
        assert shares[0] == pytest.approx(expected, abs=1e-12)
        assert shares[1] == pytest.approx(1.0 - expected, abs=1e-12)

    @given(
        st.integers(1, 12),
        st.floats(0.1, 100.0),
        st.floats(1e-3, 10.0),
        st.integers(0, 10_000),
    )
    @settings(max_examples=100, deadline=None)
    def test_shares_form_a_distribution(self, size, kappa, alpha, seed):
        policy, cache = bound_sphere(capacity=16, kappa=kappa, alpha=alpha)
        rng = np.random.default_rng(seed)
        pool = random_unit_rows(size, 8, seed)
        for i in range(size):
            cache.process_request(TraceEntry(i, pool[i], None))
        ids = list(cache.entries)
        # synthetic neighborhood: sorted distances within the threshold
        dists = np.sort(rng.uniform(0.0, 0.9, size=size))
        for eid, c in zip(ids, rng.uniform(0, 50, size=size)):
            policy.counts[eid] = float(c)
        shares = policy.responsibilities(
            [Neighbor(eid, float(d)) for eid, d in zip(ids, dists)]
        )
        assert abs(shares.sum() - 1.0) <= 1e-9
        assert np.all(shares > 0.0)
        assert np.all(shares <= 1.0 + 1e-12)

    def test_extreme_kappa_does_not_underflow(self):
        policy, cache = bound_sphere(kappa=1e6)
        v, w = chord_pair(1.2)
        cache.process_request(TraceEntry(0, v, None))
        cache.process_request(TraceEntry(1, w, None))
        ids = list(cache.entries)
        shares = policy.responsibilities([Neighbor(ids[0], 0.2), Neighbor(ids[1], 0.8)])
        assert shares[0] == pytest.approx(1.0, abs=1e-9)
        assert np.isfinite(shares).all()


class TestSphereUpdates:
    def test_unit_hit_on_fresh_entry(self):
        policy, cache = bound_sphere(halve_every=None)
        v = random_unit_rows(1, 8, 1)[0]
        cache.process_request(TraceEntry(0, v, None))
        cache.process_request(TraceEntry(1, v, None))
        (count,) = policy.counts.values()
        assert count == pytest.approx(1.0, abs=1e-12)

    def test_decay_arithmetic(self):
        policy, cache = bound_sphere(gamma=0.5, halve_every=None)
        v = random_unit_rows(1, 8, 2)[0]
        cache.process_request(TraceEntry(0, v, None))
        (eid,) = cache.entries
        policy.counts[eid] = 4.0
        cache.process_request(TraceEntry(1, v, None))
        assert policy.counts[eid] == pytest.approx(3.0, abs=1e-12)  # 0.5*4 + 1

    def test_conservation_under_gamma_one(self):
        policy, cache = bound_sphere(capacity=32, halve_every=None)
        pool = random_unit_rows(200, 8, 3)
        picks = zipfish_keys(200, 400, 4)
        hits = 0
        for i, k in enumerate(picks):
            out = cache.process_request(TraceEntry(i, pool[k], None))
            hits += out.hit
        assert sum(policy.counts.values()) == pytest.approx(hits, abs=1e-6)

    def test_top_k_restricts_mass(self):
        policy, cache = bound_sphere(capacity=8, top_k=1, halve_every=None)
        v, w = chord_pair(0.5)
        cache.process_request(TraceEntry(0, v, None))
        cache.process_request(TraceEntry(1, w, None))
        assert len(cache) == 1  # w hit v, so only v is resident
        out = cache.process_request(TraceEntry(2, v, None))
        assert out.hit
        (count,) = policy.counts.values()
        assert count == pytest.approx(2.0, abs=1e-9)

    def test_periodic_halving(self):
        policy, cache = bound_sphere(capacity=4, halve_every=4)
        v = random_unit_rows(1, 8, 5)[0]
        cache.process_request(TraceEntry(0, v, None))
        (eid,) = cache.entries
        for i in range(1, 4):
            cache.process_request(TraceEntry(i, v, None))
        assert policy.counts[eid] == pytest.approx(3.0)
        cache.process_request(TraceEntry(4, v, None))  # halving fires first
        assert policy.counts[eid] == pytest.approx(1.5 + 1.0)

    def test_nearest_winner_matches_lfu(self):
        # with a hard kernel and top-1 updates, sphere scoring is exactly
        # integer LFU whenever each hit has a unique nearest neighbor
        pool = random_unit_rows(40, 8, 6)
        keys = zipfish_keys(40, 600, 7)
        sphere = replay_engine(
            "sphere-lfu",
            pool[keys],
            6,
            0.9,
            params={"kappa": 1e6, "top_k": 1, "halve_every": None},
        )
        lfu = replay_engine("lfu", pool[keys], 6, 0.9)
        assert sphere[0] == lfu[0]
        assert sphere[1] == lfu[1]

    def test_param_validation(self):
        for bad in (
            {"kappa": -1.0},
            {"alpha": 0.0},
            {"gamma": 0.0},
            {"gamma": 1.5},
            {"top_k": 0},
        ):
            with pytest.raises(ConfigError):
                make_policy("sphere-lfu", **bad)


class TestMissLfu:
    def test_identical_to_lfu_on_any_stream(self):
        pool = random_unit_rows(50, 8, 8)
        keys = zipfish_keys(50, 800, 9)
        a = replay_engine("miss-lfu", pool[keys], 7, 0.9)
        b = replay_engine("lfu", pool[keys], 7, 0.9)
        assert a[0] == b[0]
        assert a[1] == b[1]


class TestClusterPolicies:
    def test_first_insert_founds_cluster(self):
        policy = make_policy("cluster-lfu", seed=0)
        cache = SemanticCache(CacheConfig(8, 4, 0.9), policy)
        cache.process_request(TraceEntry(0, random_unit_rows(1, 8, 10)[0], None))
        assert len(policy.clusters) == 1

    def test_joins_cluster_within_threshold(self):
        # a request near a RESIDENT representative hits and never inserts,
        # so joining is only observable once the representative is evicted
        policy = make_policy("cluster-lfu", seed=0)
        cache = SemanticCache(CacheConfig(8, 1, 0.6), policy)
        rep = np.zeros(8)
        rep[0] = 1.0
        far = np.zeros(8)
        far[2] = 1.0
        joiner = np.zeros(8)
        joiner[0], joiner[1] = np.cos(0.58), np.sin(0.58)  # 0.57 from rep

        cache.process_request(TraceEntry(0, rep, None))
        (rep_cid,) = policy.clusters.keys()
        cache.process_request(TraceEntry(1, far, None))  # evicts rep
        out = cache.process_request(TraceEntry(2, joiner, None))
        assert not out.hit
        (joiner_id,) = (eid for eid in cache.entries)
        assert policy.cluster_of[joiner_id] == rep_cid
        assert len(policy.clusters) == 2

    def test_membership_partitions_cache(self):
        pool = random_unit_rows(60, 8, 12)
        keys = zipfish_keys(60, 300, 13)
        policy = make_policy("cluster-lfu", seed=1)
        cache = SemanticCache(CacheConfig(8, 6, 1.1), policy)
        for i, k in enumerate(keys):
            cache.process_request(TraceEntry(i, pool[k], None))
            member_total = sum(len(c.members) for c in policy.clusters.values())
            assert member_total == len(cache)
            assert set(policy.cluster_of) == set(cache.entries)

    def test_victim_uniform_over_cluster(self):
        # build a genuine three-member cluster: evict the representative,
        # then land three inserts around it that miss every resident and
        # each other (polar angle 0.58 puts them 0.57 from the rep but
        # 0.95 pairwise); once that cluster is the coldest, the victim
        # draw must be uniform over the three members
        theta = 0.58
        rep = np.zeros(8)
        rep[0] = 1.0
        members = []
        for phi in (0.0, 2 * np.pi / 3, 4 * np.pi / 3):
            m = np.zeros(8)
            m[0] = np.cos(theta)
            m[1] = np.sin(theta) * np.cos(phi)
            m[3] = np.sin(theta) * np.sin(phi)
            members.append(m)
        hot = np.zeros(8)
        hot[2] = 1.0
        fillers = []
        for axis in (4, 5, 6):
            f = np.zeros(8)
            f[axis] = 1.0
            fillers.append(f)
        probe = np.zeros(8)
        probe[7] = 1.0

        policy = make_policy("cluster-lfu", seed=42)
        cache = SemanticCache(CacheConfig(8, 4, 0.6), policy)
        idx = 0

        def req(vec):
            nonlocal idx
            out = cache.process_request(TraceEntry(idx, vec, None))
            idx += 1
            return out

        req(rep)
        req(hot)
        for _ in range(8):
            assert req(hot).hit
        req(fillers[0])
        req(fillers[1])
        req(fillers[2])  # full miss: rep's cluster is coldest, rep evicted
        for m in members:  # each evicts a cold filler, joins rep's cluster
            assert not req(m).hit
            assert req(m).hit  # keep the cluster warmer than the fillers
            assert req(m).hit
        target = [cid for cid, c in policy.clusters.items() if len(c.members) == 3]
        assert len(target) == 1
        member_ids = sorted(policy.clusters[target[0]].members)
        assert len(member_ids) == 3

        counts = np.zeros(3)
        for trial in range(10_000):
            decision = policy.decide(probe, idx + trial)
            counts[member_ids.index(decision.victim)] += 1
        expected = counts.sum() / 3.0
        chi2 = float(((counts - expected) ** 2 / expected).sum())
        assert chi2 < 18.4  # df=2, far tail

    def test_empty_cluster_persists_but_never_victimized(self):
        pool = random_unit_rows(4, 8, 14)
        assert min_pairwise_distance(pool) > 0.9
        policy = make_policy("cluster-lru", seed=3)
        cache = SemanticCache(CacheConfig(8, 2, 0.4), policy)
        for i in range(3):  # third insert empties one singleton cluster
            cache.process_request(TraceEntry(i, pool[i], None))
        assert len(policy.clusters) == 3  # directory keeps the empty one
        assert len(policy._reps) == 3
        assert sum(len(c.members) for c in policy.clusters.values()) == 2
        decision = policy.decide(pool[3], 3)
        assert decision.victim in cache.entries


class TestDistanceLfu:
    def test_exact_match_full_increment(self):
        policy = make_policy("distance-lfu")
        cache = SemanticCache(CacheConfig(8, 4, 0.9), policy)
        v = random_unit_rows(1, 8, 15)[0]
        cache.process_request(TraceEntry(0, v, None))
        cache.process_request(TraceEntry(1, v, None))
        (count,) = policy.counts.values()
        assert count == pytest.approx(1.0, abs=1e-9)

    def test_half_distance_half_increment(self):
        policy = make_policy("distance-lfu")
        cache = SemanticCache(CacheConfig(8, 4, 0.9), policy)
        v, w = chord_pair(0.45)
        cache.process_request(TraceEntry(0, v, None))
        cache.process_request(TraceEntry(1, w, None))
        (count,) = policy.counts.values()
        assert count == pytest.approx(0.5, abs=1e-7)

    def test_boundary_increment_vanishes(self):
        policy = make_policy("distance-lfu")
        cache = SemanticCache(CacheConfig(8, 4, 0.9), policy)
        v, w = chord_pair(0.9 - 1e-6)
        cache.process_request(TraceEntry(0, v, None))
        out = cache.process_request(TraceEntry(1, w, None))
        assert out.hit
        (count,) = policy.counts.values()
        assert 0.0 < count < 1e-4

    def test_counters_bounded_by_hit_count(self):
        pool = random_unit_rows(40, 8, 16)
        keys = zipfish_keys(40, 400, 17)
        policy = make_policy("distance-lfu")
        cache = SemanticCache(CacheConfig(8, 6, 0.9), policy)
        hit_tally: dict[int, int] = {}
        for i, k in enumerate(keys):
            out = cache.process_request(TraceEntry(i, pool[k], None))
            if out.hit:
                hit_tally[out.top.id] = hit_tally.get(out.top.id, 0) + 1
            for eid, c in policy.counts.items():
                assert 0.0 <= c <= hit_tally.get(eid, 0) + 1e-9


class TestSurprisalPolicies:
    def test_max_surprisal_evicted(self):
        pool = random_unit_rows(3, 16, 18)
        t = min_pairwise_distance(pool) / 2.0
        hits, evicted, _ = replay_engine(
            "surprisal", pool, 2, t, surprisals=[12.1, 3.3, 1.0]
        )
        lookup = pool_key_lookup(pool)
        assert [lookup[raw] for raw in evicted] == [0]

    def test_two_stage_rule(self):
        pool = random_unit_rows(4, 16, 19)
        t = min_pairwise_distance(pool) / 2.0
        # counters {a:1, b:1, c:5}, surprisals {a:2, b:9, c:1} -> evict b
        keys = [0, 1, 2] + [0, 1] + [2] * 4 + [3]
        surp_by_key = {0: 2.0, 1: 9.0, 2: 1.0, 3: 0.5}
        surprisals = [surp_by_key[k] for k in keys]
        hits, evicted, _ = replay_engine(
            "surprisal-lfu", pool[keys], 3, t, surprisals=surprisals
        )
        lookup = pool_key_lookup(pool)
        assert [lookup[raw] for raw in evicted] == [1]

    def test_equal_counters_reduce_to_surprisal(self):
        pool = random_unit_rows(12, 16, 20)
        t = min_pairwise_distance(pool) / 2.0
        keys = list(range(12))  # all-miss stream, all counters stay zero
        surprisals = [float(s) for s in np.random.default_rng(21).uniform(1, 9, 12)]
        a = replay_engine("surprisal-lfu", pool[keys], 5, t, surprisals=surprisals)
        b = replay_engine("surprisal", pool[keys], 5, t, surprisals=surprisals)
        assert a[1] == b[1]

    def test_registry_marks_requirement(self):
        assert make_policy("surprisal").requires_surprisal
        assert make_policy("surprisal-lfu").requires_surprisal
        assert not make_policy("lfu").requires_surprisal


class TestDegenerateEquivalence:
    @pytest.mark.parametrize("name", SEMANTIC)
    def test_matches_exact_match_reference(self, name):
        hits, victims, sim_hits, sim_victims = degenerate_twin_run(
            name, requests=400, pool_size=30, capacity=8
        )
        assert hits == sim_hits
        assert victims == sim_victims


class TestRegistry:
    def test_all_fifteen_names(self):
        assert len(POLICY_NAMES) == 15

    def test_unknown_policy(self):
        with pytest.raises(ConfigError):
            make_policy("belady")

    def test_unknown_param(self):
        with pytest.raises(ConfigError):
            make_policy("lfu", k=3)

    def test_string_coercion(self):
        policy = make_policy("sphere-lfu", kappa="4.5", top_k="none", halve_every="8")
        assert policy.kappa == 4.5
        assert policy.top_k is None
        assert policy._halve_every == 8

    def test_non_integer_int_param_rejected(self):
        with pytest.raises(ConfigError):
            make_policy("lru-k", k="2.5")
