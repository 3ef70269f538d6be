"""Trace-replay benchmark driver.

One run = one cold cache replaying one trace prefix under one policy at one
(capacity, threshold) point. Wall time wraps only the replay loop, so
throughput reflects the atomic lookup+update cycle; the clairvoyant
baselines do their pairwise precomputation in a separately reported setup
phase. A matrix sweep is just the cross product of runs, written as CSV.
"""
from __future__ import annotations

import csv
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from semcache import oracles
from semcache.engine import CacheConfig, CacheStateError, ConfigError, SemanticCache
from semcache.policies import POLICY_NAMES, make_policy
from semcache.traceio import Trace, read_trace

ORACLE_NAMES = ("opt-exact", "crvb", "fgrvb", "rgrvb", "vopt-brute")


@dataclass(frozen=True)
class RunConfig:
    trace: str
    policy: str
    capacity: int
    d_thresh: float
    seed: int = 0
    limit: int | None = None
    params: tuple[tuple[str, str], ...] = ()

    def params_dict(self) -> dict:
        return dict(self.params)


@dataclass
class RunReport:
    config: RunConfig
    requests: int
    hits: int
    hit_rate: float
    mean_hit_distance: float | None
    throughput_ops: float | None
    wall_seconds: float
    setup_seconds: float = 0.0

    def row(self) -> dict:
        c = self.config
        return {
            "trace": c.trace,
            "policy": c.policy,
            "capacity": c.capacity,
            "d_thresh": c.d_thresh,
            "seed": c.seed,
            "limit": "" if c.limit is None else c.limit,
            "requests": self.requests,
            "hits": self.hits,
            "hit_rate": f"{self.hit_rate:.6f}",
            "mean_hit_distance": "" if self.mean_hit_distance is None else f"{self.mean_hit_distance:.6f}",
            "throughput_ops": "" if self.throughput_ops is None else f"{self.throughput_ops:.1f}",
            "wall_seconds": f"{self.wall_seconds:.6f}",
            "setup_seconds": f"{self.setup_seconds:.6f}",
            "params": ";".join(f"{k}={v}" for k, v in c.params),
        }


CSV_COLUMNS = [
    "trace", "policy", "capacity", "d_thresh", "seed", "limit", "requests",
    "hits", "hit_rate", "mean_hit_distance", "throughput_ops",
    "wall_seconds", "setup_seconds", "params",
]


def _load(config: RunConfig, trace: Trace | None) -> Trace:
    if trace is None:
        trace = read_trace(config.trace)
    if config.limit is not None:
        if config.limit < 1 or config.limit > len(trace):
            raise ConfigError(
                f"limit {config.limit} outside [1, {len(trace)}] for trace {config.trace}"
            )
        trace = trace.head(config.limit)
    return trace


def _distances_to(trace_mat: np.ndarray, i: int, j: int) -> float:
    diff = trace_mat[i].astype(np.float64) - trace_mat[j].astype(np.float64)
    return float(np.sqrt(diff @ diff))


def _mean_hit_distance(dist_sum: float, hits: int) -> float | None:
    return (dist_sum / hits) if hits else None


def _run_online(config: RunConfig, trace: Trace) -> RunReport:
    policy = make_policy(config.policy, seed=config.seed, **config.params_dict())
    if policy.requires_surprisal and not trace.has_surprisal:
        raise ConfigError(
            f"policy {config.policy!r} needs surprisal values but trace "
            f"{config.trace} does not carry them"
        )
    cache_config = CacheConfig(
        dim=trace.dim,
        capacity=config.capacity,
        d_thresh=config.d_thresh,
        require_unit=trace.normalized,
    )
    cache = SemanticCache(cache_config, policy)
    hits = 0
    dist_sum = 0.0
    start = time.perf_counter()
    for entry in trace:
        outcome = cache.process_request(entry)
        if outcome.hit:
            hits += 1
            dist_sum += outcome.top.dist
    wall = time.perf_counter() - start
    requests = len(trace)
    return RunReport(
        config=config,
        requests=requests,
        hits=hits,
        hit_rate=hits / requests,
        mean_hit_distance=_mean_hit_distance(dist_sum, hits),
        throughput_ops=requests / max(wall, 1e-9),
        wall_seconds=wall,
    )


def _check_oracle_params(config: RunConfig, accepted: tuple[str, ...]) -> dict:
    params = config.params_dict()
    for key in params:
        if key not in accepted:
            raise ConfigError(f"oracle {config.policy!r} does not accept parameter {key!r}")
    return params


def _run_oracle(config: RunConfig, trace: Trace) -> RunReport:
    name = config.policy
    mat = np.asarray(trace.vectors)
    n = len(trace)
    setup_start = time.perf_counter()

    if name == "vopt-brute":
        params = _check_oracle_params(config, ("max_states",))
        kwargs = {}
        if "max_states" in params:
            kwargs["max_states"] = int(params["max_states"])
        hits = oracles.vopt_bruteforce(mat, config.d_thresh, config.capacity, **kwargs)
        setup = time.perf_counter() - setup_start
        return RunReport(
            config=config,
            requests=n,
            hits=hits,
            hit_rate=hits / n,
            mean_hit_distance=None,
            throughput_ops=None,
            wall_seconds=0.0,
            setup_seconds=setup,
        )

    if name == "opt-exact":
        _check_oracle_params(config, ())
        keys = [row.tobytes() for row in np.ascontiguousarray(mat)]
        setup = time.perf_counter() - setup_start
        start = time.perf_counter()
        hit_list, server = oracles._belady_replay(keys, config.capacity)
        wall = time.perf_counter() - start
        dist_sum = sum(
            _distances_to(mat, i, server[i]) for i, h in enumerate(hit_list) if h
        )
    elif name == "crvb":
        _check_oracle_params(config, ())
        cover = oracles.build_cover_table(mat, config.d_thresh)
        labels = oracles.crvb_cluster(mat, config.d_thresh, cover=cover)
        setup = time.perf_counter() - setup_start
        start = time.perf_counter()
        hit_list, server = oracles._belady_replay([int(c) for c in labels], config.capacity)
        wall = time.perf_counter() - start
        dist_sum = sum(
            _distances_to(mat, i, server[i]) for i, h in enumerate(hit_list) if h
        )
    elif name in ("fgrvb", "rgrvb"):
        accepted = ("marginal",) if name == "fgrvb" else ()
        params = _check_oracle_params(config, accepted)
        cover = oracles.build_cover_table(mat, config.d_thresh)
        setup = time.perf_counter() - setup_start
        start = time.perf_counter()
        if name == "fgrvb":
            marginal = str(params.get("marginal", "true")).lower() not in ("false", "0", "no")
            hit_list, dists = oracles.fgrvb_replay(mat, cover, config.capacity, marginal=marginal)
        else:
            hit_list, dists = oracles.rgrvb_replay(mat, cover, config.capacity)
        wall = time.perf_counter() - start
        dist_sum = sum(d for d in dists if d is not None)
    else:
        raise ConfigError(f"unknown oracle {name!r}")

    hits = sum(hit_list)
    mhd = _mean_hit_distance(dist_sum, hits)
    if mhd is not None and mhd >= config.d_thresh:
        raise CacheStateError(
            f"mean hit distance {mhd} is not below the threshold {config.d_thresh}"
        )
    return RunReport(
        config=config,
        requests=n,
        hits=hits,
        hit_rate=hits / n,
        mean_hit_distance=mhd,
        throughput_ops=n / max(wall, 1e-9),
        wall_seconds=wall,
        setup_seconds=setup,
    )


def run_single(config: RunConfig, trace: Trace | None = None) -> RunReport:
    """Replay one configuration from a cold cache and report its metrics."""
    if config.capacity < 1:
        raise ConfigError(f"capacity must be at least 1, got {config.capacity}")
    trace = _load(config, trace)
    if config.policy in ORACLE_NAMES:
        report = _run_oracle(config, trace)
    elif config.policy in POLICY_NAMES:
        report = _run_online(config, trace)
    else:
        known = ", ".join(sorted(POLICY_NAMES + ORACLE_NAMES))
        raise ConfigError(f"unknown policy {config.policy!r} (known: {known})")
    if report.mean_hit_distance is not None and report.mean_hit_distance >= config.d_thresh:
        raise CacheStateError(
            f"mean hit distance {report.mean_hit_distance} is not below {config.d_thresh}"
        )
    return report


def _sort_key(report: RunReport):
    c = report.config
    return (c.policy, c.capacity, c.d_thresh, c.seed)


def run_matrix(
    configs: list[RunConfig],
    out_path: str | Path | None = None,
    jobs: int = 1,
) -> list[RunReport]:
    """Run every configuration, sorted deterministically, optionally to CSV.

    Runs are independent cold caches, so they may execute in parallel;
    row order in the output never depends on completion order.
    """
    if jobs < 1:
        raise ConfigError(f"jobs must be at least 1, got {jobs}")
    if jobs == 1:
        traces: dict[str, Trace] = {}
        reports = []
        for config in configs:
            if config.trace not in traces:
                traces[config.trace] = read_trace(config.trace)
            reports.append(run_single(config, trace=traces[config.trace]))
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            reports = list(pool.map(run_single, configs))
    reports.sort(key=_sort_key)
    if out_path is not None:
        write_csv(reports, out_path)
    return reports


def write_csv(reports: list[RunReport], out_path: str | Path) -> None:
    with open(out_path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
        writer.writeheader()
        for report in sorted(reports, key=_sort_key):
            writer.writerow(report.row())


PLOT_METRICS = ("hit_rate", "mean_hit_distance", "throughput_ops")


def emit_plotdata(csv_path: str | Path, out_dir: str | Path) -> list[Path]:
    """Split a matrix CSV into per-metric long-format files for plotting."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(csv_path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    written = []
    for metric in PLOT_METRICS:
        path = out_dir / f"{metric}.csv"
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["policy", "size", "threshold", "value"])
            out_rows = [
                (row["policy"], int(row["capacity"]), float(row["d_thresh"]), row[metric])
                for row in rows
            ]
            out_rows.sort(key=lambda r: (r[0], r[1], r[2]))
            writer.writerows(out_rows)
        written.append(path)
    return written
