"""Command line front end.

Subcommands map one-to-one onto library calls: replay a single run, sweep a
matrix, summarize a trace, generate synthetic traces, or reshape a matrix
CSV into per-metric plot files. Exit code 0 on success, 2 for configuration
problems, 3 for unreadable or malformed trace files.
"""
from __future__ import annotations

import argparse
import json
import sys
from math import comb
from pathlib import Path

from semcache import bench, reduction, workload
from semcache.engine import ConfigError
from semcache.policies import POLICY_NAMES
from semcache.traceio import (
    TraceError,
    read_trace,
    write_trace,
    write_trace_meta,
)

ALL_POLICY_NAMES = tuple(sorted(POLICY_NAMES + bench.ORACLE_NAMES))


def _parse_params(pairs: list[str]) -> tuple[tuple[str, str], ...]:
    out = []
    for pair in pairs:
        key, sep, value = pair.partition("=")
        if not sep or not key:
            raise ConfigError(f"--param expects key=value, got {pair!r}")
        out.append((key, value))
    return tuple(out)


def _run_config(args, policy: str, capacity: int, threshold: float, seed: int) -> bench.RunConfig:
    return bench.RunConfig(
        trace=args.trace,
        policy=policy,
        capacity=capacity,
        d_thresh=threshold,
        seed=seed,
        limit=args.limit,
        params=_parse_params(args.param),
    )


def _cmd_run(args) -> int:
    config = _run_config(args, args.policy, args.cache_size, args.threshold, args.seed)
    report = bench.run_single(config)
    for key, value in report.row().items():
        print(f"{key:18s} {value}")
    if args.out:
        bench.write_csv([report], args.out)
    return 0


def _cmd_matrix(args) -> int:
    configs = [
        _run_config(args, policy, capacity, threshold, seed)
        for policy in args.policy
        for capacity in args.cache_size
        for threshold in args.threshold
        for seed in args.seed
    ]
    if not configs:
        raise ConfigError("matrix needs at least one policy, cache size, and threshold")
    reports = bench.run_matrix(configs, out_path=args.out, jobs=args.jobs)
    print(f"wrote {len(reports)} runs to {args.out}")
    return 0


def _cmd_stats(args) -> int:
    trace = read_trace(args.trace)
    stats = workload.compute_stats(
        trace, args.threshold, sample_pairs=args.sample_pairs, seed=args.seed
    )
    text = json.dumps(stats.as_dict(), indent=2, sort_keys=True)
    print(text)
    if args.out:
        Path(args.out).write_text(text + "\n")
    return 0


def _cmd_gen_zipf(args) -> int:
    trace = workload.generate_zipf_workload(
        num_clusters=args.clusters,
        requests=args.requests,
        zipf_s=args.zipf_s,
        intra_radius=args.intra_radius,
        dim=args.dim,
        seed=args.seed,
        surprisal=not args.no_surprisal,
    )
    write_trace(args.out, trace)
    write_trace_meta(args.out, trace.meta)
    print(f"wrote {len(trace)} requests ({trace.dim}d) to {args.out}")
    return 0


def _cmd_gen_mcp(args) -> int:
    instance = reduction.random_instance(args.elements, args.sets, args.k, seed=args.seed)
    params = reduction.choose_params(instance, args.threshold)
    set_vectors, element_vectors = reduction.build_vectors(instance, params)
    report = reduction.validate_reduction(
        set_vectors, element_vectors, instance, params.d_thresh
    )
    if not report.ok:
        raise ConfigError(f"generated instance fails its own geometry: {report.margins}")
    trace = reduction.build_trace(instance, set_vectors, element_vectors)
    chosen, covered = reduction.greedy_max_coverage(instance)
    meta = dict(trace.meta)
    meta["params"] = {
        "alpha": params.alpha,
        "beta": params.beta,
        "gamma": params.gamma,
        "d_thresh": params.d_thresh,
    }
    meta["margins"] = report.margins
    meta["greedy"] = {"sets": chosen, "covered": covered}
    if comb(len(instance.sets), min(instance.k, len(instance.sets))) <= 100_000:
        meta["optimum_coverage"] = reduction.max_coverage_bruteforce(instance)
    write_trace(args.out, trace)
    write_trace_meta(args.out, meta)
    print(
        f"wrote {len(trace)} requests ({trace.dim}d) to {args.out}; "
        f"greedy covers {covered}/{instance.n_elements}"
    )
    return 0


def _cmd_plotdata(args) -> int:
    written = bench.emit_plotdata(args.csv, args.out_dir)
    for path in written:
        print(f"wrote {path}")
    return 0


def _add_run_flags(sub, single_valued: bool) -> None:
    sub.add_argument("--trace", required=True, help="path to a trace file")
    if single_valued:
        sub.add_argument("--policy", required=True, choices=ALL_POLICY_NAMES)
        sub.add_argument("--cache-size", type=int, required=True)
        sub.add_argument("--threshold", type=float, required=True)
        sub.add_argument("--seed", type=int, default=0)
    else:
        sub.add_argument(
            "--policy", action="append", required=True, choices=ALL_POLICY_NAMES,
            help="repeatable",
        )
        sub.add_argument("--cache-size", type=int, action="append", required=True, help="repeatable")
        sub.add_argument("--threshold", type=float, action="append", required=True, help="repeatable")
        sub.add_argument("--seed", type=int, action="append", help="repeatable, default 0")
    sub.add_argument("--limit", type=int, default=None, help="replay only the first N requests")
    sub.add_argument(
        "--param", action="append", default=[], metavar="KEY=VALUE",
        help="policy parameter, repeatable",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="semcache",
        description="semantic vector cache simulator and benchmark harness",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    run = subs.add_parser("run", help="replay one trace under one policy")
    _add_run_flags(run, single_valued=True)
    run.add_argument("--out", default=None, help="also write the run as a one-row CSV")
    run.set_defaults(func=_cmd_run)

    matrix = subs.add_parser("matrix", help="sweep policies x sizes x thresholds")
    _add_run_flags(matrix, single_valued=False)
    matrix.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    matrix.add_argument("--out", required=True, help="CSV output path")
    matrix.set_defaults(func=_cmd_matrix)

    stats = subs.add_parser("stats", help="summarize the geometry of a trace")
    stats.add_argument("--trace", required=True)
    stats.add_argument("--threshold", type=float, required=True)
    stats.add_argument("--sample-pairs", type=int, default=workload.DEFAULT_SAMPLE_PAIRS)
    stats.add_argument("--seed", type=int, default=0)
    stats.add_argument("--out", default=None, help="also write the JSON summary here")
    stats.set_defaults(func=_cmd_stats)

    gen_zipf = subs.add_parser("gen-zipf", help="generate a clustered zipf workload")
    gen_zipf.add_argument("--out", required=True)
    gen_zipf.add_argument("--clusters", type=int, required=True)
    gen_zipf.add_argument("--requests", type=int, required=True)
    gen_zipf.add_argument("--zipf-s", type=float, default=1.0)
    gen_zipf.add_argument("--intra-radius", type=float, default=0.1)
    gen_zipf.add_argument("--dim", type=int, default=384)
    gen_zipf.add_argument("--seed", type=int, default=0)
    gen_zipf.add_argument("--no-surprisal", action="store_true")
    gen_zipf.set_defaults(func=_cmd_gen_zipf)

    gen_mcp = subs.add_parser("gen-mcp", help="generate a set-coverage hardness trace")
    gen_mcp.add_argument("--out", required=True)
    gen_mcp.add_argument("--elements", type=int, required=True)
    gen_mcp.add_argument("--sets", type=int, required=True)
    gen_mcp.add_argument("--k", type=int, required=True)
    gen_mcp.add_argument("--threshold", type=float, default=1.0)
    gen_mcp.add_argument("--seed", type=int, default=0)
    gen_mcp.set_defaults(func=_cmd_gen_mcp)

    plotdata = subs.add_parser("plotdata", help="split a matrix CSV into per-metric files")
    plotdata.add_argument("--csv", required=True)
    plotdata.add_argument("--out-dir", required=True)
    plotdata.set_defaults(func=_cmd_plotdata)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "seed", None) is None and args.command == "matrix":
        args.seed = [0]
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (TraceError, OSError) as exc:
        print(f"trace error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
