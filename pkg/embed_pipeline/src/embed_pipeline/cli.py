"""Command line wrapper around embed_dataset."""
from __future__ import annotations

import argparse
import sys

from embed_pipeline.spec import ConfigError, DataError, PipelineSpec, DEFAULT_MODEL


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="embed-pipeline",
        description="Embed dataset queries into a semantic cache trace file",
    )
    p.add_argument("--dataset", required=True,
                   help="local .jsonl/.csv/.txt file or hub dataset name")
    p.add_argument("--out", required=True, help="output trace path")
    p.add_argument("--field", default="question", help="query text column")
    p.add_argument("--split", default="train", help="hub dataset split")
    p.add_argument("--max-entries", type=int, default=10_000)
    p.add_argument("--model", default=DEFAULT_MODEL)
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        spec = PipelineSpec(
            dataset=args.dataset,
            out=args.out,
            field=args.field,
            split=args.split,
            max_entries=args.max_entries,
            model=args.model,
        )
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    from embed_pipeline.pipeline import embed_dataset

    try:
        result = embed_dataset(spec)
    except (DataError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    print(f"wrote {result.count} queries ({result.dim}d) to {result.path}")
    print(f"sidecar {result.meta_path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
