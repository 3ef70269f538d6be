"""Query-text extraction from local files or hub datasets."""
from __future__ import annotations

import csv
import json
from pathlib import Path

from embed_pipeline.spec import DataError, PipelineSpec

_LOCAL_SUFFIXES = (".jsonl", ".csv", ".txt")


def load_queries(spec: PipelineSpec) -> list[str]:
    """The first `max_entries` query strings, in dataset order.

    Returns min(available, requested) rows; an empty dataset is an error.
    """
    path = Path(spec.dataset)
    if path.suffix in _LOCAL_SUFFIXES or path.exists():
        texts = _from_file(path, spec.field, spec.max_entries)
    else:
        texts = _from_hub(spec)
    if not texts:
        raise DataError(f"{spec.dataset}: no rows with field {spec.field!r}")
    return texts


def _pick(row: dict, field: str, where: str) -> str:
    if field not in row:
        raise DataError(f"{where}: row has no field {field!r} (has {sorted(row)})")
    value = row[field]
    if not isinstance(value, str):
        raise DataError(f"{where}: field {field!r} is not text: {type(value).__name__}")
    return value


def _from_file(path: Path, field: str, limit: int) -> list[str]:
    if not path.exists():
        raise DataError(f"{path}: no such file")
    texts: list[str] = []
    if path.suffix == ".jsonl":
        with path.open() as fh:
            for lineno, line in enumerate(fh, start=1):
                if len(texts) >= limit:
                    break
                line = line.strip()
                if not line:
                    continue
                try:
                    row = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise DataError(f"{path}:{lineno}: bad JSON: {exc}") from exc
                texts.append(_pick(row, field, f"{path}:{lineno}"))
    elif path.suffix == ".csv":
        with path.open(newline="") as fh:
            for row in csv.DictReader(fh):
                if len(texts) >= limit:
                    break
                texts.append(_pick(row, field, str(path)))
    elif path.suffix == ".txt":
        # one query per line, the field selector does not apply
        with path.open() as fh:
            for line in fh:
                if len(texts) >= limit:
                    break
                if line.strip():
                    texts.append(line.rstrip("\n"))
    else:
        raise DataError(f"{path}: unsupported suffix (want .jsonl, .csv, or .txt)")
    return texts


def _from_hub(spec: PipelineSpec) -> list[str]:
    try:
        import datasets
    except ImportError as exc:
        raise DataError(
            f"{spec.dataset} is not a local file and the datasets package "
            "is not installed (pip install 'embed-pipeline[encode]')"
        ) from exc
    try:
        ds = datasets.load_dataset(spec.dataset, split=spec.split, streaming=True)
    except Exception as exc:
        raise DataError(f"cannot load dataset {spec.dataset!r}: {exc}") from exc
    texts: list[str] = []
    for row in ds:
        if len(texts) >= spec.max_entries:
            break
        texts.append(_pick(dict(row), spec.field, spec.dataset))
    return texts
