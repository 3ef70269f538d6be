"""Dataset-to-trace conversion: read queries, embed, score, write."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from embed_pipeline import __version__
from embed_pipeline.rows import load_queries
from embed_pipeline.spec import DataError, PipelineSpec
from embed_pipeline.surprisal import DEFAULT_FLOOR, default_table, surprisal_of
from embed_pipeline.traceio import write_meta, write_trace

BATCH = 256


@dataclass(frozen=True)
class TraceFile:
    path: str
    meta_path: str
    count: int
    dim: int


def embed_dataset(spec: PipelineSpec, encoder=None) -> TraceFile:
    """Embed the spec's queries and write a trace plus sidecar.

    Entries keep dataset order. Everything is computed before anything is
    written, and the writer is atomic, so a failure never leaves partial
    output behind.
    """
    if encoder is None:
        from embed_pipeline.encoder import build_encoder

        encoder = build_encoder(spec.model)
    texts = load_queries(spec)

    chunks = [
        np.asarray(encoder.encode(texts[i : i + BATCH]), dtype=np.float64)
        for i in range(0, len(texts), BATCH)
    ]
    vectors = np.vstack(chunks)
    if vectors.shape[0] != len(texts) or vectors.ndim != 2:
        raise DataError(
            f"encoder returned shape {vectors.shape} for {len(texts)} texts"
        )
    norms = np.linalg.norm(vectors, axis=1, keepdims=True)
    if np.any(norms == 0.0) or not np.all(np.isfinite(vectors)):
        raise DataError("encoder produced a zero or non-finite vector")
    vectors = np.ascontiguousarray(vectors / norms, dtype=np.float32)

    table = default_table()
    surprisals = np.array(
        [surprisal_of(t, table) for t in texts], dtype=np.float32
    )

    write_trace(spec.out, vectors, surprisals)
    meta = {
        "generator": "embed-pipeline",
        "generator_version": __version__,
        "dataset": spec.dataset,
        "split": spec.split,
        "field": spec.field,
        "model": getattr(encoder, "name", spec.model),
        "count": int(vectors.shape[0]),
        "dim": int(vectors.shape[1]),
        "normalized": True,
        "surprisal": {"source": table.source, "floor": DEFAULT_FLOOR, "unit": "nats"},
    }
    sidecar = write_meta(spec.out, meta)
    return TraceFile(
        path=str(spec.out),
        meta_path=str(sidecar),
        count=int(vectors.shape[0]),
        dim=int(vectors.shape[1]),
    )
