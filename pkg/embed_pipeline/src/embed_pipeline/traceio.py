"""Writer for the semantic cache trace format.

Layout (little-endian), kept byte-compatible with the cache engine's reader:

    magic    8 bytes  b"SEMTRACE"
    version  u8       currently 1
    flags    u8       bit0 = vectors are unit-normalized, bit1 = surprisal present
    dim      u32
    count    u64
    records  count * (dim * f32, then one f32 surprisal when bit1 is set)

This package only ever emits normalized vectors with surprisal, so both
flag bits are always set. A `.meta.json` sidecar with the same stem carries
provenance. Files appear atomically or not at all.
"""
from __future__ import annotations

import json
import os
import struct
import tempfile
from pathlib import Path

import numpy as np

from embed_pipeline.spec import DataError

MAGIC = b"SEMTRACE"
VERSION = 1
FLAG_NORMALIZED = 0x01
FLAG_SURPRISAL = 0x02
_HEADER = struct.Struct("<8sBBIQ")

NORM_TOL = 1e-4


def write_trace(path, vectors: np.ndarray, surprisals: np.ndarray) -> None:
    path = Path(path)
    vectors = np.ascontiguousarray(vectors, dtype="<f4")
    surprisals = np.ascontiguousarray(surprisals, dtype="<f4")
    if vectors.ndim != 2 or vectors.shape[1] < 1:
        raise DataError(f"vectors must be (count, dim), got {vectors.shape}")
    if surprisals.shape != (vectors.shape[0],):
        raise DataError("surprisals length does not match vector count")
    if not np.all(np.isfinite(vectors)):
        raise DataError("vectors contain non-finite components")
    if np.any(surprisals < 0) or not np.all(np.isfinite(surprisals)):
        raise DataError("surprisals must be finite and non-negative")
    norms = np.linalg.norm(vectors.astype(np.float64), axis=1)
    worst = float(np.max(np.abs(norms - 1.0))) if len(vectors) else 0.0
    if worst > NORM_TOL:
        raise DataError(f"a vector deviates from unit norm by {worst:.2e}")

    count, dim = vectors.shape
    flags = FLAG_NORMALIZED | FLAG_SURPRISAL
    header = _HEADER.pack(MAGIC, VERSION, flags, dim, count)
    payload = np.ascontiguousarray(np.column_stack([vectors, surprisals]), dtype="<f4")
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(header)
            fh.write(payload.tobytes())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def meta_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.stem + ".meta.json")


def write_meta(path, meta: dict) -> Path:
    target = meta_path(path)
    target.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return target
