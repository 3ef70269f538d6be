"""Binary trace files: a stream of float32 query vectors with optional
per-query surprisal scores.

Layout (little-endian):

    magic    8 bytes  b"SEMTRACE"
    version  u8       currently 1
    flags    u8       bit0 = vectors are unit-normalized, bit1 = surprisal present
    dim      u32
    count    u64
    records  count * (dim * f32, then one f32 surprisal when bit1 is set)

A JSON sidecar with the same stem and a `.meta.json` suffix carries
provenance (generator parameters, source dataset, model id). The sidecar is
optional and never required to replay a trace.
"""
from __future__ import annotations

import json
import os
import struct
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, NamedTuple

import numpy as np

MAGIC = b"SEMTRACE"
VERSION = 1
FLAG_NORMALIZED = 0x01
FLAG_SURPRISAL = 0x02
_HEADER = struct.Struct("<8sBBIQ")

# unit-norm tolerance for float32 storage
NORM_TOL = 1e-4


class TraceError(Exception):
    """Base class for trace file problems."""


class TraceMagicError(TraceError):
    """File does not start with the SEMTRACE magic."""


class TraceVersionError(TraceError):
    """Unsupported format version."""


class TraceTruncatedError(TraceError):
    """File ends before the declared payload."""


class TraceDataError(TraceError):
    """Payload is structurally valid but carries bad values."""


class TraceEntry(NamedTuple):
    index: int
    vector: np.ndarray
    surprisal: float | None


@dataclass
class Trace:
    """An in-memory request stream: row i is the i-th query."""

    vectors: np.ndarray                 # (count, dim) float32
    surprisals: np.ndarray | None = None  # (count,) float32
    normalized: bool = False
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.vectors = np.ascontiguousarray(self.vectors, dtype=np.float32)
        if self.vectors.ndim != 2 or self.vectors.shape[1] < 1:
            raise ValueError(f"vectors must be (count, dim), got {self.vectors.shape}")
        if self.surprisals is not None:
            self.surprisals = np.ascontiguousarray(self.surprisals, dtype=np.float32)
            if self.surprisals.shape != (len(self),):
                raise ValueError("surprisals length does not match vector count")

    def __len__(self) -> int:
        return self.vectors.shape[0]

    @property
    def dim(self) -> int:
        return int(self.vectors.shape[1])

    @property
    def has_surprisal(self) -> bool:
        return self.surprisals is not None

    def entry(self, i: int) -> TraceEntry:
        s = float(self.surprisals[i]) if self.surprisals is not None else None
        return TraceEntry(i, self.vectors[i], s)

    def __iter__(self) -> Iterator[TraceEntry]:
        for i in range(len(self)):
            yield self.entry(i)

    def head(self, limit: int | None) -> "Trace":
        """A view of the first `limit` requests (the whole trace when None)."""
        if limit is None or limit >= len(self):
            return self
        if limit < 1:
            raise ValueError("limit must be at least 1")
        surp = self.surprisals[:limit] if self.surprisals is not None else None
        return Trace(self.vectors[:limit], surp, self.normalized, dict(self.meta))


def _validate_payload(trace: Trace) -> None:
    if not np.all(np.isfinite(trace.vectors)):
        raise TraceDataError("trace vectors contain non-finite components")
    if trace.surprisals is not None:
        if not np.all(np.isfinite(trace.surprisals)):
            raise TraceDataError("trace surprisals contain non-finite values")
        if np.any(trace.surprisals < 0):
            raise TraceDataError("trace surprisals must be non-negative")
    if trace.normalized:
        norms = np.linalg.norm(trace.vectors.astype(np.float64), axis=1)
        worst = float(np.max(np.abs(norms - 1.0))) if len(trace) else 0.0
        if worst > NORM_TOL:
            raise TraceDataError(
                f"normalized flag set but a vector deviates from unit norm by {worst:.2e}"
            )


def write_trace(path: str | Path, trace: Trace) -> None:
    """Serialize a trace. The file appears atomically or not at all."""
    path = Path(path)
    _validate_payload(trace)
    flags = 0
    if trace.normalized:
        flags |= FLAG_NORMALIZED
    if trace.surprisals is not None:
        flags |= FLAG_SURPRISAL
    header = _HEADER.pack(MAGIC, VERSION, flags, trace.dim, len(trace))
    if trace.surprisals is not None:
        payload = np.column_stack([trace.vectors, trace.surprisals])
    else:
        payload = trace.vectors
    payload = np.ascontiguousarray(payload, dtype="<f4")
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


def read_trace(path: str | Path) -> Trace:
    """Parse and validate a trace file."""
    raw = Path(path).read_bytes()
    if len(raw) < len(MAGIC):
        raise TraceTruncatedError(f"file is only {len(raw)} bytes")
    if raw[: len(MAGIC)] != MAGIC:
        raise TraceMagicError(f"bad magic {raw[:len(MAGIC)]!r}")
    if len(raw) < _HEADER.size:
        raise TraceTruncatedError("header is incomplete")
    _, version, flags, dim, count = _HEADER.unpack_from(raw)
    if version != VERSION:
        raise TraceVersionError(f"unsupported version {version}")
    if dim < 1:
        raise TraceDataError("dimension must be at least 1")
    has_surprisal = bool(flags & FLAG_SURPRISAL)
    width = dim + (1 if has_surprisal else 0)
    expected = _HEADER.size + count * width * 4
    if len(raw) < expected:
        raise TraceTruncatedError(
            f"expected {expected} bytes for {count} records, file has {len(raw)}"
        )
    if len(raw) > expected:
        raise TraceDataError(f"{len(raw) - expected} trailing bytes after payload")
    data = np.frombuffer(raw, dtype="<f4", offset=_HEADER.size).reshape(count, width)
    vectors = np.ascontiguousarray(data[:, :dim])
    surprisals = np.ascontiguousarray(data[:, dim]) if has_surprisal else None
    trace = Trace(vectors, surprisals, normalized=bool(flags & FLAG_NORMALIZED))
    _validate_payload(trace)
    return trace


def meta_path(path: str | Path) -> Path:
    path = Path(path)
    return path.with_name(path.stem + ".meta.json")


def write_trace_meta(path: str | Path, meta: dict) -> Path:
    """Write the JSON sidecar for the trace at `path`; returns the sidecar path."""
    target = meta_path(path)
    target.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return target


def read_trace_meta(path: str | Path) -> dict:
    return json.loads(meta_path(path).read_text())
