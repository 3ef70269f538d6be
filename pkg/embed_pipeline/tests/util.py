"""Shared test helpers."""

import hashlib
import json

import numpy as np


class FakeEncoder:
    """Deterministic stand-in for the sentence encoder.

    Each text maps to a fixed unit vector derived from its hash, so the
    same text always yields the same embedding and different texts almost
    surely differ.  No model download, no network.
    """

    def __init__(self, dim: int = 384):
        self.dim = dim
        self.name = f"fake-hash-{dim}d"
        self.seen: list[str] = []

    def encode(self, texts):
        out = np.empty((len(texts), self.dim), dtype=np.float64)
        for i, text in enumerate(texts):
            self.seen.append(text)
            out[i] = self.vector_for(text)
        return out

    def vector_for(self, text: str) -> np.ndarray:
        digest = hashlib.sha256(text.encode("utf-8")).digest()
        seed = int.from_bytes(digest[:8], "little")
        vec = np.random.default_rng(seed).standard_normal(self.dim)
        return vec / np.linalg.norm(vec)


def write_jsonl(path, rows) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row) + "\n")


def read_raw_trace(path):
    """Parse a trace file straight from its bytes.

    Independent of both this package's writer and the cache engine's
    reader, so pipeline tests check the file, not the code that made it.
    Returns (flags, vectors, surprisals).
    """
    import struct

    raw = open(path, "rb").read()
    head = struct.Struct("<8sBBIQ")
    magic, version, flags, dim, count = head.unpack(raw[: head.size])
    assert magic == b"SEMTRACE" and version == 1
    body = np.frombuffer(raw[head.size :], dtype="<f4")
    if flags & 0x02:
        body = body.reshape(count, dim + 1)
        return flags, body[:, :dim].copy(), body[:, dim].copy()
    return flags, body.reshape(count, dim).copy(), None
