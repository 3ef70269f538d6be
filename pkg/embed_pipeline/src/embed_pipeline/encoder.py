"""Sentence encoders behind a minimal seam.

Anything with `encode(texts) -> (len(texts), dim) float array` and a `name`
works; the default wraps a sentence-transformers model in deterministic
eval mode. The import is lazy so the base package stays numpy-only.
"""
from __future__ import annotations

import numpy as np

from embed_pipeline.spec import DataError


class SentenceEncoder:
    def __init__(self, model_id: str, batch_size: int = 256):
        try:
            import torch
            from sentence_transformers import SentenceTransformer
        except ImportError as exc:
            raise DataError(
                "sentence-transformers is not installed "
                "(pip install 'embed-pipeline[encode]')"
            ) from exc
        try:
            model = SentenceTransformer(model_id, device="cpu")
        except Exception as exc:
            raise DataError(f"cannot load model {model_id!r}: {exc}") from exc
        model.eval()
        torch.set_grad_enabled(False)
        self._model = model
        self.name = model_id
        self.batch_size = batch_size

    def encode(self, texts: list[str]) -> np.ndarray:
        return self._model.encode(
            texts,
            batch_size=self.batch_size,
            convert_to_numpy=True,
            normalize_embeddings=True,
            show_progress_bar=False,
        )


def build_encoder(model_id: str) -> SentenceEncoder:
    """Default encoder factory; the pipeline calls this unless one is injected."""
    return SentenceEncoder(model_id)
