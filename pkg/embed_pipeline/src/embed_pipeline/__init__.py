"""Dataset-to-trace pipeline: sentence embeddings plus word-frequency
surprisal, written in the semantic cache trace format."""

__version__ = "0.1.0"

from embed_pipeline.spec import ConfigError, DataError, PipelineSpec
from embed_pipeline.surprisal import surprisal_of

__all__ = ["ConfigError", "DataError", "PipelineSpec", "surprisal_of", "__version__"]
