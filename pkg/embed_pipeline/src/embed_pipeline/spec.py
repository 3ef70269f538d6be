"""Pipeline configuration and error types."""
from __future__ import annotations

from dataclasses import dataclass

DEFAULT_MODEL = "sentence-transformers/all-MiniLM-L6-v2"


class PipelineError(Exception):
    """Base class for pipeline failures."""


class ConfigError(PipelineError):
    """A parameter is out of range or inconsistent."""


class DataError(PipelineError):
    """The dataset cannot be read or lacks the requested rows."""


@dataclass(frozen=True)
class PipelineSpec:
    """One dataset-to-trace conversion.

    `dataset` is either a local file (.jsonl, .csv, .txt) or a hub dataset
    name; `field` selects the query text column. Only queries are embedded,
    never responses.
    """

    dataset: str
    out: str
    field: str = "question"
    split: str = "train"
    max_entries: int = 10_000
    model: str = DEFAULT_MODEL

    def __post_init__(self) -> None:
        if self.max_entries < 1:
            raise ConfigError(f"max_entries must be at least 1, got {self.max_entries}")
        if not self.dataset:
            raise ConfigError("dataset must be a non-empty path or name")
        if not self.field:
            raise ConfigError("field must be a non-empty column name")
