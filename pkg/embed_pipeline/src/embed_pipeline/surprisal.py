"""Bag-of-words surprisal from a word-frequency table.

surprisal(s) = sum over tokens w of -ln p(w), in nats. Words missing from
the table contribute -ln(floor). Tokenization is a lowercase alphanumeric
split; the exact scheme matters less than being consistent, since consumers
only rely on the relative ordering of scores.
"""
from __future__ import annotations

import math
import re
from importlib import resources

from embed_pipeline.spec import DataError

_WORD = re.compile(r"[a-z0-9]+")

DEFAULT_FLOOR = 1e-9
_SNAPSHOT = "word_frequencies_en.tsv"


def tokenize(text: str) -> list[str]:
    return _WORD.findall(text.lower())


class FrequencyTable:
    """word -> probability, with provenance carried along."""

    def __init__(self, probs: dict[str, float], source: str):
        for word, p in probs.items():
            if not (0.0 < p <= 1.0):
                raise DataError(f"probability for {word!r} out of (0, 1]: {p}")
        self.probs = probs
        self.source = source

    def __len__(self) -> int:
        return len(self.probs)

    def __contains__(self, word: str) -> bool:
        return word in self.probs


def load_default_table() -> FrequencyTable:
    """The vendored English snapshot shipped with the package."""
    text = resources.files("embed_pipeline.data").joinpath(_SNAPSHOT).read_text()
    return parse_table(text, source=_SNAPSHOT)


def parse_table(text: str, source: str) -> FrequencyTable:
    """A `# source: <name>` header line, if present, overrides `source`."""
    probs: dict[str, float] = {}
    provenance = source
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if line.startswith("# source:"):
            provenance = line[len("# source:"):].strip()
            continue
        if not line or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise DataError(f"{source}:{lineno}: expected 'word<TAB>prob', got {line!r}")
        try:
            probs[parts[0]] = float(parts[1])
        except ValueError as exc:
            raise DataError(f"{source}:{lineno}: bad probability {parts[1]!r}") from exc
    if not probs:
        raise DataError(f"{source}: table is empty")
    return FrequencyTable(probs, provenance)


def surprisal_of(
    text: str,
    table: FrequencyTable | None = None,
    floor: float = DEFAULT_FLOOR,
) -> float:
    """Total -ln p over the words of `text`; empty text scores 0.0."""
    if table is None:
        table = default_table()
    total = 0.0
    for word in tokenize(text):
        p = table.probs.get(word, floor)
        total += -math.log(p)
    return total


_cached: FrequencyTable | None = None


def default_table() -> FrequencyTable:
    global _cached
    if _cached is None:
        _cached = load_default_table()
    return _cached
