"""Text processing: lowercasing, stopword removal and Porter stemming.

Documents and queries share the same pipeline so collection statistics
and query terms live in the same term space.
"""

from __future__ import annotations

import re
import unicodedata
from importlib import resources

from .porter import stem

_TOKEN_RE = re.compile(r"[a-z0-9]+")


def _load_stopwords() -> frozenset[str]:
    raw = resources.files("qexp").joinpath("data/stopwords.txt").read_text("utf-8")
    words = set()
    for line in raw.splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            words.add(line)
    return frozenset(words)


STOPWORDS = _load_stopwords()


def tokenize(text: str) -> list[str]:
    """NFC-normalize, lowercase, split on non-alphanumerics, drop stopwords, stem."""
    text = unicodedata.normalize("NFC", text).lower()
    return [stem(tok) for tok in _TOKEN_RE.findall(text) if tok not in STOPWORDS]
