"""Labeled document corpus and the immutable collection index.

The index holds whole-collection term statistics plus, for every
(category, group) cell, the group-restricted document/token counts and
per-term document and collection frequencies. Categories partition the
corpus, so group statistics always sum back to the collection totals.
"""

from __future__ import annotations

import gzip
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

from .text import tokenize

INDEX_MAGIC = b"QEXPIDX"
INDEX_FORMAT_VERSION = 1

# Docs missing a label fall into one of these groups when the category
# defines it; otherwise the build rejects the document.
_UNKNOWN_GROUP_NAMES = ("unknown", "unk")


class CorpusError(ValueError):
    """Invalid corpus input (duplicate ids, missing labels, bad files)."""


@dataclass(frozen=True)
class Document:
    doc_id: str
    text: str
    labels: Mapping[str, str]


@dataclass(frozen=True)
class Category:
    name: str
    groups: tuple[str, ...]

    def __post_init__(self):
        if not self.groups:
            raise ValueError(f"category {self.name!r} has no groups")
        if len(set(self.groups)) != len(self.groups):
            raise ValueError(f"category {self.name!r} has duplicate group names")

    def index_of(self, group: str) -> int:
        try:
            return self.groups.index(group)
        except ValueError:
            raise KeyError(f"unknown group {group!r} in category {self.name!r}") from None


@dataclass(frozen=True)
class TermStats:
    df: int
    cf: int
    postings: Mapping[str, int]  # doc_id -> term frequency, build order

    def __post_init__(self):
        if self.df != len(self.postings):
            raise ValueError("df must equal the number of postings")
        if self.cf != sum(self.postings.values()):
            raise ValueError("cf must equal the sum of term frequencies")


_EMPTY_STATS = TermStats(0, 0, {})


class CollectionIndex:
    """Read-only term statistics over a labeled corpus.

    Built once by :func:`build_index`; treated as immutable afterwards,
    so it is safe to share across concurrent readers.
    """

    def __init__(self, categories, doc_ids, doc_lengths, doc_labels, postings):
        self._categories: dict[str, Category] = {c.name: c for c in categories}
        self._doc_ids: tuple[str, ...] = tuple(doc_ids)
        self._doc_lengths: dict[str, int] = dict(doc_lengths)
        self._doc_labels: dict[str, dict[str, str]] = doc_labels
        self._postings: dict[str, dict[str, int]] = postings
        self._doc_terms: dict[str, dict[str, int]] = {d: {} for d in self._doc_ids}
        for term, plist in postings.items():
            for doc_id, tf in plist.items():
                self._doc_terms[doc_id][term] = tf
        self._total_tokens = sum(self._doc_lengths.values())
        # per (category, group): document count, token count, term -> (df, cf)
        self._group_docs: dict[tuple[str, str], int] = {}
        self._group_tokens: dict[tuple[str, str], int] = {}
        self._group_terms: dict[tuple[str, str], dict[str, tuple[int, int]]] = {}
        for cat in categories:
            for grp in cat.groups:
                self._group_docs[(cat.name, grp)] = 0
                self._group_tokens[(cat.name, grp)] = 0
                self._group_terms[(cat.name, grp)] = {}
        for doc_id in self._doc_ids:
            for cat_name, grp in self._doc_labels[doc_id].items():
                key = (cat_name, grp)
                self._group_docs[key] += 1
                self._group_tokens[key] += self._doc_lengths[doc_id]
                terms = self._group_terms[key]
                for term, tf in self._doc_terms[doc_id].items():
                    df, cf = terms.get(term, (0, 0))
                    terms[term] = (df + 1, cf + tf)

    # ------------------------------- collection ----------------------------
    @property
    def num_docs(self) -> int:
        return len(self._doc_ids)

    @property
    def total_tokens(self) -> int:
        return self._total_tokens

    @property
    def avg_doc_len(self) -> float:
        return self._total_tokens / len(self._doc_ids)

    @property
    def doc_ids(self) -> tuple[str, ...]:
        return self._doc_ids

    @property
    def vocabulary(self):
        return self._postings.keys()

    @property
    def categories(self) -> tuple[Category, ...]:
        return tuple(self._categories.values())

    def category(self, name: str) -> Category:
        try:
            return self._categories[name]
        except KeyError:
            raise KeyError(f"unknown category {name!r}") from None

    def doc_length(self, doc_id: str) -> int:
        try:
            return self._doc_lengths[doc_id]
        except KeyError:
            raise KeyError(f"unknown document {doc_id!r}") from None

    def doc_terms(self, doc_id: str) -> Mapping[str, int]:
        try:
            return self._doc_terms[doc_id]
        except KeyError:
            raise KeyError(f"unknown document {doc_id!r}") from None

    def doc_group(self, doc_id: str, category: str) -> str:
        self.category(category)
        labels = self._doc_labels.get(doc_id)
        if labels is None:
            raise KeyError(f"unknown document {doc_id!r}")
        return labels[category]

    def term_stats(self, term: str) -> TermStats:
        plist = self._postings.get(term)
        if plist is None:
            return _EMPTY_STATS
        return TermStats(len(plist), sum(plist.values()), plist)

    def tf(self, term: str, doc_id: str) -> int:
        return self._postings.get(term, {}).get(doc_id, 0)

    # --------------------------------- groups ------------------------------
    def _group_key(self, category: str, group: str) -> tuple[str, str]:
        cat = self.category(category)
        cat.index_of(group)
        return (category, group)

    def group_doc_count(self, category: str, group: str) -> int:
        return self._group_docs[self._group_key(category, group)]

    def group_token_count(self, category: str, group: str) -> int:
        return self._group_tokens[self._group_key(category, group)]

    def group_term_counts(self, term: str, category: str, group: str) -> tuple[int, int]:
        """(df, cf) of a term within one group; (0, 0) when absent."""
        return self._group_terms[self._group_key(category, group)].get(term, (0, 0))

    def group_stats(self, term: str, category: str, group: str) -> TermStats:
        """Group-restricted term statistics; absence is not an error."""
        key = self._group_key(category, group)
        df, cf = self._group_terms[key].get(term, (0, 0))
        if df == 0:
            return _EMPTY_STATS
        plist = {
            doc_id: tf
            for doc_id, tf in self._postings[term].items()
            if self._doc_labels[doc_id][category] == group
        }
        return TermStats(df, cf, plist)

    # ------------------------------ persistence ----------------------------
    def save(self, path) -> None:
        payload = {
            "categories": [
                {"name": c.name, "groups": list(c.groups)} for c in self.categories
            ],
            "docs": [
                {
                    "id": d,
                    "length": self._doc_lengths[d],
                    "labels": self._doc_labels[d],
                }
                for d in self._doc_ids
            ],
            "postings": self._postings,
        }
        blob = gzip.compress(
            json.dumps(payload, sort_keys=True).encode("utf-8"), mtime=0
        )
        with open(path, "wb") as fh:
            fh.write(INDEX_MAGIC)
            fh.write(bytes([INDEX_FORMAT_VERSION]))
            fh.write(blob)

    @classmethod
    def load(cls, path) -> "CollectionIndex":
        data = Path(path).read_bytes()
        if not data.startswith(INDEX_MAGIC):
            raise CorpusError(f"{path}: not an index file (bad magic)")
        version = data[len(INDEX_MAGIC)]
        if version != INDEX_FORMAT_VERSION:
            raise CorpusError(
                f"{path}: unsupported index format version {version}"
            )
        payload = json.loads(gzip.decompress(data[len(INDEX_MAGIC) + 1 :]))
        categories = [
            Category(c["name"], tuple(c["groups"])) for c in payload["categories"]
        ]
        doc_ids = [d["id"] for d in payload["docs"]]
        doc_lengths = {d["id"]: d["length"] for d in payload["docs"]}
        doc_labels = {d["id"]: dict(d["labels"]) for d in payload["docs"]}
        return cls(categories, doc_ids, doc_lengths, doc_labels, payload["postings"])


def build_index(
    docs: Sequence[Document],
    categories: Sequence[Category],
    tokenizer: Callable[[str], list[str]] = tokenize,
) -> CollectionIndex:
    """Tokenize and index a corpus; deterministic for a given input order.

    Every document must carry a label for every category, and that label
    must name one of the category's groups. A missing label is tolerated
    only when the category itself defines an Unknown/Unk group, which
    then absorbs the document.
    """
    if not docs:
        raise CorpusError("empty corpus")
    if not categories:
        raise CorpusError("no categories configured")
    cats = {c.name: c for c in categories}
    if len(cats) != len(categories):
        raise CorpusError("duplicate category names")

    doc_ids: list[str] = []
    doc_lengths: dict[str, int] = {}
    doc_labels: dict[str, dict[str, str]] = {}
    postings: dict[str, dict[str, int]] = {}

    for doc in docs:
        if doc.doc_id in doc_lengths:
            raise CorpusError(f"duplicate doc_id {doc.doc_id!r}")
        labels: dict[str, str] = {}
        for cat in categories:
            group = doc.labels.get(cat.name)
            if group is None:
                group = _unknown_group(cat)
                if group is None:
                    raise CorpusError(
                        f"doc {doc.doc_id!r} has no label for category {cat.name!r}"
                    )
            elif group not in cat.groups:
                raise CorpusError(
                    f"doc {doc.doc_id!r}: unknown group {group!r} "
                    f"for category {cat.name!r}"
                )
            labels[cat.name] = group
        terms = tokenizer(doc.text)
        doc_ids.append(doc.doc_id)
        doc_lengths[doc.doc_id] = len(terms)
        doc_labels[doc.doc_id] = labels
        counts: dict[str, int] = {}
        for t in terms:
            counts[t] = counts.get(t, 0) + 1
        for t, tf in counts.items():
            postings.setdefault(t, {})[doc.doc_id] = tf

    return CollectionIndex(list(categories), doc_ids, doc_lengths, doc_labels, postings)


def _unknown_group(cat: Category) -> str | None:
    for g in cat.groups:
        if g.lower() in _UNKNOWN_GROUP_NAMES:
            return g
    return None


# ------------------------------- file loading ------------------------------

def load_corpus_jsonl(path) -> list[Document]:
    """One JSON object per line: {"doc_id": str, "text": str, "labels": {...}}."""
    docs = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"{path}: line {lineno}: malformed JSON ({exc.msg})")
            if not isinstance(obj, dict):
                raise CorpusError(f"{path}: line {lineno}: expected a JSON object")
            try:
                doc = Document(
                    doc_id=str(obj["doc_id"]),
                    text=str(obj["text"]),
                    labels={str(k): str(v) for k, v in obj.get("labels", {}).items()},
                )
            except KeyError as exc:
                raise CorpusError(f"{path}: line {lineno}: missing field {exc}")
            docs.append(doc)
    return docs


def load_categories_json(path) -> list[Category]:
    """A category object {name, groups[]} or a list of them."""
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    if isinstance(data, dict):
        data = [data]
    cats = []
    for obj in data:
        try:
            cats.append(Category(str(obj["name"]), tuple(str(g) for g in obj["groups"])))
        except KeyError as exc:
            raise CorpusError(f"{path}: category definition missing field {exc}")
    return cats


def save_corpus_jsonl(path, docs: Iterable[Document]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for doc in docs:
            fh.write(
                json.dumps(
                    {"doc_id": doc.doc_id, "text": doc.text, "labels": dict(doc.labels)},
                    sort_keys=True,
                )
                + "\n"
            )


def save_categories_json(path, categories: Iterable[Category]) -> None:
    data = [{"name": c.name, "groups": list(c.groups)} for c in categories]
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")
