"""Lexical first-pass retrieval: BM25 and TF-IDF scoring with top-k ranking.

Scores are weighted sums over query term occurrences, so a duplicated
query term contributes exactly twice. Documents scoring zero are never
retrieved, and ties are broken by ascending doc_id for reproducibility.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

from .corpus import CollectionIndex
from .text import tokenize


@dataclass(frozen=True)
class Query:
    terms: tuple[str, ...]
    weights: tuple[float, ...]
    query_id: str | None = None

    def __post_init__(self):
        if len(self.terms) != len(self.weights):
            raise ValueError("terms and weights must have the same length")
        if any(w < 0 for w in self.weights):
            raise ValueError("query weights must be nonnegative")

    @classmethod
    def from_terms(cls, terms: Iterable[str], query_id: str | None = None) -> "Query":
        terms = tuple(terms)
        return cls(terms, (1.0,) * len(terms), query_id)

    @classmethod
    def from_text(cls, text: str, query_id: str | None = None) -> "Query":
        return cls.from_terms(tokenize(text), query_id)

    def qtf(self) -> dict[str, float]:
        """Total weight per distinct term, in first-occurrence order."""
        out: dict[str, float] = {}
        for t, w in zip(self.terms, self.weights):
            out[t] = out.get(t, 0.0) + w
        return out

    @property
    def total_weight(self) -> float:
        return sum(self.weights)


@dataclass(frozen=True)
class Ranking:
    query_id: str | None
    entries: tuple[tuple[str, float], ...]  # (doc_id, score), best first
    k: int

    def __post_init__(self):
        if self.k < 0:
            raise ValueError("k must be >= 0")
        if len(self.entries) > self.k:
            raise ValueError("ranking longer than its requested depth k")
        scores = [s for _, s in self.entries]
        if any(a < b for a, b in zip(scores, scores[1:])):
            raise ValueError("ranking scores must be non-increasing")
        ids = [d for d, _ in self.entries]
        if len(set(ids)) != len(ids):
            raise ValueError("ranking contains duplicate doc_ids")

    @property
    def doc_ids(self) -> tuple[str, ...]:
        return tuple(d for d, _ in self.entries)

    def top(self, k: int) -> "Ranking":
        return Ranking(self.query_id, self.entries[:k], k)


@dataclass(frozen=True)
class BM25Params:
    k1: float = 1.2
    b: float = 0.75


def idf_bm25(index: CollectionIndex, term: str) -> float:
    """Robertson idf log2((N-df+0.5)/(df+0.5)), floored at zero."""
    df = index.term_stats(term).df
    if df == 0:
        return 0.0
    return max(0.0, math.log2((index.num_docs - df + 0.5) / (df + 0.5)))


def idf_classic(index: CollectionIndex, term: str) -> float:
    """log2(N/df), floored at zero; zero for unindexed terms."""
    df = index.term_stats(term).df
    if df == 0:
        return 0.0
    return max(0.0, math.log2(index.num_docs / df))


def score_bm25(
    index: CollectionIndex,
    doc_id: str,
    query: Query,
    params: BM25Params = BM25Params(),
) -> float:
    dl = index.doc_length(doc_id)
    avgdl = index.avg_doc_len
    norm = params.k1 * (1.0 - params.b + params.b * dl / avgdl)
    score = 0.0
    for term, weight in zip(query.terms, query.weights):
        tf = index.tf(term, doc_id)
        if tf == 0 or weight == 0.0:
            continue
        score += weight * idf_bm25(index, term) * tf * (params.k1 + 1.0) / (tf + norm)
    return score


def score_tfidf(index: CollectionIndex, doc_id: str, query: Query) -> float:
    index.doc_length(doc_id)  # raises on unknown doc
    score = 0.0
    for term, weight in zip(query.terms, query.weights):
        tf = index.tf(term, doc_id)
        if tf == 0 or weight == 0.0:
            continue
        score += weight * tf * idf_classic(index, term)
    return score


RANKERS = {
    "bm25": score_bm25,
    "tfidf": score_tfidf,
}


def rank(
    index: CollectionIndex,
    query: Query,
    model: str = "bm25",
    k: int = 100,
    params: BM25Params | None = None,
) -> Ranking:
    """Top-k documents by score; zero-score documents are excluded."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if not query.terms:
        raise ValueError("cannot rank an empty query")
    if model not in RANKERS:
        raise ValueError(f"unknown ranking model {model!r}")

    candidates: set[str] = set()
    for term, weight in zip(query.terms, query.weights):
        if weight > 0.0:
            candidates.update(index.term_stats(term).postings)

    if model == "bm25":
        scorer = lambda d: score_bm25(index, d, query, params or BM25Params())
    else:
        scorer = lambda d: score_tfidf(index, d, query)

    scored = [(d, scorer(d)) for d in candidates]
    scored = [(d, s) for d, s in scored if s > 0.0]
    scored.sort(key=lambda ds: (-ds[1], ds[0]))
    return Ranking(query.query_id, tuple(scored[:k]), k)


# ------------------------------ TREC run files ------------------------------

def write_run_file(path, rankings: Iterable[Ranking], tag: str = "qexp") -> None:
    """`qid Q0 docid rank score tag`, one line per retrieved document."""
    with open(path, "w", encoding="utf-8") as fh:
        for ranking in rankings:
            qid = ranking.query_id or "0"
            for pos, (doc_id, score) in enumerate(ranking.entries, start=1):
                fh.write(f"{qid} Q0 {doc_id} {pos} {score:.6f} {tag}\n")


def read_run_file(path) -> dict[str, Ranking]:
    """Parse a TREC run file into one Ranking per query id."""
    per_query: dict[str, list[tuple[int, str, float]]] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            parts = line.split()
            if len(parts) != 6:
                raise ValueError(
                    f"{path}: line {lineno}: expected 6 whitespace-separated fields"
                )
            qid, _, doc_id, pos, score, _ = parts
            try:
                per_query.setdefault(qid, []).append((int(pos), doc_id, float(score)))
            except ValueError:
                raise ValueError(f"{path}: line {lineno}: bad rank or score") from None
    out = {}
    for qid, rows in per_query.items():
        rows.sort(key=lambda r: (r[0], r[1]))
        entries = tuple((doc_id, score) for _, doc_id, score in rows)
        out[qid] = Ranking(qid, entries, k=len(entries))
    return out
