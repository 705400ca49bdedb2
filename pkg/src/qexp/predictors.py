"""Pre-retrieval predictors of per-group exposure distributions.

The group exposure predictor (GEP) represents each group by the per-term
mean of its k largest tf-idf scores and dots that vector with a
collection-level query vector. The baselines adapt classic query
performance predictors (AvIDF, AvICTF, SCS, AvPMI) and the CORI
resource-selection belief to per-group scoring. Every predictor emits
raw group scores floored at zero and normalized to a distribution, so
outputs are directly comparable to realized exposure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

from .corpus import CollectionIndex
from .exposure import ExposureDistribution, normalize_exposure
from .retrieval import Query

#: replaces zero df/cf counts inside baseline logarithms
SMOOTH = 0.5


@dataclass(frozen=True)
class PredictorConfig:
    floor_idf: bool = True        # clamp negative idf values at zero
    query_idf: str = "bm25"       # "bm25" or "classic" collection idf
    cori_belief: float = 0.4      # default belief (the b parameter)
    cori_df_base: float = 50.0
    cori_df_scale: float = 150.0


DEFAULT_CONFIG = PredictorConfig()


@dataclass(frozen=True)
class PredictorOutput:
    predictor: str
    category: str
    groups: tuple[str, ...]
    raw_scores: tuple[float, ...]
    distribution: ExposureDistribution

    def to_dict(self, query_id: str | None = None) -> dict:
        return {
            "query_id": query_id,
            "category": self.category,
            "predictor": self.predictor,
            "groups": list(self.groups),
            "distribution": list(self.distribution.values),
            "degenerate": self.distribution.degenerate,
        }


def _finish(name: str, category, raw: Mapping[str, float]) -> PredictorOutput:
    """Floor raw scores at zero and normalize them into a distribution."""
    floored = {g: max(0.0, raw[g]) for g in category.groups}
    dist = normalize_exposure(category.name, category.groups, floored)
    return PredictorOutput(
        name,
        category.name,
        category.groups,
        tuple(raw[g] for g in category.groups),
        dist,
    )


def _require_query(query: Query) -> None:
    if not query.terms:
        raise ValueError("cannot predict for an empty query")


# --------------------------------- GEP -------------------------------------

def group_idf(
    index: CollectionIndex,
    term: str,
    category: str,
    group: str,
    config: PredictorConfig = DEFAULT_CONFIG,
) -> float:
    """log2((|d_g| - df_g + 0.5) / (df_g + 0.5)), floored by default."""
    n_g = index.group_doc_count(category, group)
    df_g, _ = index.group_term_counts(term, category, group)
    value = math.log2((n_g - df_g + SMOOTH) / (df_g + SMOOTH))
    return max(0.0, value) if config.floor_idf else value


def gep_group_term_score(
    index: CollectionIndex,
    term: str,
    category: str,
    group: str,
    k: int,
    config: PredictorConfig = DEFAULT_CONFIG,
) -> float:
    """Mean of the k largest tf-idf scores of the group's documents.

    Terms appearing in fewer than k group documents are padded with
    zeros, so a single high-scoring document cannot dominate: one
    document can occupy only one ranking position.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    stats = index.group_stats(term, category, group)
    if stats.df == 0:
        return 0.0
    idf = group_idf(index, term, category, group, config)
    scores = sorted((tf * idf for tf in stats.postings.values()), reverse=True)
    return sum(scores[:k]) / k


def gep_query_vector(
    index: CollectionIndex,
    query: Query,
    config: PredictorConfig = DEFAULT_CONFIG,
) -> dict[str, float]:
    """qtf * collection idf per distinct query term; unindexed terms get 0."""
    out: dict[str, float] = {}
    n = index.num_docs
    for term, qtf in query.qtf().items():
        df = index.term_stats(term).df
        if df == 0:
            out[term] = 0.0
            continue
        if config.query_idf == "bm25":
            idf = math.log2((n - df + SMOOTH) / (df + SMOOTH))
        elif config.query_idf == "classic":
            idf = math.log2(n / df)
        else:
            raise ValueError(f"unknown query idf variant {config.query_idf!r}")
        if config.floor_idf:
            idf = max(0.0, idf)
        out[term] = qtf * idf
    return out


def predict_gep(
    index: CollectionIndex,
    query: Query,
    category: str,
    k: int = 100,
    config: PredictorConfig = DEFAULT_CONFIG,
) -> PredictorOutput:
    """Dot product of each group's top-k tf-idf vector with the query vector."""
    _require_query(query)
    cat = index.category(category)
    qvec = gep_query_vector(index, query, config)
    raw = {}
    for group in cat.groups:
        raw[group] = sum(
            gep_group_term_score(index, term, category, group, k, config) * qw
            for term, qw in qvec.items()
            if qw != 0.0
        )
    return _finish("gep", cat, raw)


# ------------------------------- baselines ---------------------------------

def _group_sizes(index, category, group) -> tuple[int, int]:
    return (
        index.group_doc_count(category, group),
        index.group_token_count(category, group),
    )


def predict_avidf(
    index: CollectionIndex,
    query: Query,
    category: str,
    config: PredictorConfig = DEFAULT_CONFIG,
) -> PredictorOutput:
    """Mean log2(N_g / df_g) over query terms: average term specificity."""
    _require_query(query)
    cat = index.category(category)
    qtf = query.qtf()
    total = sum(qtf.values())
    raw = {}
    for group in cat.groups:
        n_g, _ = _group_sizes(index, category, group)
        if n_g == 0 or total == 0.0:
            raw[group] = 0.0
            continue
        acc = 0.0
        for term, w in qtf.items():
            df_g, _ = index.group_term_counts(term, category, group)
            acc += w * math.log2(n_g / (df_g if df_g > 0 else SMOOTH))
        raw[group] = acc / total
    return _finish("avidf", cat, raw)


def predict_avictf(
    index: CollectionIndex,
    query: Query,
    category: str,
    config: PredictorConfig = DEFAULT_CONFIG,
) -> PredictorOutput:
    """Mean log2(tokens_g / cf_g) over query terms."""
    _require_query(query)
    cat = index.category(category)
    qtf = query.qtf()
    total = sum(qtf.values())
    raw = {}
    for group in cat.groups:
        _, tokens_g = _group_sizes(index, category, group)
        if tokens_g == 0 or total == 0.0:
            raw[group] = 0.0
            continue
        acc = 0.0
        for term, w in qtf.items():
            _, cf_g = index.group_term_counts(term, category, group)
            acc += w * math.log2(tokens_g / (cf_g if cf_g > 0 else SMOOTH))
        raw[group] = acc / total
    return _finish("avictf", cat, raw)


def predict_scs(
    index: CollectionIndex,
    query: Query,
    category: str,
    config: PredictorConfig = DEFAULT_CONFIG,
) -> PredictorOutput:
    """KL of the query language model from each group's language model."""
    _require_query(query)
    cat = index.category(category)
    qtf = query.qtf()
    total = sum(qtf.values())
    raw = {}
    for group in cat.groups:
        _, tokens_g = _group_sizes(index, category, group)
        if tokens_g == 0 or total == 0.0:
            raw[group] = 0.0
            continue
        acc = 0.0
        for term, w in qtf.items():
            p_q = w / total
            if p_q == 0.0:
                continue
            _, cf_g = index.group_term_counts(term, category, group)
            p_c = (cf_g if cf_g > 0 else SMOOTH) / tokens_g
            acc += p_q * math.log2(p_q / p_c)
        raw[group] = acc
    return _finish("scs", cat, raw)


def predict_avpmi(
    index: CollectionIndex,
    query: Query,
    category: str,
    config: PredictorConfig = DEFAULT_CONFIG,
) -> PredictorOutput:
    """Mean pointwise mutual information over unordered query-term pairs.

    Probabilities are smoothed document-occurrence fractions within the
    group (counts + 0.5), so never-co-occurring terms stay finite.
    Queries with fewer than two distinct terms fall back to AvIDF.
    """
    _require_query(query)
    cat = index.category(category)
    terms = list(dict.fromkeys(query.terms))
    if len(terms) < 2:
        fallback = predict_avidf(index, query, category, config)
        return PredictorOutput(
            "avpmi", fallback.category, fallback.groups,
            fallback.raw_scores, fallback.distribution,
        )
    pairs = [(terms[i], terms[j]) for i in range(len(terms)) for j in range(i + 1, len(terms))]
    raw = {}
    for group in cat.groups:
        n_g, _ = _group_sizes(index, category, group)
        if n_g == 0:
            raw[group] = 0.0
            continue
        acc = 0.0
        for t1, t2 in pairs:
            df1, _ = index.group_term_counts(t1, category, group)
            df2, _ = index.group_term_counts(t2, category, group)
            joint = _joint_df(index, t1, t2, category, group)
            p1 = (df1 + SMOOTH) / n_g
            p2 = (df2 + SMOOTH) / n_g
            p12 = (joint + SMOOTH) / n_g
            acc += math.log2(p12 / (p1 * p2))
        raw[group] = acc / len(pairs)
    return _finish("avpmi", cat, raw)


def _joint_df(index, t1, t2, category, group) -> int:
    """Number of the group's documents containing both terms."""
    p1 = index.term_stats(t1).postings
    p2 = index.term_stats(t2).postings
    if len(p2) < len(p1):
        p1, p2 = p2, p1
    count = 0
    for doc_id in p1:
        if doc_id in p2 and index.doc_group(doc_id, category) == group:
            count += 1
    return count


def predict_cori(
    index: CollectionIndex,
    query: Query,
    category: str,
    config: PredictorConfig = DEFAULT_CONFIG,
) -> PredictorOutput:
    """Mean CORI belief per group, treating each group as a collection.

    belief(t|g) = b + (1-b) * T * I with
    T = df_g / (df_g + 50 + 150 * cw_g / mean_cw) and
    I = ln((|G|+0.5)/gf(t)) / ln(|G|+1), gf(t) counting the groups that
    contain t. Terms in no group are skipped; if every term is skipped
    the output degenerates to uniform.
    """
    _require_query(query)
    cat = index.category(category)
    n_groups = len(cat.groups)
    tokens = {g: index.group_token_count(category, g) for g in cat.groups}
    mean_cw = sum(tokens.values()) / n_groups
    qtf = query.qtf()

    gf: dict[str, int] = {}
    for term in qtf:
        gf[term] = sum(
            1 for g in cat.groups if index.group_term_counts(term, category, g)[0] > 0
        )

    b = config.cori_belief
    raw = {}
    for group in cat.groups:
        acc = 0.0
        weight = 0.0
        for term, w in qtf.items():
            if gf[term] == 0:
                continue  # term absent from every group
            df_g, _ = index.group_term_counts(term, category, group)
            if mean_cw > 0:
                t_part = df_g / (
                    df_g + config.cori_df_base
                    + config.cori_df_scale * tokens[group] / mean_cw
                )
            else:
                t_part = 0.0
            i_part = math.log((n_groups + 0.5) / gf[term]) / math.log(n_groups + 1.0)
            acc += w * (b + (1.0 - b) * t_part * i_part)
            weight += w
        raw[group] = acc / weight if weight > 0 else 0.0
    return _finish("cori", cat, raw)


def predict_uniform(
    index: CollectionIndex,
    query: Query,
    category: str,
    config: PredictorConfig = DEFAULT_CONFIG,
) -> PredictorOutput:
    """Query-independent uniform prediction; a floor for real predictors."""
    _require_query(query)
    cat = index.category(category)
    n = len(cat.groups)
    dist = ExposureDistribution(cat.name, cat.groups, (1.0 / n,) * n)
    return PredictorOutput("uniform", cat.name, cat.groups, (1.0,) * n, dist)


# ------------------------------- registry ----------------------------------

PredictorFn = Callable[[CollectionIndex, Query, str], PredictorOutput]

BASELINES = ("scs", "avidf", "avictf", "avpmi", "cori")
PREDICTORS = ("gep",) + BASELINES + ("uniform",)


def make_predictor(
    name: str,
    k: int = 100,
    config: PredictorConfig = DEFAULT_CONFIG,
) -> PredictorFn:
    """Bind a registered predictor name to a (index, query, category) callable."""
    if name == "gep":
        return lambda index, query, category: predict_gep(index, query, category, k, config)
    simple = {
        "avidf": predict_avidf,
        "avictf": predict_avictf,
        "scs": predict_scs,
        "avpmi": predict_avpmi,
        "cori": predict_cori,
        "uniform": predict_uniform,
    }
    if name not in simple:
        raise ValueError(f"unknown predictor {name!r}")
    fn = simple[name]
    return lambda index, query, category: fn(index, query, category, config)


def make_predictors(
    names: Sequence[str] | Iterable[str],
    k: int = 100,
    config: PredictorConfig = DEFAULT_CONFIG,
) -> dict[str, PredictorFn]:
    return {name: make_predictor(name, k, config) for name in names}
