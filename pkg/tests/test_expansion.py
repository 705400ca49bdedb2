import math

import pytest
from hypothesis import given, settings, strategies as st

from qexp.corpus import Category, Document, build_index
from qexp.expansion import ExpansionConfig, expand_klq, expand_rm3, kl_term_weight
from qexp.retrieval import Query, Ranking


@pytest.fixture
def feedback_index():
    docs = [
        Document("f1", "t000 t001", {"c": "g"}),
        Document("f2", "t000 t002 t002", {"c": "g"}),
        Document("f3", "t003", {"c": "g"}),
        Document("x1", "t004 t004 t004 t005", {"c": "g"}),
        Document("x2", "t005 t006", {"c": "g"}),
    ]
    return build_index(docs, [Category("c", ("g",))])


def _ranking(entries):
    return Ranking("q", tuple(entries), k=len(entries))


FEEDBACK = [("f1", 10.0), ("f2", 5.0), ("f3", 0.0)]


class TestRM3:
    def test_lambda_zero_is_query_model(self, feedback_index):
        q = Query.from_terms(["t000", "t005", "t000"], query_id="q")
        res = expand_rm3(
            feedback_index, q, _ranking(FEEDBACK), ExpansionConfig(3, 10, 0.0)
        )
        assert res.expanded
        assert set(res.query.terms) == {"t000", "t005"}
        weights = dict(zip(res.query.terms, res.query.weights))
        assert weights["t000"] == pytest.approx(2 / 3)
        assert weights["t005"] == pytest.approx(1 / 3)

    def test_lambda_one_single_doc(self, feedback_index):
        q = Query.from_terms(["t005"], query_id="q")
        res = expand_rm3(
            feedback_index, q, _ranking([("f2", 5.0)]), ExpansionConfig(1, 10, 1.0)
        )
        weights = dict(zip(res.query.terms, res.query.weights))
        # f2 = {t000: 1/3, t002: 2/3}; original t005 kept with zero weight
        assert weights["t002"] == pytest.approx(2 / 3)
        assert weights["t000"] == pytest.approx(1 / 3)
        assert weights["t005"] == 0.0

    def test_hand_enumerated_relevance_model(self, feedback_index):
        # priors (min-max): f1=1, f2=0.5, f3=0
        # rm mass: t000 = 1*(1/2) + 0.5*(1/3); t001 = 1/2; t002 = 0.5*(2/3)
        q = Query.from_terms(["t000", "t005"], query_id="q")
        res = expand_rm3(
            feedback_index, q, _ranking(FEEDBACK), ExpansionConfig(3, 10, 0.5)
        )
        rm = {"t000": (0.5 + 0.5 / 3) / 1.5, "t001": 0.5 / 1.5, "t002": (1 / 3) / 1.5}
        expected = {
            "t000": 0.5 * 0.5 + 0.5 * rm["t000"],
            "t005": 0.5 * 0.5,
            "t001": 0.5 * rm["t001"],
            "t002": 0.5 * rm["t002"],
        }
        total = sum(expected.values())
        weights = dict(zip(res.query.terms, res.query.weights))
        assert set(weights) == set(expected)
        for term, w in expected.items():
            assert weights[term] == pytest.approx(w / total, abs=1e-12)

    def test_truncation_to_fb_terms(self, feedback_index):
        q = Query.from_terms(["t005"], query_id="q")
        res = expand_rm3(
            feedback_index, q, _ranking(FEEDBACK), ExpansionConfig(3, 1, 0.5)
        )
        # only the single strongest relevance-model term joins the original
        assert set(res.query.terms) == {"t005", "t000"}

    def test_empty_ranking_passthrough(self, feedback_index):
        q = Query.from_terms(["t000"], query_id="q")
        res = expand_rm3(feedback_index, q, _ranking([]))
        assert not res.expanded
        assert res.query == q

    def test_empty_query_rejected(self, feedback_index):
        with pytest.raises(ValueError):
            expand_rm3(feedback_index, Query.from_terms([]), _ranking(FEEDBACK))


class TestKLQ:
    def test_feedback_only_term_positive(self):
        assert kl_term_weight(0.5, 0.1) > 0

    def test_equal_rates_zero_weight(self):
        assert kl_term_weight(0.25, 0.25) == 0.0

    def test_whole_corpus_as_feedback_never_expands(self):
        # P(t|F) == P(t|C) for every term, so no candidate scores positive
        docs = [
            Document("f1", "t000 t001", {"c": "g"}),
            Document("f2", "t002", {"c": "g"}),
        ]
        idx = build_index(docs, [Category("c", ("g",))])
        q = Query.from_terms(["t009"], query_id="q")
        res = expand_klq(idx, q, _ranking([("f1", 2.0), ("f2", 1.0)]), ExpansionConfig(2, 10))
        assert not res.expanded
        assert res.query == q

    def test_matches_enumerate_and_sort_oracle(self, feedback_index):
        q = Query.from_terms(["t005"], query_id="q")
        config = ExpansionConfig(3, 2, 0.5)
        res = expand_klq(feedback_index, q, _ranking(FEEDBACK), config)
        assert res.expanded

        # oracle: score every feedback term straight from the formula
        fb_cf = {"t000": 2, "t001": 1, "t002": 2, "t003": 1}
        fb_tokens = 6
        total_tokens = feedback_index.total_tokens
        scores = {}
        for term, cf_f in fb_cf.items():
            p_f = cf_f / fb_tokens
            p_c = feedback_index.term_stats(term).cf / total_tokens
            w = p_f * math.log2(p_f / p_c)
            if w > 0:
                scores[term] = w
        top = sorted(scores.items(), key=lambda tw: (-tw[1], tw[0]))[:2]

        weights = dict(zip(res.query.terms, res.query.weights))
        assert weights["t005"] == pytest.approx(0.5)  # original mass preserved 1:1
        expansion_mass = sum(w for _, w in top)
        for term, w in top:
            assert weights[term] == pytest.approx(0.5 * w / expansion_mass)
        assert set(res.query.terms) == {"t005"} | {t for t, _ in top}

    def test_original_relative_weights_preserved(self, feedback_index):
        q = Query(("t005", "t004"), (3.0, 1.0), query_id="q")
        res = expand_klq(feedback_index, q, _ranking(FEEDBACK), ExpansionConfig(3, 10))
        weights = dict(zip(res.query.terms, res.query.weights))
        assert weights["t005"] == pytest.approx(3 * weights["t004"])
        assert weights["t005"] + weights["t004"] == pytest.approx(0.5)

    def test_empty_ranking_passthrough(self, feedback_index):
        q = Query.from_terms(["t000"], query_id="q")
        res = expand_klq(feedback_index, q, _ranking([]))
        assert not res.expanded and res.query == q


class TestExpansionInvariants:
    @settings(max_examples=30, deadline=None)
    @given(st.floats(0.0, 1.0), st.integers(1, 12))
    def test_weights_nonnegative_finite_sum_one(self, lam, fb_terms, ):
        docs = [
            Document("f1", "t000 t001", {"c": "g"}),
            Document("f2", "t000 t002 t002", {"c": "g"}),
            Document("f3", "t003", {"c": "g"}),
            Document("x1", "t004 t004 t004 t005", {"c": "g"}),
        ]
        idx = build_index(docs, [Category("c", ("g",))])
        q = Query.from_terms(["t000", "t005"], query_id="q")
        for expander in (expand_rm3, expand_klq):
            res = expander(idx, q, _ranking(FEEDBACK), ExpansionConfig(3, fb_terms, lam))
            assert all(w >= 0 and math.isfinite(w) for w in res.query.weights)
            assert sum(res.query.weights) == pytest.approx(1.0) or not res.expanded
            assert set(q.terms) <= set(res.query.terms)

    def test_large_fb_terms_no_truncation_artifacts(self, feedback_index):
        q = Query.from_terms(["t005"], query_id="q")
        big = expand_klq(feedback_index, q, _ranking(FEEDBACK), ExpansionConfig(3, 1000))
        # every positive-weight candidate included
        positive = set()
        fb_cf = {"t000": 2, "t001": 1, "t002": 2, "t003": 1}
        for term, cf_f in fb_cf.items():
            p_f = cf_f / 6
            p_c = feedback_index.term_stats(term).cf / feedback_index.total_tokens
            if kl_term_weight(p_f, p_c) > 0:
                positive.add(term)
        assert set(big.query.terms) == {"t005"} | positive

    def test_config_validation(self):
        with pytest.raises(ValueError):
            ExpansionConfig(fb_docs=0)
        with pytest.raises(ValueError):
            ExpansionConfig(fb_terms=0)
        with pytest.raises(ValueError):
            ExpansionConfig(rm3_lambda=1.5)
