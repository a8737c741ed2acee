import math

import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

import oracles
from xrank.corpus_io import RankedList, RelevanceStore
from xrank.errors import IntegrityError, UndefinedCorrelationError
from xrank.metrics import (EvalReport, consistency_pool, cosine_similarity, jaccard_spans, kendall_tau, mer, mrc,
                           ndcg_at_k, ndcg_defined, pearson_r)

WORDS = ["sun", "moon", "star", "the", "and", "sky", "Sun"]


def test_tau_known_values():
    assert kendall_tau(["a", "b", "c"], ["a", "b", "c"]).tau == 1.0
    assert kendall_tau(["a", "b", "c"], ["c", "b", "a"]).tau == -1.0
    assert kendall_tau(["a", "b", "c"], ["b", "a", "c"]).tau == pytest.approx(1 / 3)


def test_tau_b_with_ties():
    r = kendall_tau({"a": 3, "b": 2, "c": 1}, {"a": 1, "b": 1, "c": 0})
    assert r.tau == pytest.approx(2 / math.sqrt(3 * 2))
    assert (r.concordant, r.discordant, r.ties_b) == (2, 0, 1)


def test_tau_errors():
    with pytest.raises(UndefinedCorrelationError):
        kendall_tau(["a"], ["a"])
    with pytest.raises(UndefinedCorrelationError):
        kendall_tau({"a": 1, "b": 1}, {"a": 1, "b": 2})
    with pytest.raises(ValueError):
        kendall_tau(["a", "b"], ["a", "c"])


@settings(max_examples=200, deadline=None)
@given(st.dictionaries(st.sampled_from("abcdefg"), st.tuples(st.integers(0, 3), st.integers(0, 3)),
                       min_size=2))
def test_tau_matches_oracle(pairs):
    a = {k: v[0] for k, v in pairs.items()}
    b = {k: v[1] for k, v in pairs.items()}
    assume(len(set(a.values())) > 1 and len(set(b.values())) > 1)
    t = kendall_tau(a, b).tau
    assert abs(t - oracles.tau_b(a, b)) < 1e-12
    assert -1 <= t <= 1
    assert abs(kendall_tau(b, a).tau - t) < 1e-15


def test_ndcg_examples():
    assert ndcg_at_k(["a", "b"], {"b": 1}, 2) == pytest.approx(1 / math.log2(3))
    assert ndcg_at_k(["b", "a"], {"b": 1}, 2) == 1.0
    assert ndcg_at_k(["a"], {"x": 0}, 5) == 0.0
    assert not ndcg_defined({"x": 0})
    with pytest.raises(ValueError):
        ndcg_at_k(["a"], {}, 0)


@settings(max_examples=200, deadline=None)
@given(st.permutations(list("abcde")), st.dictionaries(st.sampled_from("abcdef"), st.integers(0, 3)),
       st.integers(1, 6))
def test_ndcg_matches_oracle(order, grades, k):
    v = ndcg_at_k(order, grades, k)
    assert abs(v - oracles.ndcg(order, grades, k)) < 1e-12
    assert 0 <= v <= 1 + 1e-12


def test_cosine_examples():
    assert cosine_similarity("a b", "a c", stopwords=()) == pytest.approx(0.5)
    assert cosine_similarity("Sun sky", "sky sun") == pytest.approx(1.0)
    assert cosine_similarity("the and", "sun") == 0.0
    assert cosine_similarity("", "sun") == 0.0


@settings(max_examples=200, deadline=None)
@given(st.lists(st.sampled_from(WORDS), max_size=8), st.lists(st.sampled_from(WORDS), max_size=8))
def test_cosine_matches_oracle(a, b):
    ta, tb = " ".join(a), " ".join(b)
    c = cosine_similarity(ta, tb)
    assert abs(c - oracles.cosine(ta, tb)) < 1e-12
    assert 0 <= c <= 1
    assert cosine_similarity(tb, ta) == c


def test_jaccard_examples():
    assert jaccard_spans(["sun moon"], ["moon star"]) == pytest.approx(1 / 3)
    assert jaccard_spans(["sun"], []) == 0.0
    assert jaccard_spans(["sun"], None) == 0.0
    assert jaccard_spans(["Sun"], ["sun"]) == 1.0


@settings(max_examples=200, deadline=None)
@given(st.lists(st.text(alphabet="ab c", max_size=6), max_size=3),
       st.lists(st.text(alphabet="ab cd", max_size=6), max_size=3))
def test_jaccard_matches_oracle(e, h):
    assert abs(jaccard_spans(e, h) - oracles.jaccard(e, h)) < 1e-12


def _store(passages):
    st_ = RelevanceStore()
    st_.relevant_passages.update(passages)
    return st_


def test_mer_three_quarters():
    runs = {"q": RankedList.from_scores("q", [("d1", 2.0), ("d2", 1.0)])}
    expl = {("q", "d1"): ["sun moon", "star"], ("q", "d2"): ["sun", "sky"]}
    store = _store({("q", "d1"): ["sun moon", "star"], ("q", "d2"): ["sun"]})
    # slots: 1 + 1 + 1 + 0 over m*k = 4
    assert mer(expl, store, k=2, m=2, runs=runs).mer == pytest.approx(3 / 4)


def test_mer_missing_and_padding():
    runs = {"q": RankedList.from_scores("q", [("d1", 2.0)])}
    store = _store({("q", "d1"): ["sun"]})
    assert mer({("q", "d1"): ["sun"]}, store, k=2, m=2, runs=runs).mer == pytest.approx(1 / 4)
    assert mer({("q", "d1"): ["sun"]}, RelevanceStore(), k=1, m=1, runs=runs).mer == 0.0
    with pytest.raises(IntegrityError):
        mer({}, store, k=1, m=1, runs=runs)


def test_mer_matches_oracle():
    runs = {"q1": RankedList.from_scores("q1", [("a", 3.0), ("b", 2.0), ("c", 1.0)]),
            "q2": RankedList.from_scores("q2", [("a", 1.0)])}
    expl = {("q1", "a"): ["sun moon", "sky"], ("q1", "b"): ["star star sun"], ("q1", "c"): [],
            ("q2", "a"): ["moon"]}
    passages = {("q1", "a"): ["moon sky sun", "star"], ("q1", "b"): ["sun"], ("q2", "a"): ["moon and sun"]}
    got = mer(expl, _store(passages), k=2, m=2, runs=runs).mer
    want = oracles.mer({q: r.doc_ids for q, r in runs.items()}, expl, passages, 2, 2)
    assert abs(got - want) < 1e-12


def test_mrc_identity_and_exclusions():
    lists = {"q1": RankedList.from_scores("q1", [("a", 3.0), ("b", 2.0), ("c", 1.0)]),
             "q2": RankedList.from_scores("q2", [("x", 1.0), ("y", 0.5)])}
    same = {("q1", "a"): 9.0, ("q1", "b"): 5.0, ("q1", "c"): 1.0, ("q2", "x"): 1.0, ("q2", "y"): None}
    res = mrc(lists, same)
    assert res.mrc == 1.0
    assert res.excluded_queries == ["q2"]
    assert res.excluded_docs == {"q2": ["y"]}
    with pytest.raises(IntegrityError):
        mrc(lists, {("q1", "a"): 1.0})


def test_mrc_tie_break_by_doc_id():
    lists = {"q": RankedList.from_scores("q", [("b", 2.0), ("a", 1.0)])}
    res = mrc(lists, {("q", "a"): 1.0, ("q", "b"): 1.0})
    assert res.mrc == -1.0


def test_pearson():
    assert pearson_r([1, 2, 3], [2, 4, 6]) == pytest.approx(1.0)
    with pytest.raises(UndefinedCorrelationError):
        pearson_r([1, 1], [1, 2])


def test_consistency_pool():
    res = consistency_pool({"d1": [0.5, 1.0], "d2": {"x": 0.0}, "d3": []})
    assert res.per_doc == {"d1": 0.75, "d2": 0.0}
    assert res.s_c == pytest.approx(0.375)
    assert res.excluded == 1


def test_report_round_trip():
    rep = EvalReport(per_query={"q1": {"ndcg": 1.0, "mrc": 0.5, "n_docs": 3},
                                "q2": {"ndcg": 0.0, "mrc": None, "n_docs": 2}}, params={"k": 3})
    agg = rep.compute_aggregates()
    assert agg["ndcg"] == 0.5 and agg["mrc"] == 0.5 and agg["n_docs"] == 5
    back = EvalReport.from_dict(rep.to_dict())
    assert back.to_json() == rep.to_json()
    tsv = rep.to_tsv().splitlines()
    assert len(tsv) == 4
