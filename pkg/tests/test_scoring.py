import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from xrank.corpus_io import Document, Query
from xrank.errors import IndexFormatError, ScorerError, StateError
from xrank.scoring import (BM25Params, BM25Scorer, FunctionScorer, TermCountScorer, bm25_score, build_index,
                           load_index, retrieve_topk, save_index, score_batch, score_document_chunked,
                           score_texts)
from xrank.segmentation import chunk_sentences

VOCAB = ["apple", "pear", "plum", "fig", "kiwi", "lime"]


def _docs(texts):
    return [Document(f"d{i}", t) for i, t in enumerate(texts)]


def test_postings_and_avgdl():
    idx = build_index(_docs(["a b", "a"]))
    assert idx.postings == {"a": [("d0", 1), ("d1", 1)], "b": [("d0", 1)]}
    assert idx.avgdl == 1.5
    assert idx.N == 2


def test_single_doc_closed_form():
    # idf = ln((1 - 1 + 0.5) / (1 + 0.5) + 1) = ln(4/3); the tf part is 2.2/2.2 = 1
    idx = build_index(_docs(["a"]))
    assert bm25_score(idx, BM25Params(), "a", "a") == pytest.approx(math.log(4 / 3), abs=1e-12)


def test_absent_term_contributes_zero():
    idx = build_index(_docs(["a b", "c"]))
    assert bm25_score(idx, BM25Params(), "a zzz", "a b") == bm25_score(idx, BM25Params(), "a", "a b")


def test_b_is_irrelevant_at_average_length():
    idx = build_index(_docs(["a b", "a c"]))
    s1 = bm25_score(idx, BM25Params(b=0.3), "a", "a b")
    s2 = bm25_score(idx, BM25Params(b=0.6), "a", "a b")
    assert s1 == pytest.approx(s2, abs=1e-12)


def test_empty_index_is_state_error():
    with pytest.raises(StateError):
        bm25_score(build_index([]), BM25Params(), "a", "a")


def test_bad_params():
    with pytest.raises(ValueError):
        BM25Params(k1=-1)
    with pytest.raises(ValueError):
        BM25Params(b=1.5)


@settings(max_examples=150, deadline=None)
@given(st.lists(st.lists(st.sampled_from(VOCAB), max_size=8), min_size=1, max_size=7),
       st.lists(st.sampled_from(VOCAB), min_size=1, max_size=4))
def test_bm25_matches_oracle(doc_words, q_words):
    texts = [" ".join(w) for w in doc_words]
    idx = build_index(_docs(texts))
    q = " ".join(q_words)
    params = BM25Params()
    for t in texts:
        assert abs(bm25_score(idx, params, q, t) - oracles.bm25(texts, q, t)) < 1e-12
    ranked = retrieve_topk(idx, params, Query("q", q), 100)
    brute = sorted(((f"d{i}", oracles.bm25(texts, q, t)) for i, t in enumerate(texts)), key=lambda p: (-p[1], p[0]))
    brute = [d for d, s in brute if any(w in oracles.toks(texts[int(d[1:])]) for w in q_words)]
    assert ranked.doc_ids == brute
    for k in (1, 2, 3):
        assert retrieve_topk(idx, params, q, k).doc_ids == ranked.doc_ids[:k]


def test_retrieve_ties_by_doc_id_and_no_match():
    idx = build_index([Document("z", "a b"), Document("m", "a c")])
    assert retrieve_topk(idx, BM25Params(), "a", 5).doc_ids == ["m", "z"]
    assert len(retrieve_topk(idx, BM25Params(), "nothing", 5)) == 0


def test_index_round_trip_and_corruption(tmp_path, corpus):
    idx = build_index(corpus)
    path = tmp_path / "x.idx"
    save_index(idx, path)
    back = load_index(path)
    assert back.fingerprint() == idx.fingerprint()
    assert build_index(corpus).fingerprint() == idx.fingerprint()
    raw = bytearray(path.read_bytes())
    raw[-3] ^= 0xFF
    path.write_bytes(bytes(raw))
    with pytest.raises(IndexFormatError):
        load_index(path)
    path.write_bytes(b"not an index")
    with pytest.raises(IndexFormatError):
        load_index(path)


def test_score_batch_contract():
    s = TermCountScorer()
    assert score_batch(s, "a b", ["a a b", "c"]) == [3.0, 0.0]
    with pytest.raises(ValueError):
        score_batch(s, "a", [])
    with pytest.raises(ScorerError):
        score_batch(FunctionScorer(lambda q, t: float("nan")), "a", ["x"])

    class Short(TermCountScorer):
        def _score_batch(self, q, texts):
            return [1.0]

    with pytest.raises(ScorerError):
        score_batch(Short(), "a", ["x", "y"])


def test_bm25_scorer_agrees_with_function(corpus):
    idx = build_index(corpus)
    s = BM25Scorer(idx)
    texts = [d.text for d in corpus.values()]
    assert s.score_batch("solar panel", texts) == [bm25_score(idx, BM25Params(), "solar panel", t) for t in texts]
    assert s.fingerprint.startswith("bm25:")


def test_chunked_single_chunk_equals_whole():
    s = TermCountScorer()
    text = "A x. B y."
    assert score_document_chunked(s, "x y", text) == (2.0, 0)
    with pytest.raises(ValueError):
        score_document_chunked(s, "x", "   ")


def test_chunked_matches_enumeration():
    rng = random.Random(3)
    s = TermCountScorer()
    for _ in range(50):
        sents = [" ".join(rng.choice(VOCAB) for _ in range(rng.randint(1, 5))).capitalize() + "!"
                 for _ in range(rng.randint(1, 10))]
        text = " ".join(sents)
        size = rng.randint(1, 4)
        chunks = [" ".join(sents[i:i + size]) for i in range(0, len(sents), size)]
        per = [sum(1 for t in oracles.toks(c) if t in ("apple", "fig")) for c in chunks]
        best, arg = score_document_chunked(s, "apple fig", text, size)
        assert best == max(per)
        assert arg == per.index(max(per))


def test_score_texts_threshold():
    s = FunctionScorer(lambda q, t: float(len(t)))
    long = "Aa. Bb. Cc. Dd."
    chunks = chunk_sentences(long, 2)
    assert score_texts(s, "q", [long, "Aa."], chunk_size=2) == [max(len(c.text) for c in chunks), 3.0]
    assert score_texts(s, "q", [long], chunk_size=2, chunk_threshold=10) == [float(len(long))]
    assert score_texts(s, "q", [""], chunk_size=2) == [0.0]
