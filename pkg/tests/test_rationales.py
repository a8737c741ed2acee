import itertools
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from xrank.corpus_io import Document, Query
from xrank.errors import DegenerateScoreError
from xrank.rationales import (ExplanationSet, ablate_combinations, build_pseudo_document, explain_greedy,
                              explain_sampled, read_explanations, write_explanations)
from xrank.scoring import BM25Scorer, FunctionScorer, TermCountScorer, build_index
from xrank.segmentation import SENTENCE, WORD_WINDOW, mask_segments, split_sentences, word_windows

DOC = Document("d", "Solar panels convert light. Coffee is a drink. Panel efficiency improves yearly. Rain fell.")


def test_exhaustive_sampled_is_leave_one_out():
    s = TermCountScorer()
    q = "solar panel efficiency"
    e = explain_sampled(q, DOC, s, SENTENCE, exhaustive=True, m=4)
    sents = split_sentences(DOC.text)
    theta = s.score(q, DOC.text)
    expected = {i: abs(theta - s.score(q, mask_segments(DOC.text, [sg]))) / theta for i, sg in enumerate(sents)}
    got = {r.segment.index: r.weight for r in e.rationales}
    for i, w in got.items():
        assert abs(w - expected[i]) < 1e-12
    assert [r.segment.index for r in e.rationales] == sorted(expected, key=lambda i: (-expected[i], i))[:4]


def test_sampled_is_seeded():
    s = TermCountScorer()
    a = explain_sampled("solar panel", DOC, s, WORD_WINDOW, w=2, n_per_sample=2, seed=5, m=3)
    b = explain_sampled("solar panel", DOC, s, WORD_WINDOW, w=2, n_per_sample=2, seed=5, m=3)
    assert a.to_record() == b.to_record()
    assert a.params["samples"] == 5 * len(word_windows(DOC.text, 2))


def test_sampled_n_clamped_and_mean_mode():
    s = TermCountScorer()
    e = explain_sampled("solar", Document("x", "Solar one. Two."), s, SENTENCE, n_per_sample=9, m=1)
    assert e.params["n"] == 2
    mean = explain_sampled("solar", DOC, s, SENTENCE, normalize="mean", num_samples=40, m=1)
    assert mean.rationales[0].segment.text.startswith("Solar")
    with pytest.raises(ValueError):
        explain_sampled("solar", DOC, s, SENTENCE, normalize="median")


def test_sampled_degenerate():
    s = TermCountScorer()
    e = explain_sampled("zebra", DOC, s, SENTENCE, m=2)
    assert e.degenerate and all(r.weight == 0 for r in e.rationales)
    with pytest.raises(DegenerateScoreError):
        explain_sampled("zebra", DOC, s, SENTENCE, on_degenerate="raise")


def test_overlapping_windows_not_both_selected():
    s = TermCountScorer()
    e = explain_sampled("solar panels", DOC, s, WORD_WINDOW, w=3, stride=1, exhaustive=True, m=3)
    segs = [r.segment for r in e.rationales]
    for a, b in itertools.combinations(segs, 2):
        assert not a.overlaps(b)


def _greedy_replay(q, doc, scorer, m):
    sents = split_sentences(doc.text)
    removed = []
    cur = scorer.score(q, doc.text)
    for _ in range(min(m, len(sents))):
        if cur == 0:
            break
        best = None
        for i in range(len(sents)):
            if i in removed:
                continue
            s = scorer.score(q, mask_segments(doc.text, [sents[j] for j in removed + [i]]))
            phi = (cur - s) / abs(cur)
            if best is None or phi > best[0]:
                best = (phi, i, s)
        removed.append(best[1])
        cur = best[2]
    return removed


@pytest.mark.parametrize("q", ["solar panel efficiency", "coffee drink", "rain light"])
def test_greedy_matches_replay_and_prefix(q, corpus):
    scorer = BM25Scorer(build_index(corpus))
    full = explain_greedy(q, DOC, scorer, 4)
    assert [r.segment.index for r in full.rationales] == _greedy_replay(q, DOC, scorer, 4)
    for m in range(1, 4):
        part = explain_greedy(q, DOC, scorer, m)
        assert [r.segment.index for r in part.rationales] == [r.segment.index for r in full.rationales][:m]


def test_greedy_tie_goes_to_earliest():
    doc = Document("t", "Apple one. Apple two. Pear.")
    e = explain_greedy("apple", doc, TermCountScorer(), 1)
    assert e.rationales[0].segment.index == 0
    assert e.rationales[0].weight == pytest.approx(0.5)


def test_greedy_truncates_when_residual_is_zero():
    doc = Document("t", "Apple here. Nothing there. More nothing.")
    e = explain_greedy("apple", doc, TermCountScorer(), 3)
    assert e.truncated and len(e.rationales) == 1
    empty = explain_greedy("zebra", doc, TermCountScorer(), 2)
    assert empty.degenerate and not empty.rationales


def test_pseudo_document_in_document_order():
    s = TermCountScorer()
    e = explain_greedy("rain solar", DOC, s, 2)
    pseudo = build_pseudo_document(e)
    assert pseudo.text == "Solar panels convert light. Rain fell."
    with pytest.raises(ValueError):
        build_pseudo_document(ExplanationSet("q", "d", SENTENCE, ()))


def test_pseudo_document_of_everything_is_normalized_original():
    doc = Document("d", "One  two.\n\nThree four.")
    e = explain_sampled("two four", doc, TermCountScorer(), SENTENCE, exhaustive=True, m=10)
    assert build_pseudo_document(e).text == "One two. Three four."


def test_ablation_enumerates_all_combinations():
    s = TermCountScorer()
    doc = Document("d", "A solar. B panel. C solar panel. D none.")
    spans = split_sentences(doc.text, "d")
    res = ablate_combinations("solar panel", doc, s, spans, 2)
    assert len(res.scores) == 10 and not res.sampled and res.total_combinations == 10
    theta = s.score("solar panel", doc.text)
    for combo, rel in res.scores.items():
        masked = mask_segments(doc, [spans[j] for j in combo])
        assert rel == s.score("solar panel", masked) / theta
    for j, f in res.fidelity.items():
        assert f == max(1 - r for c, r in res.scores.items() if j in c)
    assert res.fidelity[2] == pytest.approx(1 - 1 / 4)


def test_ablation_budget_samples_uniquely():
    s = TermCountScorer()
    doc = Document("d", " ".join(f"W{i} solar." for i in range(8)))
    spans = split_sentences(doc.text, "d")
    res = ablate_combinations("solar", doc, s, spans, 3, budget=20, seed=1)
    assert res.sampled and len(res.scores) == 20
    assert res.total_combinations == sum(math.comb(8, r) for r in (1, 2, 3))
    assert all(1 <= len(c) <= 3 and list(c) == sorted(set(c)) for c in res.scores)
    again = ablate_combinations("solar", doc, s, spans, 3, budget=20, seed=1)
    assert again.scores == res.scores


def test_ablation_degenerate_and_overlap():
    doc = Document("d", "A b. C d.")
    spans = split_sentences(doc.text, "d")
    with pytest.raises(DegenerateScoreError):
        ablate_combinations("zzz", doc, TermCountScorer(), spans, 1)
    with pytest.raises(ValueError):
        ablate_combinations("a", doc, TermCountScorer(), [spans[0], spans[0]], 1)


def test_explanations_round_trip(tmp_path):
    s = TermCountScorer()
    items = [explain_greedy(Query("q1", "solar"), DOC, s, 2),
             explain_sampled(Query("q1", "coffee"), DOC, s, WORD_WINDOW, w=3, m=2)]
    path = tmp_path / "e.jsonl"
    write_explanations(items, path)
    back = read_explanations(path)
    assert [b.to_record() for b in back] == [i.to_record() for i in items]


@settings(max_examples=60, deadline=None)
@given(st.lists(st.sampled_from(["Red fox.", "Blue fox jumps.", "Green.", "Red blue.", "Fox fox fox."]),
                min_size=1, max_size=6), st.integers(1, 4))
def test_greedy_weights_and_prefix_property(sents, m):
    doc = Document("h", " ".join(sents))
    scorer = FunctionScorer(lambda q, t: float(len(t.split())) + t.lower().count("fox") * 2.5, name="len")
    full = explain_greedy("fox", doc, scorer, 4)
    part = explain_greedy("fox", doc, scorer, m)
    assert [r.segment.index for r in part.rationales] == [r.segment.index for r in full.rationales][:m]
    assert len({r.segment.index for r in full.rationales}) == len(full.rationales)
