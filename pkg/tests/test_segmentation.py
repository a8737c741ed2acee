import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from xrank.corpus_io import Document
from xrank.segmentation import (Segment, chunk_sentences, mask_segments, normalize_whitespace, segment,
                                split_sentences, tokenize, word_windows)

text_st = st.text(alphabet=st.sampled_from(list("ab cé. Z9!?\n\tß日”")), max_size=80)


def test_tokenize_offsets_and_case():
    toks = tokenize("Hello, wörld_2 日本!")
    assert [t.text for t in toks] == ["hello", "wörld", "2", "日本"]
    assert all(t.char_end > t.char_start for t in toks)


def test_split_basic():
    sents = split_sentences("First one. Second one! Third? fourth stays.")
    assert [s.text for s in sents] == ["First one.", "Second one!", "Third? fourth stays."]


def test_abbreviation_does_not_split():
    sents = split_sentences("Dr. Smith arrived. He sat down.")
    assert [s.text for s in sents] == ["Dr. Smith arrived.", "He sat down."]


def test_custom_abbreviations():
    assert len(split_sentences("See Fig. Two here.", abbreviations=["fig."])) == 1
    assert len(split_sentences("See Fig. Two here.", abbreviations=[])) == 2


def test_quote_closer_stays_with_sentence():
    sents = split_sentences('He said "stop." Then he left.')
    assert sents[0].text == 'He said "stop."'


def test_no_terminator_is_one_sentence():
    sents = split_sentences("  no terminator here  ")
    assert [s.text for s in sents] == ["no terminator here"]


def test_empty_text():
    assert split_sentences("") == []
    assert word_windows("   ", 3) == []


def test_word_windows():
    wins = word_windows("one two three four five", 2)
    assert [w.text for w in wins] == ["one two", "three four", "five"]
    over = word_windows("one two three four", 3, stride=1)
    assert [w.text for w in over] == ["one two three", "two three four"]
    with pytest.raises(ValueError):
        word_windows("a b", 0)


def test_chunks():
    text = "A a. B b. C c. D d. E e."
    chunks = chunk_sentences(text, 2)
    assert [c.text for c in chunks] == ["A a. B b.", "C c. D d.", "E e."]


def test_segment_dispatch():
    with pytest.raises(ValueError):
        segment("a", "paragraph")


def test_mask_identity_and_seams():
    doc = Document("d", "Alpha beta.  Gamma delta. Eps.")
    sents = split_sentences(doc.text, "d")
    assert mask_segments(doc, []) == doc.text
    assert mask_segments(doc, [sents[1]]) == "Alpha beta. Eps."
    assert mask_segments(doc, [sents[0]]) == "Gamma delta. Eps."
    assert mask_segments(doc, sents) == ""


def test_mask_overlap_rules():
    text = "one two three four"
    a = Segment("", "word_window", 0, 0, 7, "one two")
    b = Segment("", "word_window", 1, 4, 13, "two three")
    with pytest.raises(ValueError):
        mask_segments(text, [a, b])
    assert mask_segments(text, [a, b], allow_overlap=True) == "four"


def test_mask_rejects_foreign_segment():
    seg = Segment("other", "sentence", 0, 0, 3, "abc")
    with pytest.raises(ValueError):
        mask_segments(Document("d", "abc"), [seg])
    with pytest.raises(ValueError):
        mask_segments("xyz", [Segment("", "sentence", 0, 0, 3, "abc")])


@settings(max_examples=300, deadline=None)
@given(text_st)
def test_sentences_cover_all_non_space_text(text):
    sents = split_sentences(text)
    for s in sents:
        assert text[s.char_start:s.char_end] == s.text
        assert s.text == s.text.strip() and s.text
    covered = "".join(s.text for s in sents)
    assert "".join(text.split()) == "".join(covered.split())
    starts = [s.char_start for s in sents]
    assert starts == sorted(starts)


@settings(max_examples=300, deadline=None)
@given(text_st, st.integers(1, 6))
def test_windows_partition_tokens(text, w):
    wins = word_windows(text, w)
    assert sum(len(tokenize(x.text)) for x in wins) == len(tokenize(text))
    for x in wins:
        assert text[x.char_start:x.char_end] == x.text


@settings(max_examples=300, deadline=None)
@given(text_st, st.data())
def test_masking_keeps_exactly_the_rest(text, data):
    sents = split_sentences(text)
    if not sents:
        return
    chosen = data.draw(st.sets(st.integers(0, len(sents) - 1)))
    out = mask_segments(text, [sents[i] for i in chosen])
    rest = [sents[i].text for i in range(len(sents)) if i not in chosen]
    assert normalize_whitespace(out) == normalize_whitespace(" ".join(rest))
