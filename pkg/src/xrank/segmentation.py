"""Tokenization and segmentation with offsets into the original text.

Every segment carries ``[char_start, char_end)`` offsets such that
``text[char_start:char_end] == segment.text``.  Masking removes those ranges
from the document and collapses the whitespace at each seam to one space.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from typing import Iterable, Sequence

from .corpus_io import Document

SENTENCE = "sentence"
WORD_WINDOW = "word_window"
CHUNK = "chunk"
GRANULARITIES = (SENTENCE, WORD_WINDOW, CHUNK)

_TOKEN_RE = re.compile(r"[^\W_]+")
_TERMINATOR_RE = re.compile(r"[.!?]+[\"'”’)\]]*")
_OPENERS = "\"'([“‘"


@dataclass(frozen=True)
class Token:
    text: str
    char_start: int
    char_end: int


@dataclass(frozen=True)
class Segment:
    doc_id: str
    granularity: str
    index: int
    char_start: int
    char_end: int
    text: str

    def overlaps(self, other: "Segment") -> bool:
        return self.char_start < other.char_end and other.char_start < self.char_end


def tokenize(text: str) -> list[Token]:
    """Lowercased alphanumeric runs; everything else separates tokens."""
    return [Token(m.group().lower(), m.start(), m.end()) for m in _TOKEN_RE.finditer(text)]


def terms(text: str) -> list[str]:
    """Token strings only; the fast path used by the scorers."""
    return [t.lower() for t in _TOKEN_RE.findall(text)]


def normalize_whitespace(text: str) -> str:
    return " ".join(text.split())


def load_abbreviations(path=None) -> frozenset[str]:
    """Read an abbreviation list (one lowercase entry per line, e.g. ``e.g.``)."""
    if path is None:
        raw = resources.files("xrank").joinpath("data/abbreviations.txt").read_text(encoding="utf-8")
    else:
        with open(path, encoding="utf-8") as fh:
            raw = fh.read()
    return frozenset(line.strip().lower() for line in raw.splitlines() if line.strip())


@lru_cache(maxsize=1)
def default_abbreviations() -> frozenset[str]:
    return load_abbreviations()


def _is_abbreviation(text: str, term_start: int, term_end: int, abbreviations) -> bool:
    if text[term_start:term_end] != ".":
        return False
    word_start = term_start
    while word_start > 0 and not text[word_start - 1].isspace():
        word_start -= 1
    word = text[word_start:term_end].lstrip(_OPENERS).lower()
    return word in abbreviations


def _sentence_spans(text: str, abbreviations) -> list[tuple[int, int]]:
    spans = []
    n = len(text)
    start = 0
    for m in _TERMINATOR_RE.finditer(text):
        end = m.end()
        nxt = end
        while nxt < n and text[nxt].isspace():
            nxt += 1
        if nxt < n:
            if nxt == end or not (text[nxt].isupper() or text[nxt].isdigit()):
                continue
        dots_end = m.start() + len(m.group().rstrip("\"'”’)]"))
        if _is_abbreviation(text, m.start(), dots_end, abbreviations):
            continue
        while start < end and text[start].isspace():
            start += 1
        if start < end:
            spans.append((start, end))
        start = end
    while start < n and text[start].isspace():
        start += 1
    stop = n
    while stop > start and text[stop - 1].isspace():
        stop -= 1
    if start < stop:
        spans.append((start, stop))
    return spans


def split_sentences(text: str, doc_id: str = "", abbreviations: Iterable[str] | None = None) -> list[Segment]:
    """Rule-based sentence split.

    A sentence ends at a run of ``.``, ``!`` or ``?`` (plus closing quotes or
    brackets) followed by whitespace and an uppercase letter or digit, or by
    the end of the text.  A lone ``.`` ending a listed abbreviation never
    splits.  Text without terminators is a single sentence.
    """
    abbrevs = default_abbreviations() if abbreviations is None else frozenset(abbreviations)
    return [Segment(doc_id, SENTENCE, i, s, e, text[s:e])
            for i, (s, e) in enumerate(_sentence_spans(text, abbrevs))]


def word_windows(text: str, w: int, stride: int | None = None, doc_id: str = "") -> list[Segment]:
    """Consecutive runs of ``w`` tokens, starting every ``stride`` tokens (default ``w``).

    The last window may be shorter.  Windows span from the first character of
    their first token to the last character of their last token.
    """
    if w < 1:
        raise ValueError(f"window size must be >= 1, got {w}")
    stride = w if stride is None else stride
    if stride < 1:
        raise ValueError(f"stride must be >= 1, got {stride}")
    toks = tokenize(text)
    out = []
    start = 0
    while start < len(toks):
        win = toks[start:start + w]
        s, e = win[0].char_start, win[-1].char_end
        out.append(Segment(doc_id, WORD_WINDOW, len(out), s, e, text[s:e]))
        if start + w >= len(toks):
            break
        start += stride
    return out


def chunk_sentences(text: str, chunk_size: int = 3, doc_id: str = "",
                    abbreviations: Iterable[str] | None = None,
                    sentences: Sequence[Segment] | None = None) -> list[Segment]:
    """Group consecutive sentences into non-overlapping chunks of ``chunk_size``."""
    if chunk_size < 1:
        raise ValueError(f"chunk_size must be >= 1, got {chunk_size}")
    sents = split_sentences(text, doc_id, abbreviations) if sentences is None else sentences
    out = []
    for i in range(0, len(sents), chunk_size):
        group = sents[i:i + chunk_size]
        s, e = group[0].char_start, group[-1].char_end
        out.append(Segment(doc_id, CHUNK, len(out), s, e, text[s:e]))
    return out


def segment(text: str, granularity: str, *, doc_id: str = "", w: int = 5, stride: int | None = None,
            chunk_size: int = 3, abbreviations: Iterable[str] | None = None) -> list[Segment]:
    if granularity == SENTENCE:
        return split_sentences(text, doc_id, abbreviations)
    if granularity == WORD_WINDOW:
        return word_windows(text, w, stride, doc_id)
    if granularity == CHUNK:
        return chunk_sentences(text, chunk_size, doc_id, abbreviations)
    raise ValueError(f"unknown granularity {granularity!r}; expected one of {GRANULARITIES}")


def _doc_text(doc) -> tuple[str, str | None]:
    if isinstance(doc, Document):
        return doc.text, doc.doc_id
    return doc, None


def mask_segments(doc: Document | str, segments: Iterable[Segment], allow_overlap: bool = False) -> str:
    """Remove the segments' character ranges from ``doc`` and return the remaining text.

    Whitespace around each removed range collapses to a single space (or to
    nothing at the text boundaries).  Masking nothing returns the text unchanged.
    Overlapping segments raise ValueError unless ``allow_overlap`` is set, in
    which case their union is removed.
    """
    text, doc_id = _doc_text(doc)
    ranges = []
    for seg in segments:
        if doc_id is not None and seg.doc_id and seg.doc_id != doc_id:
            raise ValueError(f"segment of {seg.doc_id!r} cannot mask document {doc_id!r}")
        if not (0 <= seg.char_start <= seg.char_end <= len(text)) or text[seg.char_start:seg.char_end] != seg.text:
            raise ValueError(f"segment {seg.index} does not match the document text at its offsets")
        ranges.append((seg.char_start, seg.char_end))
    if not ranges:
        return text
    ranges.sort()
    merged = [list(ranges[0])]
    for s, e in ranges[1:]:
        if s < merged[-1][1]:
            if not allow_overlap:
                raise ValueError(f"overlapping segments at [{s}, {merged[-1][1]})")
            merged[-1][1] = max(merged[-1][1], e)
        else:
            merged.append([s, e])
    pieces = []
    pos = 0
    for s, e in merged:
        pieces.append(text[pos:s])
        pos = e
    pieces.append(text[pos:])
    out = pieces[0]
    for piece in pieces[1:]:
        left, right = out.rstrip(), piece.lstrip()
        out = f"{left} {right}" if left and right else left + right
    return out

