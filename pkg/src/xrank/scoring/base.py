"""The uniform scorer contract and document-level scoring helpers."""
from __future__ import annotations

import math
from collections import Counter
from typing import Callable, Iterable, Sequence

from ..corpus_io import Document
from ..errors import ScorerError
from ..segmentation import chunk_sentences, split_sentences, terms
from .bm25 import BM25Params, InvertedIndex, bm25_score, query_terms


class Scorer:
    """A relevance function theta(query, text) -> float.

    Subclasses implement :meth:`_score_batch`.  ``max_batch`` caps the number
    of texts per underlying call (``None`` means unlimited) and
    ``deterministic`` promises identical outputs for identical inputs.
    """

    kind = "synthetic"
    max_batch: int | None = None
    deterministic = True

    @property
    def fingerprint(self) -> str:
        return self.kind

    def _score_batch(self, query_text: str, texts: Sequence[str]) -> list[float]:
        raise NotImplementedError

    def score_batch(self, query_text: str, texts: Sequence[str]) -> list[float]:
        return score_batch(self, query_text, texts)

    def score(self, query_text: str, text: str) -> float:
        return self.score_batch(query_text, [text])[0]

    def close(self):
        pass

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


class BM25Scorer(Scorer):
    kind = "bm25"

    def __init__(self, index: InvertedIndex, params: BM25Params | None = None):
        self.index = index
        self.params = params or BM25Params()
        self._fingerprint = f"bm25:k1={self.params.k1!r}:b={self.params.b!r}:{index.fingerprint()}"

    @property
    def fingerprint(self) -> str:
        return self._fingerprint

    def _score_batch(self, query_text, texts):
        return [bm25_score(self.index, self.params, query_text, t) for t in texts]


class TermCountScorer(Scorer):
    """Number of token occurrences in the text that are query terms."""

    kind = "synthetic"

    @property
    def fingerprint(self) -> str:
        return "synthetic:termcount"

    def _score_batch(self, query_text, texts):
        qterms = set(query_terms(query_text))
        out = []
        for t in texts:
            counts = Counter(terms(t))
            out.append(float(sum(c for term, c in counts.items() if term in qterms)))
        return out


class FunctionScorer(Scorer):
    """Wrap a plain ``fn(query_text, text) -> float``."""

    kind = "synthetic"

    def __init__(self, fn: Callable[[str, str], float], name: str = "function", max_batch: int | None = None):
        self.fn = fn
        self.name = name
        self.max_batch = max_batch

    @property
    def fingerprint(self) -> str:
        return f"synthetic:{self.name}"

    def _score_batch(self, query_text, texts):
        return [float(self.fn(query_text, t)) for t in texts]


def score_batch(scorer: Scorer, query_text: str, texts: Sequence[str]) -> list[float]:
    """Score ``texts`` against one query; output is order-aligned with the input."""
    texts = list(texts)
    if not texts:
        raise ValueError("texts must be a non-empty sequence")
    scores = [float(s) for s in scorer._score_batch(query_text, texts)]
    if len(scores) != len(texts):
        raise ScorerError(f"scorer returned {len(scores)} scores for {len(texts)} texts")
    for s in scores:
        if not math.isfinite(s):
            raise ScorerError(f"scorer returned a non-finite score {s!r}")
    return scores


def _doc_text(doc) -> str:
    return doc.text if isinstance(doc, Document) else doc


def score_document_chunked(scorer: Scorer, query_text: str, doc: Document | str, chunk_size: int = 3,
                           abbreviations: Iterable[str] | None = None) -> tuple[float, int]:
    """Max over the scores of consecutive ``chunk_size``-sentence chunks.

    Returns ``(score, index of the best chunk)``; ties go to the earliest chunk.
    """
    text = _doc_text(doc)
    if not text.strip():
        raise ValueError("cannot chunk-score an empty document")
    chunks = chunk_sentences(text, chunk_size, abbreviations=abbreviations)
    scores = score_batch(scorer, query_text, [c.text for c in chunks])
    best = max(range(len(scores)), key=lambda i: (scores[i], -i))
    return scores[best], best


def score_texts(scorer: Scorer, query_text: str, texts: Sequence[str], chunk_size: int | None = None,
                chunk_threshold: int | None = None, abbreviations: Iterable[str] | None = None) -> list[float]:
    """Document scores for ``texts`` in one batched call.

    With ``chunk_size`` set, any text holding more than ``chunk_threshold``
    sentences (default: ``chunk_size``) is scored as the max over its chunks;
    shorter texts, including empty ones, are scored whole.
    """
    texts = list(texts)
    if chunk_size is None:
        return score_batch(scorer, query_text, texts)
    threshold = chunk_size if chunk_threshold is None else chunk_threshold
    flat: list[str] = []
    spans: list[tuple[int, int]] = []
    for t in texts:
        sents = split_sentences(t, abbreviations=abbreviations) if t.strip() else []
        if len(sents) > threshold:
            pieces = [c.text for c in chunk_sentences(t, chunk_size, sentences=sents)]
        else:
            pieces = [t]
        spans.append((len(flat), len(flat) + len(pieces)))
        flat.extend(pieces)
    scores = score_batch(scorer, query_text, flat)
    return [max(scores[a:b]) for a, b in spans]
