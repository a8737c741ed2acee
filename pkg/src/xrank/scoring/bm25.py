"""Okapi BM25 over an in-memory inverted index."""
from __future__ import annotations

import hashlib
import heapq
import json
import math
import struct
import zlib
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from ..corpus_io import Document, Query, RankedList
from ..errors import IndexFormatError, StateError
from ..segmentation import terms

INDEX_MAGIC = b"XRANKIDX"
INDEX_VERSION = 1
_HEADER = struct.Struct(">8sH32sQ")


@dataclass(frozen=True)
class BM25Params:
    k1: float = 1.2
    b: float = 0.75

    def __post_init__(self):
        if not self.k1 > 0:
            raise ValueError(f"k1 must be > 0, got {self.k1}")
        if not 0.0 <= self.b <= 1.0:
            raise ValueError(f"b must lie in [0, 1], got {self.b}")


@dataclass
class InvertedIndex:
    postings: dict[str, list[tuple[str, int]]]
    doc_lengths: dict[str, int]
    avgdl: float
    N: int
    _idf_cache: dict[str, float] = field(default_factory=dict, repr=False, compare=False)

    def df(self, term: str) -> int:
        return len(self.postings.get(term, ()))

    def idf(self, term: str) -> float:
        """ln((N - df + 0.5) / (df + 0.5) + 1); never negative."""
        val = self._idf_cache.get(term)
        if val is None:
            df = self.df(term)
            val = math.log((self.N - df + 0.5) / (df + 0.5) + 1.0)
            self._idf_cache[term] = val
        return val

    @property
    def doc_ids(self) -> list[str]:
        return list(self.doc_lengths)

    def fingerprint(self) -> str:
        return hashlib.sha256(_payload(self)).hexdigest()[:16]


def build_index(corpus: Mapping[str, Document] | Iterable[Document]) -> InvertedIndex:
    docs = corpus.values() if isinstance(corpus, Mapping) else corpus
    postings: dict[str, list[tuple[str, int]]] = {}
    doc_lengths: dict[str, int] = {}
    for doc in docs:
        toks = terms(doc.text)
        doc_lengths[doc.doc_id] = len(toks)
        for term, tf in Counter(toks).items():
            postings.setdefault(term, []).append((doc.doc_id, tf))
    n = len(doc_lengths)
    avgdl = sum(doc_lengths.values()) / n if n else 0.0
    return InvertedIndex(postings, doc_lengths, avgdl, n)


def query_terms(query_text: str) -> list[str]:
    """Distinct query terms in first-occurrence order."""
    return list(dict.fromkeys(terms(query_text)))


def _term_weight(idf: float, tf: int, dl: int, avgdl: float, params: BM25Params) -> float:
    ratio = dl / avgdl if avgdl > 0 else 1.0
    return idf * (tf * (params.k1 + 1.0)) / (tf + params.k1 * (1.0 - params.b + params.b * ratio))


def _require_nonempty(index: InvertedIndex):
    if index.N == 0:
        raise StateError("cannot score against an empty index (N = 0)")


def bm25_score(index: InvertedIndex, params: BM25Params, query_text: str, doc_text: str) -> float:
    """BM25 of arbitrary text; tf and |D| come from ``doc_text``, df and avgdl from the index."""
    _require_nonempty(index)
    qterms = query_terms(query_text)
    if not qterms:
        return 0.0
    tf = Counter(terms(doc_text))
    dl = sum(tf.values())
    score = 0.0
    for t in qterms:
        f = tf.get(t, 0)
        if f:
            score += _term_weight(index.idf(t), f, dl, index.avgdl, params)
    return score


def retrieve_topk(index: InvertedIndex, params: BM25Params, query: Query | str, k: int,
                  query_id: str | None = None) -> RankedList:
    """Top-k documents by BM25, ties by ascending doc_id.

    Only documents sharing at least one term with the query are ranked.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    _require_nonempty(index)
    if isinstance(query, Query):
        qid, qtext = query.query_id, query.text
    else:
        qid, qtext = query_id or "", query
    acc: dict[str, float] = {}
    for t in query_terms(qtext):
        plist = index.postings.get(t)
        if not plist:
            continue
        idf = index.idf(t)
        for doc_id, tf in plist:
            acc[doc_id] = acc.get(doc_id, 0.0) + _term_weight(idf, tf, index.doc_lengths[doc_id], index.avgdl, params)
    best = heapq.nsmallest(k, acc.items(), key=lambda p: (-p[1], p[0]))
    return RankedList.from_scores(qid, best)


def _payload(index: InvertedIndex) -> bytes:
    order = {d: i for i, d in enumerate(index.doc_lengths)}
    body = {
        "doc_ids": list(index.doc_lengths),
        "doc_lengths": list(index.doc_lengths.values()),
        "postings": {t: [[order[d], tf] for d, tf in plist] for t, plist in sorted(index.postings.items())},
    }
    return json.dumps(body, sort_keys=True, separators=(",", ":"), ensure_ascii=False).encode("utf-8")


def save_index(index: InvertedIndex, path) -> None:
    """Write a versioned, checksummed binary index file (byte-identical for identical input)."""
    payload = _payload(index)
    blob = zlib.compress(payload, 9)
    header = _HEADER.pack(INDEX_MAGIC, INDEX_VERSION, hashlib.sha256(blob).digest(), len(blob))
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(blob)


def load_index(path) -> InvertedIndex:
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEADER.size:
        raise IndexFormatError(f"{path}: truncated index file")
    magic, version, digest, size = _HEADER.unpack_from(raw)
    if magic != INDEX_MAGIC:
        raise IndexFormatError(f"{path}: not an xrank index file")
    if version != INDEX_VERSION:
        raise IndexFormatError(f"{path}: index format version {version}, this build reads version {INDEX_VERSION}")
    blob = raw[_HEADER.size:]
    if len(blob) != size or hashlib.sha256(blob).digest() != digest:
        raise IndexFormatError(f"{path}: checksum mismatch, index file is corrupted")
    try:
        body = json.loads(zlib.decompress(blob).decode("utf-8"))
    except (zlib.error, UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise IndexFormatError(f"{path}: undecodable payload ({exc})") from None
    doc_ids = body["doc_ids"]
    doc_lengths = dict(zip(doc_ids, body["doc_lengths"]))
    postings = {t: [(doc_ids[i], tf) for i, tf in plist] for t, plist in body["postings"].items()}
    n = len(doc_lengths)
    avgdl = sum(doc_lengths.values()) / n if n else 0.0
    return InvertedIndex(postings, doc_lengths, avgdl, n)
