"""Occlusion-based rationales for a retrieved document.

Two explainers share one notion of importance: remove text from the
document, rescore it, and measure the relative score change.

``explain_sampled``
    Draws ``n`` segments at a time, masks them jointly and credits each drawn
    segment with ``|theta(D) - theta(D - drawn)| / (n * theta(D))``.  Credits
    accumulate over draws and the ``m`` highest-weighted segments are returned.
``explain_greedy``
    Works on sentences.  At every step it removes the sentence whose
    occlusion lowers the score of the *current* residual document the most,
    so later picks are conditioned on earlier removals.
"""
from __future__ import annotations

import itertools
import json
import logging
import math
import random
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .corpus_io import Document, Query
from .errors import DegenerateScoreError
from .scoring.base import Scorer, score_texts
from .segmentation import (SENTENCE, WORD_WINDOW, Segment, mask_segments, normalize_whitespace, segment,
                           split_sentences)

logger = logging.getLogger(__name__)

SAMPLED = "sampled"
GREEDY = "greedy"
DEFAULT_COMBINATION_BUDGET = 1024


@dataclass(frozen=True)
class Rationale:
    segment: Segment
    weight: float


@dataclass(frozen=True)
class ExplanationSet:
    query_id: str
    doc_id: str
    granularity: str
    rationales: tuple[Rationale, ...]
    params: dict = field(default_factory=dict, compare=False)
    method: str = SAMPLED
    degenerate: bool = False
    truncated: bool = False

    def __len__(self):
        return len(self.rationales)

    def top(self, m: int) -> "ExplanationSet":
        """The first ``m`` rationales (best weights for sampled, first picks for greedy)."""
        params = dict(self.params, m=m)
        return ExplanationSet(self.query_id, self.doc_id, self.granularity, self.rationales[:m], params,
                              self.method, self.degenerate, self.truncated and len(self.rationales) < m)

    @property
    def texts(self) -> list[str]:
        return [r.segment.text for r in self.rationales]

    def to_record(self) -> dict:
        return {
            "query_id": self.query_id,
            "doc_id": self.doc_id,
            "granularity": self.granularity,
            "method": self.method,
            "params": self.params,
            "degenerate": self.degenerate,
            "truncated": self.truncated,
            "rationales": [
                {"index": r.segment.index, "start": r.segment.char_start, "end": r.segment.char_end,
                 "text": r.segment.text, "weight": r.weight}
                for r in self.rationales
            ],
        }

    @classmethod
    def from_record(cls, rec: dict) -> "ExplanationSet":
        gran = rec["granularity"]
        rats = tuple(
            Rationale(Segment(rec["doc_id"], gran, r.get("index", i), r["start"], r["end"], r["text"]),
                      float(r["weight"]))
            for i, r in enumerate(rec["rationales"])
        )
        return cls(rec["query_id"], rec["doc_id"], gran, rats, dict(rec.get("params", {})),
                   rec.get("method", SAMPLED), bool(rec.get("degenerate", False)),
                   bool(rec.get("truncated", False)))


@dataclass(frozen=True)
class PseudoDocument:
    doc_id: str
    text: str
    source: ExplanationSet


@dataclass
class AblationResult:
    """Relative scores ``theta(D - combo) / theta(D)`` keyed by span-index tuples."""

    scores: dict[tuple[int, ...], float]
    fidelity: dict[int, float]
    sampled: bool
    total_combinations: int


def _qtext(query) -> tuple[str, str]:
    if isinstance(query, Query):
        return query.query_id, query.text
    return "", query


def _select_top(weights: Sequence[float], segs: Sequence[Segment], m: int) -> list[int]:
    order = sorted(range(len(segs)), key=lambda i: (-weights[i], i))
    chosen: list[int] = []
    for i in order:
        if len(chosen) >= m:
            break
        if any(segs[i].overlaps(segs[j]) for j in chosen):
            continue
        chosen.append(i)
    return chosen


def explain_sampled(query: Query | str, doc: Document, scorer: Scorer, granularity: str = WORD_WINDOW, *,
                    w: int = 5, n_per_sample: int = 1, num_samples: int | None = None, m: int = 5,
                    seed: int = 0, exhaustive: bool = False, stride: int | None = None,
                    segment_chunk_size: int = 3, normalize: str = "sum", score_chunk_size: int | None = None,
                    chunk_threshold: int | None = None, abbreviations: Iterable[str] | None = None,
                    on_degenerate: str = "flag") -> ExplanationSet:
    """Sampled occlusion explainer for passages.

    Parameters
    ----------
    n_per_sample
        Segments masked jointly per draw; clamped to the segment count.
    num_samples
        Number of draws; defaults to 5x the segment count.  Ignored when
        ``exhaustive`` is set, which masks every segment alone exactly once.
    normalize
        ``"sum"`` keeps the accumulated credit; ``"mean"`` divides each
        segment's credit by the number of draws that included it.
    score_chunk_size, chunk_threshold
        Score documents as the max over sentence chunks (see
        :func:`xrank.scoring.score_texts`).
    on_degenerate
        When the full document scores 0, ``"flag"`` returns zero weights with
        ``degenerate=True``; ``"raise"`` raises DegenerateScoreError.
    """
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    if normalize not in ("sum", "mean"):
        raise ValueError(f"normalize must be 'sum' or 'mean', got {normalize!r}")
    qid, qtext = _qtext(query)
    segs = segment(doc.text, granularity, doc_id=doc.doc_id, w=w, stride=stride,
                   chunk_size=segment_chunk_size, abbreviations=abbreviations)
    if not segs:
        raise ValueError(f"document {doc.doc_id!r} has no {granularity} segments")
    n_seg = len(segs)
    n = n_per_sample
    if n < 1:
        raise ValueError(f"n_per_sample must be >= 1, got {n}")
    if n > n_seg:
        logger.warning("n_per_sample=%d exceeds the %d segments of %s; clamping", n, n_seg, doc.doc_id)
        n = n_seg
    if exhaustive:
        n = 1
        draws = [(i,) for i in range(n_seg)]
    else:
        samples = 5 * n_seg if num_samples is None else num_samples
        if samples < 1:
            raise ValueError(f"num_samples must be >= 1, got {samples}")
        rng = np.random.default_rng(seed)
        draws = [tuple(sorted(int(j) for j in rng.choice(n_seg, size=n, replace=False))) for _ in range(samples)]
    params = {"m": m, "n": n, "w": w if granularity == WORD_WINDOW else None, "stride": stride,
              "samples": len(draws), "seed": seed, "exhaustive": exhaustive, "normalize": normalize}

    def score(texts):
        return score_texts(scorer, qtext, texts, score_chunk_size, chunk_threshold, abbreviations)

    theta = score([doc.text])[0]
    if theta == 0:
        if on_degenerate == "raise":
            raise DegenerateScoreError(f"document {doc.doc_id!r} scores 0 for query {qid!r}")
        chosen = _select_top([0.0] * n_seg, segs, m)
        rats = tuple(Rationale(segs[i], 0.0) for i in chosen)
        return ExplanationSet(qid, doc.doc_id, granularity, rats, params, SAMPLED, degenerate=True)

    overlapping = any(segs[i].overlaps(segs[i + 1]) for i in range(n_seg - 1))
    unique = list(dict.fromkeys(draws))
    masked = [mask_segments(doc, [segs[j] for j in d], allow_overlap=overlapping) for d in unique]
    masked_scores = dict(zip(unique, score(masked)))

    acc = [0.0] * n_seg
    hits = [0] * n_seg
    for d in draws:
        credit = abs(theta - masked_scores[d]) / abs(theta) / n
        for j in d:
            acc[j] += credit
            hits[j] += 1
    if normalize == "mean":
        acc = [a / h if h else 0.0 for a, h in zip(acc, hits)]
    chosen = _select_top(acc, segs, m)
    rats = tuple(Rationale(segs[i], acc[i]) for i in chosen)
    return ExplanationSet(qid, doc.doc_id, granularity, rats, params, SAMPLED)


def explain_greedy(query: Query | str, doc: Document, scorer: Scorer, m: int, *,
                   score_chunk_size: int | None = None, chunk_threshold: int | None = None,
                   abbreviations: Iterable[str] | None = None) -> ExplanationSet:
    """Greedy sentence occlusion for long documents.

    Each step scores every remaining sentence by the signed relative drop
    ``(theta(R) - theta(R - s)) / |theta(R)|`` of the residual document ``R``,
    keeps the best one (earliest on ties) and removes it from ``R``.
    Rationales come back in selection order.  If ``theta(R)`` hits 0 the
    search stops and the result is marked ``truncated``; if the full document
    already scores 0 it is marked ``degenerate`` and has no rationales.
    """
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    qid, qtext = _qtext(query)
    sents = split_sentences(doc.text, doc.doc_id, abbreviations)
    if not sents:
        raise ValueError(f"document {doc.doc_id!r} has no sentences")
    params = {"m": m, "score_chunk_size": score_chunk_size, "chunk_threshold": chunk_threshold}

    def score(texts):
        return score_texts(scorer, qtext, texts, score_chunk_size, chunk_threshold, abbreviations)

    current = score([doc.text])[0]
    if current == 0:
        return ExplanationSet(qid, doc.doc_id, SENTENCE, (), params, GREEDY, degenerate=True)
    removed: list[int] = []
    remaining = list(range(len(sents)))
    rats: list[Rationale] = []
    truncated = False
    while len(rats) < min(m, len(sents)):
        if current == 0:
            truncated = True
            break
        masked = [mask_segments(doc, [sents[j] for j in removed] + [sents[i]]) for i in remaining]
        new_scores = score(masked)
        phis = [(current - s) / abs(current) for s in new_scores]
        best = max(range(len(remaining)), key=lambda p: (phis[p], -remaining[p]))
        idx = remaining.pop(best)
        removed.append(idx)
        rats.append(Rationale(sents[idx], phis[best]))
        current = new_scores[best]
    return ExplanationSet(qid, doc.doc_id, SENTENCE, tuple(rats), params, GREEDY, truncated=truncated)


def build_pseudo_document(explanation: ExplanationSet) -> PseudoDocument:
    """Concatenate rationale texts in document order, single-space separated."""
    if not explanation.rationales:
        raise ValueError(f"explanation for {explanation.doc_id!r} has no rationales")
    ordered = sorted(explanation.rationales, key=lambda r: (r.segment.char_start, r.segment.char_end))
    parts = [normalize_whitespace(r.segment.text) for r in ordered]
    return PseudoDocument(explanation.doc_id, " ".join(p for p in parts if p), explanation)


def _unrank_combination(rank: int, n: int, r: int) -> tuple[int, ...]:
    out = []
    c = 0
    for pos in range(r):
        while True:
            count = math.comb(n - c - 1, r - pos - 1)
            if rank < count:
                out.append(c)
                c += 1
                break
            rank -= count
            c += 1
    return tuple(out)


def _combination_at(rank: int, n: int, m_max: int) -> tuple[int, ...]:
    for r in range(1, m_max + 1):
        size = math.comb(n, r)
        if rank < size:
            return _unrank_combination(rank, n, r)
        rank -= size
    raise IndexError("combination rank out of range")


def ablate_combinations(query: Query | str, doc: Document, scorer: Scorer, spans: Sequence[Segment],
                        m_max: int, *, budget: int = DEFAULT_COMBINATION_BUDGET, seed: int = 0,
                        score_chunk_size: int | None = None, chunk_threshold: int | None = None,
                        abbreviations: Iterable[str] | None = None) -> AblationResult:
    """Mask every combination of 1..m_max spans and record relative scores.

    Span fidelity is the largest ``1 - theta(D - combo) / theta(D)`` over
    the combinations containing that span.  When there are more than
    ``budget`` combinations a seeded uniform subsample of ``budget`` of them
    is evaluated and ``sampled`` is set.
    """
    if m_max < 1:
        raise ValueError(f"m_max must be >= 1, got {m_max}")
    spans = list(spans)
    for a, b in itertools.combinations(spans, 2):
        if a.overlaps(b):
            raise ValueError("spans must not overlap")
    n = len(spans)
    if n == 0:
        return AblationResult({}, {}, False, 0)
    m_max = min(m_max, n)
    qid, qtext = _qtext(query)
    total = sum(math.comb(n, r) for r in range(1, m_max + 1))
    sampled = total > budget
    if sampled:
        ranks = sorted(random.Random(seed).sample(range(total), budget))
        combos = [_combination_at(k, n, m_max) for k in ranks]
    else:
        combos = [c for r in range(1, m_max + 1) for c in itertools.combinations(range(n), r)]

    def score(texts):
        return score_texts(scorer, qtext, texts, score_chunk_size, chunk_threshold, abbreviations)

    theta = score([doc.text])[0]
    if theta == 0:
        raise DegenerateScoreError(f"document {doc.doc_id!r} scores 0 for query {qid!r}")
    masked = [mask_segments(doc, [spans[j] for j in c]) for c in combos]
    rel = {c: s / theta for c, s in zip(combos, score(masked))}
    fidelity: dict[int, float] = {}
    for c, s in rel.items():
        for j in c:
            f = 1.0 - s
            if j not in fidelity or f > fidelity[j]:
                fidelity[j] = f
    return AblationResult(rel, dict(sorted(fidelity.items())), sampled, total)


def write_explanations(explanations: Iterable[ExplanationSet], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for e in explanations:
            fh.write(json.dumps(e.to_record(), ensure_ascii=False) + "\n")


def read_explanations(path) -> list[ExplanationSet]:
    with open(path, encoding="utf-8") as fh:
        return [ExplanationSet.from_record(json.loads(line)) for line in fh if line.strip()]
