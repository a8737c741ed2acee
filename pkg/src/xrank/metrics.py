"""Relevance and explainability measures.

MRC (mean rank correlation) asks whether a model ranks the pseudo-documents
built from its own rationales in the same order as the full documents.  MER
(mean explanation relevance) asks whether the rationales land on the
passages that make a document relevant.  Consistency pooling and Jaccard
overlap cover the span-ablation and human-annotation views.
"""
from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from typing import Iterable, Mapping, Sequence

import numpy as np

from .corpus_io import NULL_MARKER, RankedList, RelevanceStore
from .errors import IntegrityError, UndefinedCorrelationError
from .segmentation import terms

METRIC_NAMES = ("ndcg", "mrc", "mer", "sc", "jaccard")


def load_stopwords(path=None) -> frozenset[str]:
    if path is None:
        raw = resources.files("xrank").joinpath("data/stopwords.txt").read_text(encoding="utf-8")
    else:
        with open(path, encoding="utf-8") as fh:
            raw = fh.read()
    return frozenset(line.strip().lower() for line in raw.splitlines() if line.strip())


@lru_cache(maxsize=1)
def default_stopwords() -> frozenset[str]:
    return load_stopwords()


# -- rank correlation -------------------------------------------------------

@dataclass(frozen=True)
class TauResult:
    tau: float
    concordant: int
    discordant: int
    tied_pairs: int
    ties_a: int = 0
    ties_b: int = 0


def _as_scores(order) -> dict:
    """A ranking (best first) or an item -> score mapping, as item -> score."""
    if isinstance(order, Mapping):
        return dict(order)
    items = list(order)
    if len(set(items)) != len(items):
        raise ValueError("a ranking must not repeat items")
    return {item: -float(pos) for pos, item in enumerate(items)}


def kendall_tau(order_a, order_b) -> TauResult:
    """Kendall's tau-b between two rankings of the same items.

    Each argument is either a sequence (best item first, no ties) or a
    mapping ``item -> score`` where higher scores rank higher and equal
    scores are ties.
    """
    a, b = _as_scores(order_a), _as_scores(order_b)
    if set(a) != set(b):
        raise ValueError("rankings must cover the identical item set")
    if len(a) < 2:
        raise UndefinedCorrelationError("rank correlation needs at least 2 items")
    items = list(a)
    xa = np.array([a[i] for i in items], dtype=float)
    xb = np.array([b[i] for i in items], dtype=float)
    iu = np.triu_indices(len(items), k=1)
    sa = np.sign(xa[:, None] - xa[None, :])[iu]
    sb = np.sign(xb[:, None] - xb[None, :])[iu]
    prod = sa * sb
    concordant = int(np.count_nonzero(prod > 0))
    discordant = int(np.count_nonzero(prod < 0))
    ties_a = int(np.count_nonzero(sa == 0))
    ties_b = int(np.count_nonzero(sb == 0))
    tied = int(np.count_nonzero(prod == 0))
    n0 = len(sa)
    denom = math.sqrt((n0 - ties_a) * (n0 - ties_b))
    if denom == 0:
        raise UndefinedCorrelationError("rank correlation is undefined when one ranking is all ties")
    return TauResult((concordant - discordant) / denom, concordant, discordant, tied, ties_a, ties_b)


@dataclass
class MRCResult:
    mrc: float | None
    per_query: dict[str, float]
    excluded_queries: list[str]
    excluded_docs: dict[str, list[str]]


def mrc(original_lists: Mapping[str, RankedList], rescored: Mapping[tuple[str, str], float | None],
        break_ties: bool = True) -> MRCResult:
    """Mean over queries of Kendall's tau between original and pseudo-document rankings.

    ``rescored[(qid, docid)]`` is the pseudo-document score, or ``None`` for a
    document flagged degenerate; such documents are left out of that query's
    correlation.  Queries with fewer than 2 scorable documents are excluded.
    With ``break_ties`` the pseudo ranking orders equal scores by doc_id.
    """
    per_query: dict[str, float] = {}
    excluded_q: list[str] = []
    excluded_d: dict[str, list[str]] = {}
    for qid, ranked in original_lists.items():
        kept, dropped = [], []
        for doc_id in ranked.doc_ids:
            key = (qid, doc_id)
            if key not in rescored:
                raise IntegrityError(f"no pseudo-document score or degenerate flag for {key}")
            (dropped if rescored[key] is None else kept).append(doc_id)
        if dropped:
            excluded_d[qid] = dropped
        if len(kept) < 2:
            excluded_q.append(qid)
            continue
        pseudo = {d: rescored[(qid, d)] for d in kept}
        if break_ties:
            other = sorted(kept, key=lambda d: (-pseudo[d], d))
        else:
            other = pseudo
        try:
            per_query[qid] = kendall_tau(kept, other).tau
        except UndefinedCorrelationError:
            excluded_q.append(qid)
    value = float(np.mean([per_query[q] for q in original_lists if q in per_query])) if per_query else None
    return MRCResult(value, per_query, excluded_q, excluded_d)


def pearson_r(x: Sequence[float], y: Sequence[float]) -> float:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.size < 2:
        raise ValueError("pearson_r needs two equal-length sequences of at least 2 values")
    dx, dy = x - x.mean(), y - y.mean()
    denom = math.sqrt(float(dx @ dx) * float(dy @ dy))
    if denom == 0:
        raise UndefinedCorrelationError("pearson correlation undefined for a constant sequence")
    return float(dx @ dy) / denom


# -- text similarity --------------------------------------------------------

def cosine_similarity(text_a: str, text_b: str, stopwords: Iterable[str] | None = None) -> float:
    """Cosine of term-frequency vectors after stopword removal; 0 if either is empty."""
    stop = default_stopwords() if stopwords is None else frozenset(stopwords)
    va = Counter(t for t in terms(text_a) if t not in stop)
    vb = Counter(t for t in terms(text_b) if t not in stop)
    if not va or not vb:
        return 0.0
    dot = sum(c * vb.get(t, 0) for t, c in va.items())
    if dot == 0:
        return 0.0
    na = sum(c * c for c in va.values())
    nb = sum(c * c for c in vb.values())
    return min(1.0, dot / math.sqrt(na * nb))


def jaccard_spans(machine, human_spans: Sequence[str] | None) -> float:
    """Jaccard overlap of the token sets of machine rationales and human spans.

    ``machine`` is an ExplanationSet or a list of span texts.  Without human
    spans the overlap is 0.
    """
    if not human_spans:
        return 0.0
    texts = machine.texts if hasattr(machine, "texts") else list(machine)
    e = {t for s in texts for t in terms(s)}
    h = {t for s in human_spans for t in terms(s)}
    union = e | h
    if not union:
        return 0.0
    return len(e & h) / len(union)


# -- explanation relevance --------------------------------------------------

@dataclass
class MERResult:
    mer: float
    per_query: dict[str, float]


def mer(explanations: Mapping[tuple[str, str], object], relevance: RelevanceStore, k: int, m: int,
        runs: Mapping[str, RankedList], stopwords: Iterable[str] | None = None) -> MERResult:
    """Mean over queries, top-k documents and m rationale slots of the best cosine to a relevant passage.

    Documents without relevant passages, and empty rationale slots, add 0
    while the normalisation stays ``m * k`` per query.
    """
    if k < 1 or m < 1:
        raise ValueError("k and m must be >= 1")
    stop = default_stopwords() if stopwords is None else frozenset(stopwords)
    per_query: dict[str, float] = {}
    for qid, ranked in runs.items():
        total = 0.0
        for doc_id in ranked.doc_ids[:k]:
            key = (qid, doc_id)
            if key not in explanations:
                raise IntegrityError(f"missing explanation for top-{k} document {key}")
            passages = relevance.passages(qid, doc_id)
            if not passages:
                continue
            rats = explanations[key]
            texts = rats.texts if hasattr(rats, "texts") else list(rats)
            for text in texts[:m]:
                total += max(cosine_similarity(text, p, stop) for p in passages)
        per_query[qid] = total / (m * k)
    value = float(np.mean(list(per_query.values()))) if per_query else 0.0
    return MERResult(value, per_query)


# -- graded relevance -------------------------------------------------------

def ndcg_at_k(ranked: RankedList | Sequence[str], grades: Mapping[str, int], k: int) -> float:
    """nDCG@k with gain 2^g - 1 and discount 1/log2(rank + 1).

    The ideal ranking is built from every judged document in ``grades``.
    Returns 0 when no judged document is relevant (see :func:`ndcg_defined`).
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    doc_ids = ranked.doc_ids if isinstance(ranked, RankedList) else list(ranked)
    dcg = sum((2.0 ** grades.get(d, 0) - 1.0) / math.log2(r + 1) for r, d in enumerate(doc_ids[:k], 1))
    ideal = sorted((g for g in grades.values() if g > 0), reverse=True)[:k]
    idcg = sum((2.0 ** g - 1.0) / math.log2(r + 1) for r, g in enumerate(ideal, 1))
    if idcg == 0:
        return 0.0
    return dcg / idcg


def ndcg_defined(grades: Mapping[str, int]) -> bool:
    return any(g > 0 for g in grades.values())


# -- consistency pooling ----------------------------------------------------

@dataclass
class ConsistencyResult:
    per_doc: dict
    s_c: float | None
    excluded: int


def consistency_pool(masked_scores: Mapping[object, Sequence[float] | Mapping[object, float]]) -> ConsistencyResult:
    """C_i = mean of a document's masked relative scores; S_c = mean of the C_i."""
    per_doc = {}
    excluded = 0
    for doc, scores in masked_scores.items():
        vals = list(scores.values()) if isinstance(scores, Mapping) else list(scores)
        if not vals:
            excluded += 1
            continue
        per_doc[doc] = float(np.mean(vals))
    s_c = float(np.mean(list(per_doc.values()))) if per_doc else None
    return ConsistencyResult(per_doc, s_c, excluded)


# -- report -----------------------------------------------------------------

def _mean(values):
    vals = [v for v in values if v is not None]
    return float(np.mean(vals)) if vals else None


@dataclass
class EvalReport:
    """Per-query and aggregate metric values plus the parameters that produced them.

    ``per_query[qid]`` maps metric name to value (``None`` = not computed).
    Aggregates are means over the queries with a value for that metric.
    """

    per_query: dict[str, dict] = field(default_factory=dict)
    params: dict = field(default_factory=dict)
    exclusions: dict = field(default_factory=dict)
    metrics: tuple[str, ...] = METRIC_NAMES
    aggregates: dict = field(default_factory=dict)

    COLUMNS = ("ndcg", "mrc", "mer", "sc", "jaccard", "fidelity")

    def compute_aggregates(self) -> dict:
        agg = {}
        for col in self.COLUMNS:
            agg[col] = _mean(row.get(col) for row in self.per_query.values())
        agg["num_queries"] = len(self.per_query)
        agg["n_docs"] = sum(row.get("n_docs") or 0 for row in self.per_query.values())
        self.aggregates = agg
        return agg

    def to_dict(self) -> dict:
        if not self.aggregates:
            self.compute_aggregates()
        return {
            "params": self.params,
            "metrics": list(self.metrics),
            "aggregates": {c: self.aggregates.get(c) for c in (*self.COLUMNS, "num_queries", "n_docs")},
            "per_query": {q: {c: row.get(c) for c in (*self.COLUMNS, "n_docs", "excluded_docs")}
                          for q, row in self.per_query.items()},
            "exclusions": self.exclusions,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, ensure_ascii=False, allow_nan=False) + "\n"

    @classmethod
    def from_dict(cls, data: dict) -> "EvalReport":
        rep = cls(per_query={q: dict(r) for q, r in data["per_query"].items()},
                  params=data.get("params", {}), exclusions=data.get("exclusions", {}),
                  metrics=tuple(data.get("metrics", METRIC_NAMES)))
        rep.aggregates = dict(data.get("aggregates", {}))
        return rep

    @classmethod
    def load(cls, path) -> "EvalReport":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def to_tsv(self) -> str:
        if not self.aggregates:
            self.compute_aggregates()

        def fmt(v):
            if v is None:
                return NULL_MARKER
            if isinstance(v, float):
                return repr(v)
            return str(v)

        lines = ["\t".join(("query_id", *self.COLUMNS, "n_docs"))]
        for q, row in self.per_query.items():
            lines.append("\t".join([q, *(fmt(row.get(c)) for c in self.COLUMNS), fmt(row.get("n_docs"))]))
        lines.append("\t".join(["all", *(fmt(self.aggregates.get(c)) for c in self.COLUMNS),
                                fmt(self.aggregates.get("n_docs"))]))
        return "\n".join(lines) + "\n"
