"""Loading and writing corpora, topics, qrels, sub-document relevance, runs and reports.

File formats
------------
corpus / queries (jsonl)  one object per line with keys ``id`` and ``text``
corpus / queries (tsv)    ``<id>\\t<text>`` per line
qrels                     ``<qid> <iter> <docid> <grade>``
run                       ``<qid> Q0 <docid> <rank> <score> <tag>``
sub-doc relevance (jsonl) ``{"query_id", "doc_id", "passages": [...]}``
human spans (jsonl)       ``{"query_id", "doc_id", "spans": [...]}``
"""
from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import IntegrityError, ParseError

logger = logging.getLogger(__name__)

SCORE_DIGITS = 6
NULL_MARKER = "NA"


@dataclass(frozen=True)
class Document:
    doc_id: str
    text: str


@dataclass(frozen=True)
class Query:
    query_id: str
    text: str


@dataclass(frozen=True)
class RankedEntry:
    doc_id: str
    score: float
    rank: int


@dataclass(frozen=True)
class RankedList:
    query_id: str
    entries: tuple[RankedEntry, ...]

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))
        seen = set()
        prev = math.inf
        for pos, e in enumerate(self.entries, 1):
            if e.rank != pos:
                raise IntegrityError(
                    f"query {self.query_id}: ranks must be 1..k consecutive, got {e.rank} at position {pos}")
            if e.doc_id in seen:
                raise IntegrityError(f"query {self.query_id}: duplicate doc_id {e.doc_id}")
            if e.score > prev:
                raise IntegrityError(f"query {self.query_id}: scores increase at rank {e.rank}")
            seen.add(e.doc_id)
            prev = e.score

    @classmethod
    def from_scores(cls, query_id: str, scored: Iterable[tuple[str, float]], k: int | None = None) -> "RankedList":
        """Sort ``(doc_id, score)`` pairs by descending score, ties by ascending doc_id."""
        ordered = sorted(scored, key=lambda p: (-p[1], p[0]))
        if k is not None:
            ordered = ordered[:k]
        return cls(query_id, tuple(RankedEntry(d, float(s), r) for r, (d, s) in enumerate(ordered, 1)))

    @property
    def doc_ids(self) -> list[str]:
        return [e.doc_id for e in self.entries]

    def top(self, k: int) -> "RankedList":
        return RankedList(self.query_id, self.entries[:k])

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)


@dataclass
class RelevanceStore:
    """Graded document qrels plus passage- and span-level relevance.

    ``relevant_passages[(qid, docid)]`` is ``R(D)``; an empty list (or a
    missing key) means the document carries no sub-document relevance.
    """

    doc_grades: dict[tuple[str, str], int] = field(default_factory=dict)
    relevant_passages: dict[tuple[str, str], list[str]] = field(default_factory=dict)
    human_spans: dict[tuple[str, str], list[str]] = field(default_factory=dict)
    max_grade: int | None = None

    def grade(self, query_id: str, doc_id: str) -> int:
        return self.doc_grades.get((query_id, doc_id), 0)

    def grades_for(self, query_id: str) -> dict[str, int]:
        return {d: g for (q, d), g in self.doc_grades.items() if q == query_id}

    def is_relevant(self, query_id: str, doc_id: str, threshold: int = 1) -> bool:
        return self.grade(query_id, doc_id) >= threshold

    def passages(self, query_id: str, doc_id: str) -> list[str]:
        return self.relevant_passages.get((query_id, doc_id), [])

    def spans(self, query_id: str, doc_id: str) -> list[str]:
        return self.human_spans.get((query_id, doc_id), [])

    @property
    def has_grades(self) -> bool:
        return bool(self.doc_grades)

    @property
    def has_passages(self) -> bool:
        return bool(self.relevant_passages)

    @property
    def has_spans(self) -> bool:
        return bool(self.human_spans)


def _read_lines(path):
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n").rstrip("\r")
            if line.strip():
                yield lineno, line


def _guess_format(path) -> str:
    suffix = Path(path).suffix.lower()
    if suffix in (".tsv", ".txt", ".tab"):
        return "tsv"
    return "jsonl"


def _load_id_text(path, fmt, id_keys):
    fmt = fmt or _guess_format(path)
    if fmt not in ("jsonl", "tsv"):
        raise ValueError(f"unknown format {fmt!r}; expected 'jsonl' or 'tsv'")
    records = []
    for lineno, line in _read_lines(path):
        if fmt == "jsonl":
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON ({exc.msg})", path, lineno) from None
            if not isinstance(obj, dict):
                raise ParseError("expected a JSON object", path, lineno)
            rid = next((obj[k] for k in id_keys if k in obj), None)
            text = obj.get("text")
            if rid is None or not isinstance(text, str):
                raise ParseError(f"record needs keys {id_keys[0]!r} and 'text'", path, lineno)
        else:
            parts = line.split("\t", 1)
            if len(parts) != 2:
                raise ParseError("expected '<id>\\t<text>'", path, lineno)
            rid, text = parts
        rid = str(rid)
        if not rid:
            raise ParseError("empty id", path, lineno)
        records.append((lineno, rid, text))
    return records


def load_corpus(path, format: str | None = None) -> dict[str, Document]:
    """Load a corpus as an insertion-ordered ``doc_id -> Document`` map.

    Raises ParseError on malformed lines and IntegrityError on duplicate ids.
    """
    corpus: dict[str, Document] = {}
    for lineno, doc_id, text in _load_id_text(path, format, ("id", "doc_id", "docid")):
        if doc_id in corpus:
            raise IntegrityError(f"{path}:{lineno}: duplicate doc_id {doc_id!r}")
        corpus[doc_id] = Document(doc_id, text)
    return corpus


def load_queries(path, format: str | None = None) -> dict[str, Query]:
    queries: dict[str, Query] = {}
    for lineno, qid, text in _load_id_text(path, format, ("id", "query_id", "qid")):
        if qid in queries:
            raise IntegrityError(f"{path}:{lineno}: duplicate query_id {qid!r}")
        if not text.strip():
            raise ParseError(f"query {qid!r} has empty text", path, lineno)
        queries[qid] = Query(qid, text)
    return queries


def load_qrels(path, store: RelevanceStore | None = None, max_grade: int | None = None) -> RelevanceStore:
    """Read 4-column qrels. Repeated (qid, docid) pairs keep the last grade."""
    store = store if store is not None else RelevanceStore()
    if max_grade is not None:
        store.max_grade = max_grade
    for lineno, line in _read_lines(path):
        cols = line.split()
        if len(cols) != 4:
            raise ParseError(f"expected 4 columns, got {len(cols)}", path, lineno)
        qid, _, docid, grade_s = cols
        try:
            grade = int(grade_s)
        except ValueError:
            raise ParseError(f"non-integer grade {grade_s!r}", path, lineno) from None
        if grade < 0:
            raise ParseError(f"negative grade {grade}", path, lineno)
        if store.max_grade is not None and grade > store.max_grade:
            raise ParseError(f"grade {grade} exceeds declared maximum {store.max_grade}", path, lineno)
        key = (qid, docid)
        if key in store.doc_grades:
            logger.warning("%s:%d: duplicate qrels entry for (%s, %s); keeping last grade %d",
                           path, lineno, qid, docid, grade)
        store.doc_grades[key] = grade
    return store


def _load_text_lists(path, list_key, corpus):
    out: dict[tuple[str, str], list[str]] = {}
    for lineno, line in _read_lines(path):
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON ({exc.msg})", path, lineno) from None
        if not isinstance(obj, dict):
            raise ParseError("expected a JSON object", path, lineno)
        for key in ("query_id", "doc_id", list_key):
            if key not in obj:
                raise ParseError(f"missing field {key!r}", path, lineno)
        items = obj[list_key]
        if not isinstance(items, list) or not all(isinstance(t, str) for t in items):
            raise ParseError(f"{list_key!r} must be an array of strings", path, lineno)
        qid, docid = str(obj["query_id"]), str(obj["doc_id"])
        if corpus is not None and docid not in corpus:
            logger.warning("%s:%d: doc_id %r not in the loaded corpus; record kept", path, lineno, docid)
        out[(qid, docid)] = list(items)
    return out


def load_subdoc_relevance(path, store: RelevanceStore | None = None,
                          corpus: Mapping[str, Document] | None = None) -> RelevanceStore:
    store = store if store is not None else RelevanceStore()
    store.relevant_passages.update(_load_text_lists(path, "passages", corpus))
    return store


def load_human_spans(path, store: RelevanceStore | None = None,
                     corpus: Mapping[str, Document] | None = None) -> RelevanceStore:
    store = store if store is not None else RelevanceStore()
    store.human_spans.update(_load_text_lists(path, "spans", corpus))
    return store


def read_run(path) -> dict[str, RankedList]:
    """Parse a 6-column run file into validated ranked lists keyed by query id."""
    rows: dict[str, list[RankedEntry]] = {}
    for lineno, line in _read_lines(path):
        cols = line.split()
        if len(cols) != 6:
            raise ParseError(f"expected 6 columns, got {len(cols)}", path, lineno)
        qid, _, docid, rank_s, score_s, _tag = cols
        try:
            rank = int(rank_s)
            score = float(score_s)
        except ValueError:
            raise ParseError(f"bad rank/score columns {rank_s!r} {score_s!r}", path, lineno) from None
        if not math.isfinite(score):
            raise ParseError(f"non-finite score {score_s!r}", path, lineno)
        rows.setdefault(qid, []).append(RankedEntry(docid, score, rank))
    return {qid: RankedList(qid, tuple(sorted(entries, key=lambda e: e.rank)))
            for qid, entries in rows.items()}


def format_score(score: float) -> str:
    return f"{score:.{SCORE_DIGITS}f}"


def write_run(runs: Mapping[str, RankedList] | Sequence[RankedList], path, tag: str = "xrank") -> None:
    if isinstance(runs, Mapping):
        runs = list(runs.values())
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for ranked in runs:
            for e in sorted(ranked.entries, key=lambda e: e.rank):
                fh.write(f"{ranked.query_id} Q0 {e.doc_id} {e.rank} {format_score(e.score)} {tag}\n")


def write_report(report, path, format: str | None = None) -> None:
    """Write an :class:`~xrank.metrics.EvalReport` as json or tsv.

    The tsv carries one row per query followed by an ``all`` row with the
    aggregates; missing metrics are written as ``NA``.
    """
    fmt = format or ("tsv" if str(path).endswith(".tsv") else "json")
    if fmt == "json":
        text = report.to_json()
    elif fmt == "tsv":
        text = report.to_tsv()
    else:
        raise ValueError(f"unknown report format {fmt!r}")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
