"""Small corpora for tests and demonstrations.

``fixture_*``  the bundled 8-document / 3-query corpus with qrels,
               sub-document relevance and human spans.
``planted``    a generated corpus in which every relevant document holds
               exactly one sentence containing all query terms, and no other
               sentence of it contains any query term.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .corpus_io import Document, Query, RelevanceStore
from .metrics import default_stopwords

_FIXTURE_FILES = ("corpus.jsonl", "queries.jsonl", "qrels.txt", "subdoc.jsonl", "spans.jsonl", "config.toml")


def fixture_dir() -> Path:
    return Path(str(resources.files("xrank").joinpath("data/fixture")))


def fixture_paths() -> dict[str, str]:
    d = fixture_dir()
    return {
        "corpus": str(d / "corpus.jsonl"),
        "queries": str(d / "queries.jsonl"),
        "qrels": str(d / "qrels.txt"),
        "subdoc": str(d / "subdoc.jsonl"),
        "spans": str(d / "spans.jsonl"),
    }


def fixture_config(**overrides):
    """RunConfig over the bundled fixture (k=5, depth=100, seed=13 unless overridden)."""
    from .pipeline import RunConfig
    return RunConfig.from_toml(fixture_dir() / "config.toml", **overrides)


_SYLLABLES = ["ka", "lo", "mi", "ru", "te", "sa", "vo", "ne", "pi", "du", "ge", "zo", "fa", "xi", "bo", "ly"]


def _words(rng, n, taken):
    out = []
    while len(out) < n:
        w = "".join(rng.choice(_SYLLABLES, size=int(rng.integers(2, 4))))
        if w not in taken:
            taken.add(w)
            out.append(w)
    return out


def _sentence(rng, words):
    words = list(words)
    words[0] = words[0].capitalize()
    return " ".join(words) + "."


@dataclass
class PlantedCorpus:
    corpus: dict[str, Document]
    queries: dict[str, Query]
    relevance: RelevanceStore
    planted: dict[tuple[str, str], str] = field(default_factory=dict)
    relevant: dict[str, list[str]] = field(default_factory=dict)

    @property
    def max_sentences(self) -> int:
        from .segmentation import split_sentences
        return max(len(split_sentences(d.text)) for d in self.corpus.values())

    def write(self, directory) -> dict[str, str]:
        """Write corpus, queries, qrels and sub-document relevance files; return their paths."""
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        paths = {k: str(d / f) for k, f in (("corpus", "corpus.jsonl"), ("queries", "queries.jsonl"),
                                             ("qrels", "qrels.txt"), ("subdoc", "subdoc.jsonl"))}
        with open(paths["corpus"], "w", encoding="utf-8") as fh:
            for doc in self.corpus.values():
                fh.write(json.dumps({"id": doc.doc_id, "text": doc.text}) + "\n")
        with open(paths["queries"], "w", encoding="utf-8") as fh:
            for q in self.queries.values():
                fh.write(json.dumps({"id": q.query_id, "text": q.text}) + "\n")
        with open(paths["qrels"], "w", encoding="utf-8") as fh:
            for (q, doc_id), g in self.relevance.doc_grades.items():
                fh.write(f"{q} 0 {doc_id} {g}\n")
        with open(paths["subdoc"], "w", encoding="utf-8") as fh:
            for (q, doc_id), ps in self.relevance.relevant_passages.items():
                fh.write(json.dumps({"query_id": q, "doc_id": doc_id, "passages": ps}) + "\n")
        return paths


def planted(n_queries: int = 3, relevant_per_query: int = 4, partial_per_query: int = 3,
            terms_per_query: int = 3, seed: int = 0) -> PlantedCorpus:
    """Generate a planted-signal corpus.

    Relevant documents mix 2-5 filler sentences with one sentence holding
    every query term.  "Partial" documents contain a single query term so they
    are retrieved but rank below the relevant ones.  Filler vocabulary never
    overlaps any query's terms or the stopword list.
    """
    rng = np.random.default_rng(seed)
    taken = set(default_stopwords())
    corpus: dict[str, Document] = {}
    queries: dict[str, Query] = {}
    rel = RelevanceStore()
    planted_map: dict[tuple[str, str], str] = {}
    relevant: dict[str, list[str]] = {}
    qterms = {f"q{i + 1}": _words(rng, terms_per_query, taken) for i in range(n_queries)}
    filler = _words(rng, 120, taken)

    def filler_sentence():
        return _sentence(rng, rng.choice(filler, size=int(rng.integers(4, 9)), replace=False))

    for qid, qt in qterms.items():
        queries[qid] = Query(qid, " ".join(qt))
        relevant[qid] = []
        for j in range(relevant_per_query):
            doc_id = f"{qid}-rel{j}"
            extra = rng.choice(filler, size=int(rng.integers(1, 4)), replace=False)
            words = list(qt) + list(extra)
            rng.shuffle(words)
            key = _sentence(rng, words)
            sents = [filler_sentence() for _ in range(int(rng.integers(2, 6)))]
            sents.insert(int(rng.integers(0, len(sents) + 1)), key)
            corpus[doc_id] = Document(doc_id, " ".join(sents))
            planted_map[(qid, doc_id)] = key
            relevant[qid].append(doc_id)
            rel.doc_grades[(qid, doc_id)] = 1
            rel.relevant_passages[(qid, doc_id)] = [key]
        for j in range(partial_per_query):
            doc_id = f"{qid}-part{j}"
            sents = [filler_sentence() for _ in range(int(rng.integers(2, 5)))]
            words = [qt[j % len(qt)], *rng.choice(filler, size=4, replace=False)]
            sents.insert(0, _sentence(rng, words))
            corpus[doc_id] = Document(doc_id, " ".join(sents))
            rel.doc_grades[(qid, doc_id)] = 0
            rel.relevant_passages[(qid, doc_id)] = []
    return PlantedCorpus(corpus, queries, rel, planted_map, relevant)
