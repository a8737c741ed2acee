"""End-to-end evaluation: retrieve, rerank, explain, rescore pseudo-documents, measure, report."""
from __future__ import annotations

import dataclasses
import hashlib
import json
import logging
import os
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import metrics as M
from .corpus_io import (Document, Query, RankedList, RelevanceStore, load_corpus, load_human_spans,
                        load_qrels, load_queries, load_subdoc_relevance, read_run, write_report)
from .errors import IntegrityError, ScorerError, XRankError
from .rationales import (GREEDY, SAMPLED, ExplanationSet, ablate_combinations, build_pseudo_document,
                         explain_greedy, explain_sampled, write_explanations)
from .scoring import (BM25Params, BM25Scorer, ExternalScorer, Scorer, build_index, load_index,
                      retrieve_topk, score_batch, score_texts)
from .segmentation import GRANULARITIES, SENTENCE, WORD_WINDOW, load_abbreviations

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

logger = logging.getLogger(__name__)

WORKERS_ENV = "XRANK_WORKERS"


@dataclass
class RunConfig:
    corpus: str | None = None
    queries: str | None = None
    qrels: str | None = None
    subdoc: str | None = None
    spans: str | None = None
    run_file: str | None = None
    index_file: str | None = None
    corpus_format: str | None = None

    scorer: str = "bm25"
    scorer_cmd: str | None = None
    scorer_addr: str | None = None
    scorer_timeout: float = 60.0
    scorer_max_batch: int = 64
    bm25_k1: float = 1.2
    bm25_b: float = 0.75

    k: int = 10
    depth: int = 1000
    explainer: str = SAMPLED
    granularity: str = WORD_WINDOW
    m: int = 5
    w: int = 5
    stride: int | None = None
    n_per_sample: int = 1
    num_samples: int | None = None
    exhaustive: bool = False
    normalize: str = "sum"
    chunk_size: int = 3
    score_chunk_size: int | None = None
    chunk_threshold: int | None = None
    fidelity_m_max: int = 2
    combination_budget: int = 1024
    seed: int = 0

    metrics: tuple[str, ...] = M.METRIC_NAMES
    abbrev_file: str | None = None
    stopwords_file: str | None = None

    out_dir: str | None = None
    checkpoint: bool = True
    cache: bool = True
    workers: int = 1

    m_list: tuple[int, ...] = ()
    w_list: tuple[int, ...] = ()

    _PATH_FIELDS = ("corpus", "queries", "qrels", "subdoc", "spans", "run_file", "index_file", "abbrev_file",
                    "stopwords_file")
    # fields that never change a report value
    _NON_SEMANTIC = ("out_dir", "checkpoint", "cache", "workers", "m_list", "w_list", "scorer_timeout",
                     "scorer_max_batch")

    def __post_init__(self):
        if isinstance(self.metrics, str):
            self.metrics = tuple(x.strip() for x in self.metrics.split(",") if x.strip())
        self.metrics = tuple(self.metrics)
        self.m_list = tuple(self.m_list)
        self.w_list = tuple(self.w_list)
        self.validate()

    def validate(self):
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if self.m < 1:
            raise ValueError(f"m must be >= 1, got {self.m}")
        if self.depth < self.k:
            raise ValueError(f"depth ({self.depth}) must be >= k ({self.k})")
        if self.explainer not in (SAMPLED, GREEDY):
            raise ValueError(f"explainer must be {SAMPLED!r} or {GREEDY!r}")
        if self.granularity not in GRANULARITIES:
            raise ValueError(f"granularity must be one of {GRANULARITIES}")
        unknown = set(self.metrics) - set(M.METRIC_NAMES)
        if unknown:
            raise ValueError(f"unknown metrics {sorted(unknown)}; choose from {M.METRIC_NAMES}")
        if any(v < 1 for v in (*self.m_list, *self.w_list)):
            raise ValueError("sweep values must be >= 1")
        if sum(x is not None for x in (self.scorer_cmd, self.scorer_addr)) > 1:
            raise ValueError("give at most one of scorer_cmd / scorer_addr")

    @classmethod
    def from_toml(cls, path, **overrides) -> "RunConfig":
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
        base = Path(path).resolve().parent
        for key in cls._PATH_FIELDS:
            if isinstance(data.get(key), str) and not Path(data[key]).is_absolute():
                data[key] = str(base / data[key])
        data.update({k: v for k, v in overrides.items() if v is not None})
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ValueError(f"{path}: unknown config keys {sorted(unknown)}")
        return cls(**data)

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)

    @property
    def effective_explainer_granularity(self) -> str:
        return SENTENCE if self.explainer == GREEDY else self.granularity

    def semantic_dict(self) -> dict:
        d = dataclasses.asdict(self)
        for key in self._NON_SEMANTIC:
            d.pop(key, None)
        d["metrics"] = list(self.metrics)
        return d

    def config_hash(self) -> str:
        blob = json.dumps(self.semantic_dict(), sort_keys=True, default=str).encode("utf-8")
        return hashlib.sha256(blob).hexdigest()[:16]


class PipelineAbort(XRankError, RuntimeError):
    """A run failed after it started; ``checkpoint`` names the partial-progress file, if any."""

    def __init__(self, message, checkpoint=None):
        self.checkpoint = checkpoint
        super().__init__(message)


class ScoreCache:
    """Thread-safe map (scorer fingerprint, query hash, text hash) -> score."""

    def __init__(self):
        self._data: dict[tuple[str, str, str], float] = {}
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0

    @staticmethod
    def _h(text: str) -> str:
        return hashlib.blake2b(text.encode("utf-8"), digest_size=16).hexdigest()

    def key(self, fingerprint: str, query_text: str, text: str):
        return fingerprint, self._h(query_text), self._h(text)

    def get(self, key):
        with self._lock:
            val = self._data.get(key)
            if val is None:
                self.misses += 1
            else:
                self.hits += 1
            return val

    def put(self, key, value: float):
        with self._lock:
            self._data[key] = value

    def __len__(self):
        return len(self._data)


class CachedScorer(Scorer):
    """Scorer wrapper that answers repeated (query, text) pairs from a ScoreCache."""

    def __init__(self, inner: Scorer, cache: ScoreCache | None = None):
        self.inner = inner
        self.cache = cache if cache is not None else ScoreCache()
        self.kind = inner.kind
        self.deterministic = inner.deterministic

    @property
    def fingerprint(self) -> str:
        return self.inner.fingerprint

    def _score_batch(self, query_text, texts):
        fp = self.inner.fingerprint
        keys = [self.cache.key(fp, query_text, t) for t in texts]
        out = [self.cache.get(k) for k in keys]
        missing = list(dict.fromkeys(t for t, v in zip(texts, out) if v is None))
        if missing:
            fresh = dict(zip(missing, score_batch(self.inner, query_text, missing)))
            for i, (t, v) in enumerate(zip(texts, out)):
                if v is None:
                    out[i] = fresh[t]
                    self.cache.put(keys[i], fresh[t])
        return out

    def close(self):
        self.inner.close()


def make_scorer(config: RunConfig, index=None) -> Scorer:
    if config.scorer_cmd:
        return ExternalScorer(argv=config.scorer_cmd, timeout=config.scorer_timeout,
                              max_batch=config.scorer_max_batch)
    if config.scorer_addr:
        return ExternalScorer(addr=config.scorer_addr, timeout=config.scorer_timeout,
                              max_batch=config.scorer_max_batch)
    if config.scorer != "bm25":
        raise ValueError(f"unknown scorer {config.scorer!r}; use bm25, scorer_cmd or scorer_addr")
    if index is None:
        raise ValueError("the bm25 scorer needs an index")
    return BM25Scorer(index, BM25Params(config.bm25_k1, config.bm25_b))


def effective_workers(requested: int) -> int:
    cap = os.environ.get(WORKERS_ENV)
    n = max(1, int(requested))
    if cap:
        n = min(n, max(1, int(cap)))
    return n


def derive_seed(seed: int, query_id: str, doc_id: str) -> int:
    digest = hashlib.sha256(f"{seed}\x00{query_id}\x00{doc_id}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


@dataclass
class Inputs:
    corpus: dict[str, Document]
    queries: dict[str, Query]
    relevance: RelevanceStore = field(default_factory=RelevanceStore)
    run: dict[str, RankedList] | None = None

    @classmethod
    def load(cls, config: RunConfig) -> "Inputs":
        if not config.corpus or not config.queries:
            raise ValueError("config needs both corpus and queries paths")
        corpus = load_corpus(config.corpus, config.corpus_format)
        queries = load_queries(config.queries)
        rel = RelevanceStore()
        if config.qrels:
            load_qrels(config.qrels, rel)
        if config.subdoc:
            if Path(config.subdoc).exists():
                load_subdoc_relevance(config.subdoc, rel, corpus)
            else:
                logger.warning("sub-document relevance file %s not found; MER will be null", config.subdoc)
        if config.spans:
            if Path(config.spans).exists():
                load_human_spans(config.spans, rel, corpus)
            else:
                logger.warning("human span file %s not found; Jaccard will be null", config.spans)
        run = read_run(config.run_file) if config.run_file else None
        return cls(corpus, queries, rel, run)


class _Checkpoint:
    def __init__(self, path: Path | None):
        self.path = path
        self._lock = threading.Lock()
        self.done: dict[tuple[str, str], ExplanationSet] = {}
        if path is not None and path.exists():
            with open(path, encoding="utf-8") as fh:
                for line in fh:
                    if line.strip():
                        try:
                            e = ExplanationSet.from_record(json.loads(line))
                        except (json.JSONDecodeError, KeyError):
                            break  # torn final line from an interrupted write
                        self.done[(e.query_id, e.doc_id)] = e
            logger.info("resuming from %s with %d explanations", path, len(self.done))

    def add(self, e: ExplanationSet):
        if self.path is None:
            return
        with self._lock:
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(e.to_record(), ensure_ascii=False) + "\n")

    def clear(self):
        if self.path is not None and self.path.exists():
            self.path.unlink()


def _rerank(config, inputs, scorer, index) -> dict[str, RankedList]:
    params = BM25Params(config.bm25_k1, config.bm25_b)
    out = {}
    for qid, query in inputs.queries.items():
        if inputs.run is not None:
            cand = inputs.run.get(qid)
            cand_ids = cand.doc_ids[:config.depth] if cand is not None else []
        else:
            cand_ids = retrieve_topk(index, params, query, config.depth).doc_ids
        missing = [d for d in cand_ids if d not in inputs.corpus]
        if missing:
            raise IntegrityError(f"query {qid}: run references documents not in the corpus: {missing[:5]}")
        if not cand_ids:
            out[qid] = RankedList(qid, ())
            continue
        scores = score_texts(scorer, query.text, [inputs.corpus[d].text for d in cand_ids],
                             config.score_chunk_size, config.chunk_threshold, _abbrevs(config))
        out[qid] = RankedList.from_scores(qid, zip(cand_ids, scores), config.k)
    return out


_ABBREV_CACHE: dict[str, frozenset] = {}


def _abbrevs(config):
    if not config.abbrev_file:
        return None
    if config.abbrev_file not in _ABBREV_CACHE:
        _ABBREV_CACHE[config.abbrev_file] = load_abbreviations(config.abbrev_file)
    return _ABBREV_CACHE[config.abbrev_file]


def _explain_one(config, explain_m, query, doc, scorer) -> ExplanationSet:
    abbrevs = _abbrevs(config)
    if config.explainer == GREEDY:
        return explain_greedy(query, doc, scorer, explain_m, score_chunk_size=config.score_chunk_size,
                              chunk_threshold=config.chunk_threshold, abbreviations=abbrevs)
    return explain_sampled(query, doc, scorer, config.granularity, w=config.w,
                           n_per_sample=config.n_per_sample, num_samples=config.num_samples, m=explain_m,
                           seed=derive_seed(config.seed, query.query_id, doc.doc_id),
                           exhaustive=config.exhaustive, stride=config.stride,
                           segment_chunk_size=config.chunk_size, normalize=config.normalize,
                           score_chunk_size=config.score_chunk_size, chunk_threshold=config.chunk_threshold,
                           abbreviations=abbrevs)


def _report_params(config: RunConfig, scorer: Scorer) -> dict:
    return {
        "k": config.k,
        "m": config.m,
        "w": config.w if config.effective_explainer_granularity == WORD_WINDOW else None,
        "n": config.n_per_sample,
        "num_samples": config.num_samples,
        "exhaustive": config.exhaustive,
        "granularity": config.effective_explainer_granularity,
        "explainer": config.explainer,
        "seed": config.seed,
        "depth": config.depth,
        "stride": config.stride,
        "normalize": config.normalize,
        "chunk_size": config.chunk_size,
        "score_chunk_size": config.score_chunk_size,
        "chunk_threshold": config.chunk_threshold,
        "fidelity_m_max": config.fidelity_m_max,
        "combination_budget": config.combination_budget,
        "bm25": {"k1": config.bm25_k1, "b": config.bm25_b},
        "scorer": scorer.fingerprint,
        "first_stage": "run_file" if config.run_file else "bm25",
    }


def run_evaluation(config: RunConfig, scorer: Scorer | None = None, *, inputs: Inputs | None = None,
                   index=None, explain_m: int | None = None, explanation_cache: dict | None = None,
                   score_cache: ScoreCache | None = None) -> M.EvalReport:
    """Run one full evaluation and return its report.

    ``scorer`` overrides the scorer described by the config (the caller keeps
    ownership).  ``explain_m`` asks the explainer for more rationales than
    ``config.m`` so that callers sweeping over m can reuse the result through
    ``explanation_cache``.  When ``config.out_dir`` is set the json and tsv
    reports, the explanation dump and (while running) a checkpoint are
    written there.

    Raises PipelineAbort if the scorer fails after work has started.
    """
    inputs = inputs or Inputs.load(config)
    need_index = scorer is None and not (config.scorer_cmd or config.scorer_addr)
    need_index = need_index or inputs.run is None
    if need_index and index is None:
        index = load_index(config.index_file) if config.index_file else build_index(inputs.corpus)
    own_scorer = scorer is None
    base_scorer = make_scorer(config, index) if own_scorer else scorer
    try:
        return _run(config, inputs, base_scorer, index, explain_m or config.m, explanation_cache, score_cache)
    finally:
        if own_scorer:
            base_scorer.close()


def _run(config, inputs, base_scorer, index, explain_m, explanation_cache, score_cache):
    explain_m = max(explain_m, config.m)
    scorer = CachedScorer(base_scorer, score_cache) if config.cache else base_scorer
    out_dir = Path(config.out_dir) if config.out_dir else None
    ckpt_path = None
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        if config.checkpoint:
            ckpt_path = out_dir / f"checkpoint-{config.replace(m=explain_m).config_hash()}.jsonl"
    ckpt = _Checkpoint(ckpt_path)
    stopwords = M.load_stopwords(config.stopwords_file) if config.stopwords_file else None
    want = set(config.metrics)
    cache_key_base = (config.replace(m=1, m_list=(), w_list=()).config_hash(), explain_m)

    try:
        ranked = _rerank(config, inputs, scorer, index)

        jobs = [(qid, d) for qid, rl in ranked.items() for d in rl.doc_ids]
        explanations: dict[tuple[str, str], ExplanationSet] = {}

        def work(job):
            qid, doc_id = job
            ckey = (cache_key_base, qid, doc_id)
            if explanation_cache is not None and ckey in explanation_cache:
                return explanation_cache[ckey]
            if job in ckpt.done:
                e = ckpt.done[job]
            else:
                e = _explain_one(config, explain_m, inputs.queries[qid], inputs.corpus[doc_id], scorer)
                ckpt.add(e)
            if explanation_cache is not None:
                explanation_cache[ckey] = e
            return e

        n_workers = effective_workers(config.workers)
        if n_workers > 1 and len(jobs) > 1:
            pool = ThreadPoolExecutor(max_workers=n_workers)
            try:
                futures = [pool.submit(work, j) for j in jobs]
                results = [f.result() for f in futures]
            finally:
                pool.shutdown(wait=True, cancel_futures=True)
        else:
            results = [work(j) for j in jobs]
        for job, e in zip(jobs, results):
            explanations[job] = e.top(config.m)

        rescored: dict[tuple[str, str], float | None] = {}
        for qid, rl in ranked.items():
            usable = [d for d in rl.doc_ids
                      if not explanations[(qid, d)].degenerate and explanations[(qid, d)].rationales]
            for d in rl.doc_ids:
                rescored[(qid, d)] = None
            if usable and "mrc" in want:
                texts = [build_pseudo_document(explanations[(qid, d)]).text for d in usable]
                scores = score_texts(scorer, inputs.queries[qid].text, texts, config.score_chunk_size,
                                     config.chunk_threshold, _abbrevs(config))
                rescored.update({(qid, d): s for d, s in zip(usable, scores)})

        mrc_res = M.mrc(ranked, rescored) if "mrc" in want else None

        sc_rows, fid_rows, sc_excluded = {}, {}, 0
        if "sc" in want:
            for qid, rl in ranked.items():
                masked = {}
                fids = []
                for d in rl.doc_ids:
                    e = explanations[(qid, d)]
                    if e.degenerate or not e.rationales:
                        masked[d] = []
                        continue
                    spans = sorted((r.segment for r in e.rationales), key=lambda s: s.char_start)
                    ab = ablate_combinations(inputs.queries[qid], inputs.corpus[d], scorer, spans,
                                             config.fidelity_m_max, budget=config.combination_budget,
                                             seed=derive_seed(config.seed, qid, d),
                                             score_chunk_size=config.score_chunk_size,
                                             chunk_threshold=config.chunk_threshold,
                                             abbreviations=_abbrevs(config))
                    masked[d] = list(ab.scores.values())
                    fids.append(float(np.mean(list(ab.fidelity.values()))))
                pooled = M.consistency_pool(masked)
                sc_excluded += pooled.excluded
                sc_rows[qid] = pooled.s_c
                fid_rows[qid] = float(np.mean(fids)) if fids else None
    except ScorerError as exc:
        where = f"; partial progress saved to {ckpt_path}" if ckpt_path else ""
        raise PipelineAbort(f"scorer failed mid-run: {exc}{where}", ckpt_path) from exc

    mer_res = None
    if "mer" in want:
        if inputs.relevance.has_passages:
            mer_res = M.mer(explanations, inputs.relevance, config.k, config.m, ranked, stopwords)
        else:
            logger.warning("MER requested but no sub-document relevance is loaded; reporting null")

    have_qrels = inputs.relevance.has_grades
    if "ndcg" in want and not have_qrels:
        logger.warning("nDCG requested but no qrels are loaded; reporting null")
    have_spans = inputs.relevance.has_spans
    if "jaccard" in want and not have_spans:
        logger.warning("Jaccard requested but no human spans are loaded; reporting null")

    per_query = {}
    ndcg_undefined = []
    for qid, rl in ranked.items():
        row = {c: None for c in M.EvalReport.COLUMNS}
        if "ndcg" in want and have_qrels:
            grades = inputs.relevance.grades_for(qid)
            row["ndcg"] = M.ndcg_at_k(rl, grades, config.k)
            if not M.ndcg_defined(grades):
                ndcg_undefined.append(qid)
        if mrc_res is not None:
            row["mrc"] = mrc_res.per_query.get(qid)
        if mer_res is not None:
            row["mer"] = mer_res.per_query.get(qid)
        if "sc" in want:
            row["sc"] = sc_rows.get(qid)
            row["fidelity"] = fid_rows.get(qid)
        if "jaccard" in want and have_spans:
            vals = [M.jaccard_spans(explanations[(qid, d)], inputs.relevance.spans(qid, d)) for d in rl.doc_ids]
            row["jaccard"] = float(np.mean(vals)) if vals else None
        row["n_docs"] = len(rl)
        degenerate = [d for d in rl.doc_ids if explanations[(qid, d)].degenerate]
        row["excluded_docs"] = len(degenerate)
        per_query[qid] = row

    exclusions = {
        "degenerate_docs": {q: [d for d in rl.doc_ids if explanations[(q, d)].degenerate]
                            for q, rl in ranked.items()
                            if any(explanations[(q, d)].degenerate for d in rl.doc_ids)},
        "truncated_docs": {q: [d for d in rl.doc_ids if explanations[(q, d)].truncated]
                           for q, rl in ranked.items()
                           if any(explanations[(q, d)].truncated for d in rl.doc_ids)},
        "mrc_excluded_queries": list(mrc_res.excluded_queries) if mrc_res else [],
        "ndcg_undefined_queries": ndcg_undefined,
        "sc_excluded_docs": sc_excluded,
    }
    report = M.EvalReport(per_query=per_query, params=_report_params(config, base_scorer),
                          exclusions=exclusions, metrics=tuple(m for m in M.METRIC_NAMES if m in want))
    report.compute_aggregates()

    if out_dir is not None:
        write_report(report, out_dir / "report.json", "json")
        write_report(report, out_dir / "report.tsv", "tsv")
        write_explanations((explanations[j] for j in jobs), out_dir / "explanations.jsonl")
    ckpt.clear()
    return report


@dataclass
class SweepPoint:
    m: int
    w: int | None
    report: M.EvalReport | None = None
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.report is not None


@dataclass
class SweepResult:
    points: list[SweepPoint]

    @property
    def failed(self) -> list[SweepPoint]:
        return [p for p in self.points if not p.ok]

    def table(self) -> list[dict]:
        rows = []
        for p in self.points:
            row = {"m": p.m, "w": p.w, "status": "ok" if p.ok else "failed"}
            agg = p.report.aggregates if p.ok else {}
            for c in M.EvalReport.COLUMNS:
                row[c] = agg.get(c)
            row["error"] = p.error
            rows.append(row)
        return rows

    def to_tsv(self) -> str:
        cols = ("m", "w", "status", *M.EvalReport.COLUMNS)
        lines = ["\t".join(cols)]
        for row in self.table():
            lines.append("\t".join("NA" if row[c] is None else (repr(row[c]) if isinstance(row[c], float)
                                                                else str(row[c])) for c in cols))
        return "\n".join(lines) + "\n"


def sweep(config: RunConfig, m_list: Sequence[int] | None = None, w_list: Sequence[int] | None = None,
          scorer: Scorer | None = None, inputs: Inputs | None = None) -> SweepResult:
    """Evaluate every (m, w) point, reusing explanations across m.

    ``w`` only applies to word-window rationales; for other granularities the
    w axis is dropped with a warning.  A failing point is recorded and the
    sweep moves on.
    """
    m_list = list(m_list or config.m_list or [config.m])
    w_list = list(w_list or config.w_list or [])
    if not m_list:
        raise ValueError("m_list must not be empty")
    if w_list and config.effective_explainer_granularity != WORD_WINDOW:
        logger.warning("w_list ignored: %s rationales have no window size", config.effective_explainer_granularity)
        w_list = []
    w_axis: list[int | None] = w_list or [config.w if config.effective_explainer_granularity == WORD_WINDOW else None]
    inputs = inputs or Inputs.load(config)
    own = scorer is None
    index = load_index(config.index_file) if config.index_file else build_index(inputs.corpus)
    base = make_scorer(config, index) if own else scorer
    explanation_cache: dict = {}
    score_cache = ScoreCache()
    m_max = max(m_list)
    points = []
    base_out = Path(config.out_dir) if config.out_dir else None
    try:
        for w in w_axis:
            for m in m_list:
                point = SweepPoint(m, w)
                changes = {"m": m, "m_list": (), "w_list": ()}
                if w is not None:
                    changes["w"] = w
                if base_out is not None:
                    changes["out_dir"] = str(base_out / (f"m{m}" + (f"_w{w}" if w is not None else "")))
                try:
                    cfg = config.replace(**changes)
                    point.report = run_evaluation(cfg, base, inputs=inputs, index=index, explain_m=m_max,
                                                  explanation_cache=explanation_cache, score_cache=score_cache)
                except (XRankError, ValueError) as exc:
                    logger.error("sweep point m=%s w=%s failed: %s", m, w, exc)
                    point.error = str(exc)
                points.append(point)
    finally:
        if own:
            base.close()
    result = SweepResult(points)
    if base_out is not None:
        base_out.mkdir(parents=True, exist_ok=True)
        (base_out / "sweep.tsv").write_text(result.to_tsv(), encoding="utf-8")
        (base_out / "sweep.json").write_text(json.dumps(result.table(), indent=2) + "\n", encoding="utf-8")
    return result
