"""xrank: occlusion-based rationales for ranked retrieval and measures of how well they explain a ranker.

Typical use::

    from xrank import RunConfig, run_evaluation
    report = run_evaluation(RunConfig(corpus="corpus.jsonl", queries="queries.jsonl",
                                      qrels="qrels.txt", subdoc="subdoc.jsonl", seed=0))
    print(report.aggregates["mrc"], report.aggregates["mer"])
"""
from .corpus_io import (Document, Query, RankedEntry, RankedList, RelevanceStore, load_corpus,
                        load_human_spans, load_qrels, load_queries, load_subdoc_relevance, read_run,
                        write_report, write_run)
from .errors import (DegenerateScoreError, IndexFormatError, IntegrityError, ParseError, ProtocolError,
                     ScorerError, ScorerTimeout, StateError, UndefinedCorrelationError, XRankError)
from .metrics import (EvalReport, TauResult, consistency_pool, cosine_similarity, jaccard_spans,
                      kendall_tau, mer, mrc, ndcg_at_k, pearson_r)
from .pipeline import PipelineAbort, RunConfig, ScoreCache, run_evaluation, sweep
from .rationales import (ExplanationSet, PseudoDocument, Rationale, ablate_combinations,
                         build_pseudo_document, explain_greedy, explain_sampled)
from .scoring import (BM25Params, BM25Scorer, ExternalScorer, FunctionScorer, InvertedIndex, Scorer,
                      TermCountScorer, bm25_score, build_index, retrieve_topk, score_batch,
                      score_document_chunked)
from .segmentation import (Segment, Token, chunk_sentences, mask_segments, split_sentences, tokenize,
                           word_windows)

__version__ = "0.1.0"
