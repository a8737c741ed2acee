"""Scoring: BM25 with an inverted index, synthetic scorers and the external-scorer client."""
from .base import (BM25Scorer, FunctionScorer, Scorer, TermCountScorer, score_batch,
                   score_document_chunked, score_texts)
from .bm25 import (BM25Params, InvertedIndex, bm25_score, build_index, load_index, query_terms,
                   retrieve_topk, save_index)
from .external import ExternalScorer

__all__ = [
    "BM25Params", "BM25Scorer", "ExternalScorer", "FunctionScorer", "InvertedIndex", "Scorer",
    "TermCountScorer", "bm25_score", "build_index", "load_index", "query_terms", "retrieve_topk",
    "save_index", "score_batch", "score_document_chunked", "score_texts",
]
