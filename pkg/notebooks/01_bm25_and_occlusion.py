# %% [markdown]
# # BM25 scores and occlusion rationales
#
# Build an index over the bundled fixture, score a query, then ask which
# parts of a retrieved document carry its score.

# %%
import numpy as np

from xrank import datasets
from xrank.corpus_io import load_corpus, load_queries
from xrank.rationales import build_pseudo_document, explain_greedy, explain_sampled
from xrank.scoring import BM25Params, BM25Scorer, build_index, retrieve_topk
from xrank.segmentation import SENTENCE, WORD_WINDOW

paths = datasets.fixture_paths()
corpus = load_corpus(paths["corpus"])
queries = load_queries(paths["queries"])
index = build_index(corpus)
print(index.N, "documents, avgdl", round(index.avgdl, 2))

# %% [markdown]
# ### Retrieval
# Ties are broken by doc_id, so the list is fully determined by the scores.

# %%
q = queries["q2"]
ranked = retrieve_topk(index, BM25Params(), q, k=5)
for e in ranked:
    print(e.rank, e.doc_id, round(e.score, 4))

# %% [markdown]
# ### Sampled occlusion over word windows
# Each draw masks `n` windows and credits each of them with the relative
# score drop divided by `n`.

# %%
scorer = BM25Scorer(index)
doc = corpus[ranked.doc_ids[0]]
expl = explain_sampled(q, doc, scorer, WORD_WINDOW, w=4, n_per_sample=2, m=3, seed=7)
for r in expl.rationales:
    print(f"{r.weight:.3f}  {r.segment.text!r}")

# %% [markdown]
# With `exhaustive=True` every window is masked alone once, which is a plain
# leave-one-out attribution.

# %%
loo = explain_sampled(q, doc, scorer, SENTENCE, exhaustive=True, m=10)
weights = np.array([r.weight for r in loo.rationales])
print(weights.round(3), "sum", weights.sum().round(3))

# %% [markdown]
# ### Greedy sentence selection
# For longer documents the greedy explainer removes the most damaging
# sentence from the residual document at every step.

# %%
greedy = explain_greedy(q, doc, scorer, m=2)
for r in greedy.rationales:
    print(f"{r.weight:+.3f}  {r.segment.text}")
print("pseudo-document:", build_pseudo_document(greedy).text)
