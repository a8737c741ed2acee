# %% [markdown]
# # Evaluating explanations
#
# A complete evaluation run on the fixture, then a look at the pieces:
# rank correlation of the pseudo-document rerank, explanation relevance
# against annotated passages, and the masking-based consistency score.

# %%
from xrank import datasets
from xrank.metrics import cosine_similarity, kendall_tau, ndcg_at_k
from xrank.pipeline import run_evaluation

report = run_evaluation(datasets.fixture_config(seed=13))
print(report.to_tsv())

# %% [markdown]
# ### Building blocks
# Kendall's tau-b handles ties on either side; cosine similarity drops
# stopwords before comparing term counts.

# %%
print(kendall_tau(["d1", "d2", "d3"], ["d2", "d1", "d3"]).tau)
print(kendall_tau({"a": 2, "b": 1, "c": 1}, {"a": 1, "b": 1, "c": 0}).tau)
print(cosine_similarity("Solar panels convert light", "light hitting solar cells"))
print(ndcg_at_k(["d3", "d1", "d2"], {"d1": 2, "d2": 1}, k=3))

# %% [markdown]
# ### Sentence rationales from the greedy explainer
# Same corpus, same seed; only the explainer changes.

# %%
greedy = run_evaluation(datasets.fixture_config(seed=13, explainer="greedy", m=2))
for col in ("mrc", "mer", "sc", "jaccard"):
    print(col, report.aggregates[col], greedy.aggregates[col])
print(greedy.exclusions)
