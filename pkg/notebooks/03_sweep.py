# %% [markdown]
# # Sweeping the number of rationales
#
# On a generated corpus where each relevant document hides one sentence
# holding every query term, watch the rank correlation climb as more
# sentences go into each pseudo-document.  At full coverage the
# pseudo-document is the original text and the correlation is exactly 1.

# %%
import tempfile
from pathlib import Path

import numpy as np

from xrank import datasets
from xrank.pipeline import sweep

pc = datasets.planted(seed=1)
work = Path(tempfile.mkdtemp())
paths = pc.write(work / "data")
print(len(pc.corpus), "documents, at most", pc.max_sentences, "sentences each")

# %%
cfg = datasets.fixture_config(**paths, spans=str(work / "none"), granularity="sentence",
                              exhaustive=True, k=7, metrics=("ndcg", "mrc", "mer"))
res = sweep(cfg, m_list=range(1, pc.max_sentences + 1))
print(res.to_tsv())

# %%
mrc = np.array([row["mrc"] for row in res.table()])
print("MRC by m:", mrc.round(3))
assert mrc[-1] == 1.0
