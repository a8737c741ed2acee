# %% [markdown]
# # Plugging in an out-of-process ranker
#
# Any model can be evaluated as long as it answers newline-delimited JSON
# requests `{"id", "query", "texts"}` with `{"id", "scores"}`.  The bundled
# stub scores texts by counting query-term occurrences, which lets us check
# that going over the wire changes nothing.

# %%
import sys

from xrank import datasets
from xrank.pipeline import run_evaluation
from xrank.scoring import ExternalScorer, TermCountScorer

stub = [sys.executable, "-m", "xrank.stub_scorer"]
with ExternalScorer(stub, max_batch=2) as remote:
    print(remote.score_batch("solar panel", ["solar panel efficiency", "coffee", "panel panel"]))

# %%
cfg = datasets.fixture_config(seed=3)
local = run_evaluation(cfg, TermCountScorer())
wire = run_evaluation(cfg.replace(scorer_cmd=" ".join(stub)))
print(local.per_query == wire.per_query)
print(wire.params["scorer"])

# %% [markdown]
# ### Failures
# A scorer that stops answering surfaces as a timeout naming the request.

# %%
from xrank.errors import ScorerTimeout

with ExternalScorer(stub + ["--hang-after", "1"], timeout=0.5) as flaky:
    flaky.score_batch("solar", ["solar"])
    try:
        flaky.score_batch("solar", ["solar"])
    except ScorerTimeout as exc:
        print(type(exc).__name__, exc)
