"""Synthetic corpora with known-best routing, used as training oracles.

The keyword corpus injects exactly one deciding keyword per prompt; the
model matching that keyword scores quality 1.0, the cheapest model scores
0.7 everywhere, and every other model scores 0.35.  Per-model costs sit on
distinct tiers, so the cost-quality trade-off has an unambiguous, exactly
computable optimum at every lambda.
"""

from __future__ import annotations

import numpy as np

from llmrank import Dataset, ModelPool, PromptRecord

KEYWORDS = ("meadow", "quartz", "ledger", "orbit", "violet")
COST_TIERS = (1e-5, 5e-5, 2e-4, 1e-3, 5e-3)

_FILLER = (
    "the a an and or but with from into over under about around through "
    "report detail note consider likewise general common simple plain "
    "window garden river mountain letter bottle street music answer light"
).split()


def keyword_corpus(n: int, seed: int, n_models: int = 5) -> Dataset:
    assert 2 <= n_models <= len(KEYWORDS)
    rng = np.random.default_rng(seed)
    pool = ModelPool(tuple(f"model-{chr(97 + j)}" for j in range(n_models)))
    records = []
    for i in range(n):
        k = int(rng.integers(n_models))
        words = list(rng.choice(_FILLER, size=int(rng.integers(8, 20))))
        words.insert(int(rng.integers(len(words) + 1)), KEYWORDS[k])
        quality = [0.35] * n_models
        quality[0] = 0.7
        quality[k] = 1.0
        records.append(
            PromptRecord(
                sample_id=f"kw{i}",
                prompt=" ".join(words),
                benchmark=f"cat{k}",
                quality=tuple(quality),
                cost=COST_TIERS[:n_models],
            )
        )
    return Dataset(pool=pool, records=tuple(records), provenance=f"keyword_corpus(seed={seed})")


def best_model_index(record: PromptRecord) -> int:
    """Exhaustive per-prompt argmax over quality: the corpus oracle."""
    best = max(record.quality)
    return record.quality.index(best)


def random_quality_corpus(n: int, m: int, seed: int, n_benchmarks: int = 2) -> Dataset:
    """Unstructured dataset: uniform qualities and costs, for invariant tests."""
    rng = np.random.default_rng(seed)
    pool = ModelPool(tuple(f"rm{j}" for j in range(m)))
    records = []
    for i in range(n):
        records.append(
            PromptRecord(
                sample_id=f"r{i}",
                prompt=" ".join(rng.choice(_FILLER, size=6)),
                benchmark=f"b{int(rng.integers(n_benchmarks))}",
                quality=tuple(np.round(rng.uniform(0.0, 1.0, m), 6)),
                cost=tuple(np.round(rng.uniform(0.0, 0.01, m), 8)),
            )
        )
    return Dataset(pool=pool, records=tuple(records))
