"""Acceptance gate: one test per release criterion, at the stated tolerances.

Run with `pytest tests/test_acceptance.py -v`; the terminal summary prints
one PASS/FAIL line per criterion.  The final test is an optional
integration tier that only runs when externally-supplied dataset and
embedding files are named via environment variables.
"""

import os
import time

import numpy as np
import pytest

from llmrank import (
    Dataset,
    HashEmbeddingProvider,
    ModelPool,
    PromptRecord,
    SplitSpec,
    StoreEmbeddingProvider,
    TrainConfig,
    default_schema,
    evaluate,
    featurize_dataset,
    filter_dataset,
    ingest_dataset,
    load_embeddings,
    oracle_decisions,
    route_dataset,
    save_checkpoint,
    stratified_split,
    sweep_lambda,
    train_ranker,
)
from llmrank.ranker import loss_listwise, loss_mse, loss_total
from llmrank.routing import baseline_best_single, baseline_cheapest, decisions_from_chooser

from synth import keyword_corpus, random_quality_corpus
from test_ranker_model import _random_instance, max_relative_gradient_error


def _split_tensors(corpus, hash_dim, split_seed=7):
    train, val, test = stratified_split(corpus, SplitSpec(seed=split_seed))
    schema = default_schema()
    feats = [featurize_dataset(d, schema)[0] for d in (train, val, test)]
    provider = HashEmbeddingProvider(hash_dim)
    embeds = [provider.embed_dataset(d) for d in (train, val, test)]
    return (train, val, test), feats, embeds


def test_gradient_oracle():
    # >= 20 seeded instances at (n=3, m=3, d_j=5, d_t=8, h=4); analytic
    # gradients vs central finite differences (eps=1e-4), max relative
    # error < 1e-4, in under 10 seconds.
    start = time.perf_counter()
    worst = 0.0
    for seed in range(20):
        params, Xj, Xt, U = _random_instance(seed, n=3, d_j=5, d_t=8, m=3, h=4)
        worst = max(worst, max_relative_gradient_error(params, Xj, Xt, U, eps=1e-4))
    elapsed = time.perf_counter() - start
    assert worst < 1e-4, f"max relative gradient error {worst}"
    assert elapsed < 10.0, f"gradient oracle took {elapsed:.1f}s"


def test_loss_identities():
    start = time.perf_counter()
    rng = np.random.default_rng(0)

    u = rng.normal(size=(7, 4))
    assert loss_mse(u, u) == 0.0

    s = rng.normal(size=(7, 4))
    base = loss_listwise(s, u, 0.5)
    for shift in (-1e3, -1.0, 0.25, 7.0):
        assert abs(loss_listwise(s + shift, u, 0.5) - base) <= 1e-9

    assert abs(loss_total(s, u, 0.5) - (loss_mse(s, u) + loss_listwise(s, u, 0.5))) <= 1e-12

    for _ in range(1000):
        a = rng.normal(scale=rng.uniform(0.1, 4.0), size=(1, 5))
        b = rng.normal(scale=rng.uniform(0.1, 4.0), size=(1, 5))
        assert loss_listwise(a, b, 0.5) >= 0.0

    elapsed = time.perf_counter() - start
    assert elapsed < 5.0, f"loss identities took {elapsed:.1f}s"


def test_metric_oracle():
    # Hand-built 3-prompt x 3-model table, reproduced exactly.
    pool = ModelPool(("m0", "m1", "m2"))
    records = (
        PromptRecord(sample_id="s0", prompt="p0", benchmark="x",
                     quality=(1.0, 0.5, 0.0), cost=(0.004, 0.001, 0.0005)),
        PromptRecord(sample_id="s1", prompt="p1", benchmark="y",
                     quality=(0.2, 0.8, 0.8), cost=(0.003, 0.002, 0.001)),
        PromptRecord(sample_id="s2", prompt="p2", benchmark="x",
                     quality=(0.6, 0.6, 0.9), cost=(0.001, 0.0005, 0.002)),
    )
    d = Dataset(pool=pool, records=records)
    report = evaluate(decisions_from_chooser(d, lambda i, rec: (1, 0, 2)[i]), d, 10.0)
    assert report.quality == ((0.5 + 0.2) + 0.9) / 3
    assert report.mean_cost == ((0.001 + 0.003) + 0.002) / 3
    assert report.total_cost == (0.001 + 0.003) + 0.002
    assert report.utility == report.quality - 10.0 * report.mean_cost
    assert report.oracle_quality == ((1.0 + 0.8) + 0.9) / 3
    assert report.efficiency == report.quality / report.oracle_quality
    assert report.cost_ratio == report.total_cost / ((0.004 + 0.001) + 0.002)
    assert report.quality_gap == report.oracle_quality - report.quality

    # Display-precision arithmetic: 0.843/0.945 -> 89.2%, 5.784/1.271 -> 4.55x,
    # 0.945-0.843 -> 10.2%.
    pool2 = ModelPool(("expensive", "sharp"))
    records2 = tuple(
        PromptRecord(sample_id=f"h{i}", prompt="p", benchmark="b",
                     quality=(0.843, 0.945), cost=(2.892, 0.6355))
        for i in range(2)
    )
    d2 = Dataset(pool=pool2, records=records2)
    headline = evaluate(decisions_from_chooser(d2, lambda i, rec: 0), d2, 0.0)
    assert (headline.quality, headline.oracle_quality) == (0.843, 0.945)
    assert (headline.total_cost, headline.oracle_total_cost) == (5.784, 1.271)
    assert round(headline.efficiency * 100, 1) == 89.2
    assert round(headline.cost_ratio, 2) == 4.55
    assert round(headline.quality_gap * 100, 1) == 10.2


def test_oracle_dominance():
    # 100 random synthetic datasets; the oracle's quality beats every
    # policy, including a freshly trained router, with zero violations.
    rng = np.random.default_rng(99)
    schema = default_schema()
    provider = HashEmbeddingProvider(16)
    violations = 0
    for trial in range(100):
        d = random_quality_corpus(40, 3, seed=trial)
        q_oracle = evaluate(oracle_decisions(d), d, 0.0).quality

        half = len(d) // 2
        train = Dataset(pool=d.pool, records=d.records[:half])
        val = Dataset(pool=d.pool, records=d.records[half:])
        ftr, _ = featurize_dataset(train, schema)
        fva, _ = featurize_dataset(val, schema)
        etr, eva = provider.embed_dataset(train), provider.embed_dataset(val)
        config = TrainConfig(epochs=2, batch_size=32, seed=trial)
        params, _ = train_ranker(train, val, ftr, etr, fva, eva, config, hidden=8)
        fall, _ = featurize_dataset(d, schema)
        eall = provider.embed_dataset(d)

        policies = [
            route_dataset(params, d, fall, eall),
            baseline_best_single(d),
            baseline_cheapest(d),
            decisions_from_chooser(d, lambda i, rec: int(rng.integers(3))),
        ]
        for decisions in policies:
            if evaluate(decisions, d, 0.0).quality > q_oracle:
                violations += 1
    assert violations == 0


def test_end_to_end_learnability():
    # 5,000 prompts whose injected keyword decides the best of five models
    # with distinct cost tiers; defaults (lambda=0, hash embeddings dim 256)
    # must reach held-out efficiency >= 0.95 inside 100 epochs and 5 min.
    start = time.perf_counter()
    corpus = keyword_corpus(5000, seed=42, n_models=5)
    (train, val, test), feats, embeds = _split_tensors(corpus, hash_dim=256)
    config = TrainConfig(lambda_=0.0, seed=0)  # all defaults
    params, log = train_ranker(
        train, val, feats[0], embeds[0], feats[1], embeds[1], config, hidden=256
    )
    report = evaluate(route_dataset(params, test, feats[2], embeds[2]), test, 0.0)
    elapsed = time.perf_counter() - start
    assert log.stopped_epoch <= 100
    assert report.efficiency >= 0.95, f"held-out efficiency {report.efficiency:.4f}"
    assert elapsed < 300.0, f"learnability run took {elapsed:.0f}s"


def test_lambda_monotonicity():
    # Sweep {0, 1e3, 1e5} on the same corpus over 5 seeds: mean routed cost
    # and quality non-increasing in lambda (equality allowed), zero strict
    # cost reversals.
    corpus = keyword_corpus(5000, seed=42, n_models=5)
    (train, val, test), feats, embeds = _split_tensors(corpus, hash_dim=256)
    lambdas = [0.0, 1e3, 1e5]
    for seed in range(5):
        config = TrainConfig(epochs=25, patience=5, batch_size=512, seed=seed)
        rows = sweep_lambda(
            train, val, test, lambdas, config, *feats, *embeds, hidden=64
        )
        routers = [r for r in rows if r.policy == "router"]
        assert [r.lambda_ for r in routers] == lambdas
        costs = [r.mean_cost for r in routers]
        qualities = [r.quality for r in routers]
        assert costs[0] >= costs[1] >= costs[2], f"seed {seed}: cost reversal {costs}"
        assert qualities[0] >= qualities[1] >= qualities[2], (
            f"seed {seed}: quality reversal {qualities}"
        )


def test_determinism():
    # Two full train runs with identical config and seed produce
    # byte-identical checkpoints and training logs.
    corpus = keyword_corpus(600, seed=21, n_models=3)
    (train, val, _), feats, embeds = _split_tensors(corpus, hash_dim=64)
    config = TrainConfig(epochs=5, batch_size=64, seed=31)

    artifacts = []
    for run in range(2):
        params, log = train_ranker(
            train, val, feats[0], embeds[0], feats[1], embeds[1], config, hidden=16
        )
        path = f"/tmp/acceptance_determinism_{run}.bin"
        save_checkpoint(path, params, config)
        with open(path, "rb") as fh:
            artifacts.append((fh.read(), log.to_json()))
        os.remove(path)
    assert artifacts[0][0] == artifacts[1][0], "checkpoints differ"
    assert artifacts[0][1] == artifacts[1][1], "training logs differ"


_RB_DATA = os.environ.get("LLMRANK_ROUTERBENCH_JSONL", "")
_RB_POOL = os.environ.get("LLMRANK_ROUTERBENCH_POOL", "")
_RB_EMB = os.environ.get("LLMRANK_ROUTERBENCH_EMB", "")


@pytest.mark.skipif(
    not (_RB_DATA and _RB_POOL),
    reason="integration tier: set LLMRANK_ROUTERBENCH_JSONL and "
    "LLMRANK_ROUTERBENCH_POOL (and optionally LLMRANK_ROUTERBENCH_EMB)",
)
def test_integration_tier_routerbench():
    pool = ModelPool.from_file(_RB_POOL)
    raw = ingest_dataset(_RB_DATA, pool)
    assert len(raw) == 36497

    filtered = filter_dataset(raw)
    assert len(filtered) == 34623
    assert len(filtered.benchmark_counts()) == 10

    oracle = evaluate(oracle_decisions(filtered), filtered, 0.0)
    top_model, top_share = max(
        oracle.routing_distribution.items(), key=lambda kv: kv[1]
    )
    assert "mistral-7b" in top_model.lower()
    assert abs(top_share * 100 - 28.9) <= 0.5

    if not _RB_EMB:
        pytest.skip("no embedding file supplied; skipping the efficiency check")
    store = load_embeddings(_RB_EMB)
    provider = StoreEmbeddingProvider(store)
    train, val, test = stratified_split(filtered, SplitSpec(seed=0))
    schema = default_schema()
    feats = [featurize_dataset(d, schema)[0] for d in (train, val, test)]
    embeds = [provider.embed_dataset(d) for d in (train, val, test)]
    config = TrainConfig(lambda_=0.0, seed=0)
    params, _ = train_ranker(
        train, val, feats[0], embeds[0], feats[1], embeds[1], config, hidden=256
    )
    report = evaluate(route_dataset(params, test, feats[2], embeds[2]), test, 0.0)
    assert report.efficiency >= 0.85, f"test efficiency {report.efficiency:.4f}"
