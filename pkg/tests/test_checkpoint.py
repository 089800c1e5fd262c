import numpy as np
import pytest

from llmrank import (
    HashEmbeddingProvider,
    SplitSpec,
    TrainConfig,
    default_schema,
    featurize_dataset,
    load_checkpoint,
    save_checkpoint,
    stratified_split,
)
from llmrank.errors import FormatError
from llmrank.ranker import TENSOR_NAMES, forward, init_params, train_ranker

from synth import keyword_corpus


def _params(seed=0):
    params = init_params(np.random.default_rng(seed), d_j=7, d_t=12, m=3, h=4)
    params.pool_fingerprint = "abc123"
    return params


def test_round_trip_preserves_f32_values(tmp_path):
    params = _params()
    config = TrainConfig(lambda_=1e3, tau=0.5, dropout=0.1)
    path = tmp_path / "ckpt.bin"
    save_checkpoint(path, params, config)
    loaded, meta = load_checkpoint(path)

    assert meta.lambda_ == 1e3 and meta.tau == 0.5 and meta.dropout == 0.1
    assert loaded.h == params.h
    assert loaded.pool_fingerprint == "abc123"
    assert loaded.feature_schema_version == params.feature_schema_version
    assert loaded.embedding_dim == params.embedding_dim
    for name in TENSOR_NAMES:
        expected = getattr(params, name).astype(np.float32).astype(np.float64)
        assert np.array_equal(getattr(loaded, name), expected)


def test_loaded_params_score_identically(tmp_path):
    params = _params(seed=4)
    path = tmp_path / "ckpt.bin"
    save_checkpoint(path, params, TrainConfig())
    loaded, _ = load_checkpoint(path)
    x_j, x_t = np.random.default_rng(1).normal(size=7), np.random.default_rng(2).normal(size=12)
    # f32 storage perturbs params; scoring the f32-rounded originals matches.
    f32 = params.copy()
    for name in TENSOR_NAMES:
        getattr(f32, name)[:] = getattr(params, name).astype(np.float32)
    assert np.array_equal(forward(loaded, x_j, x_t), forward(f32, x_j, x_t))


def test_bad_magic_and_truncation(tmp_path):
    path = tmp_path / "ckpt.bin"
    save_checkpoint(path, _params(), TrainConfig())
    data = path.read_bytes()

    bad = tmp_path / "bad.bin"
    bad.write_bytes(b"XXXXXXXX" + data[8:])
    with pytest.raises(FormatError, match="bad magic"):
        load_checkpoint(bad)

    short = tmp_path / "short.bin"
    short.write_bytes(data[:-9])
    with pytest.raises(FormatError, match="truncated"):
        load_checkpoint(short)

    trailing = tmp_path / "trailing.bin"
    trailing.write_bytes(data + b"\x00")
    with pytest.raises(FormatError, match="trailing"):
        load_checkpoint(trailing)


def test_shape_corruption_detected(tmp_path):
    path = tmp_path / "ckpt.bin"
    save_checkpoint(path, _params(), TrainConfig())
    data = bytearray(path.read_bytes())
    # Header says h=4; flip it to 5 so every tensor shape disagrees.
    data[12:16] = (5).to_bytes(4, "little")
    path.write_bytes(bytes(data))
    with pytest.raises(FormatError, match="inconsistent checkpoint"):
        load_checkpoint(path)


def test_training_twice_gives_byte_identical_checkpoints(tmp_path):
    corpus = keyword_corpus(200, seed=6, n_models=3)
    train, val, _ = stratified_split(corpus, SplitSpec(seed=3))
    schema = default_schema()
    ftr, _ = featurize_dataset(train, schema)
    fva, _ = featurize_dataset(val, schema)
    provider = HashEmbeddingProvider(32)
    etr, eva = provider.embed_dataset(train), provider.embed_dataset(val)
    config = TrainConfig(epochs=3, batch_size=64, seed=13)

    blobs = []
    for run in range(2):
        params, _ = train_ranker(train, val, ftr, etr, fva, eva, config, hidden=8)
        path = tmp_path / f"run{run}.bin"
        save_checkpoint(path, params, config)
        blobs.append(path.read_bytes())
    assert blobs[0] == blobs[1]
