"""Text-branch embedding providers.

Two interchangeable sources feed the ranker's text branch: a loader for
precomputed embedding files (e.g. written by the offline sentence-encoder
export tool) and a built-in signed-hashing embedder that keeps runs fully
self-contained.  Both produce the same shape of data; training code never
knows which one it got.

Embedding file layout: magic ``LLMREMB1``, u32 dim, u32 count, then per
record [u16 id_len, id bytes, dim x little-endian f32].
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dataset import Dataset
from .errors import FormatError, ValidationError
from .hashing import stable_bucket, stable_sign, tokenize

EMBEDDING_MAGIC = b"LLMREMB1"


@dataclass
class EmbeddingStore:
    dim: int
    entries: dict[str, np.ndarray] = field(default_factory=dict)
    provider_tag: str = ""

    def add(self, sample_id: str, vector: np.ndarray) -> None:
        if sample_id in self.entries:
            raise ValidationError(f"duplicate embedding id {sample_id!r}")
        if vector.shape != (self.dim,):
            raise ValidationError(
                f"embedding for {sample_id!r} has shape {vector.shape}, expected ({self.dim},)"
            )
        if not np.all(np.isfinite(vector)):
            raise ValidationError(f"embedding for {sample_id!r} contains NaN/Inf")
        self.entries[sample_id] = vector

    def vector(self, sample_id: str) -> np.ndarray:
        # A missing id is a hard error, never a silent zero vector.
        try:
            return self.entries[sample_id]
        except KeyError:
            raise ValidationError(f"no embedding for sample_id {sample_id!r}") from None

    def __len__(self) -> int:
        return len(self.entries)


def load_embeddings(path: str | Path) -> EmbeddingStore:
    with open(path, "rb") as fh:
        magic = fh.read(8)
        if magic != EMBEDDING_MAGIC:
            raise FormatError(f"{path}: bad magic {magic!r}")
        header = fh.read(8)
        if len(header) != 8:
            raise FormatError(f"{path}: truncated header")
        dim, count = struct.unpack("<II", header)
        store = EmbeddingStore(dim=dim, provider_tag=f"file:{Path(path).name}")
        for k in range(count):
            len_bytes = fh.read(2)
            if len(len_bytes) != 2:
                raise FormatError(f"{path}: truncated payload at entry {k}")
            (id_len,) = struct.unpack("<H", len_bytes)
            id_bytes = fh.read(id_len)
            vec_bytes = fh.read(dim * 4)
            if len(id_bytes) != id_len or len(vec_bytes) != dim * 4:
                raise FormatError(f"{path}: truncated payload at entry {k}")
            store.add(id_bytes.decode("utf-8"), np.frombuffer(vec_bytes, dtype="<f4").astype(np.float64))
    return store


def write_embeddings(path: str | Path, store: EmbeddingStore) -> None:
    with open(path, "wb") as fh:
        fh.write(EMBEDDING_MAGIC)
        fh.write(struct.pack("<II", store.dim, len(store.entries)))
        for sample_id, vec in store.entries.items():
            id_bytes = sample_id.encode("utf-8")
            fh.write(struct.pack("<H", len(id_bytes)))
            fh.write(id_bytes)
            fh.write(np.ascontiguousarray(vec, dtype="<f4").tobytes())


def hash_embed(prompt: str, dim: int) -> np.ndarray:
    """Signed feature hashing of word unigrams and bigrams, L2-normalized."""
    if dim < 16:
        raise ValidationError(f"embedding dim {dim} < 16")
    tokens = tokenize(prompt)
    if not tokens:
        raise ValidationError("empty prompt")
    vec = np.zeros(dim)
    grams = tokens + [f"{a}_{b}" for a, b in zip(tokens, tokens[1:])]
    for g in grams:
        vec[stable_bucket(g, dim)] += stable_sign(g)
    norm = np.linalg.norm(vec)
    if norm == 0.0:
        # Signs cancelled exactly; fall back to a deterministic unit vector.
        vec[stable_bucket(tokens[0], dim)] = 1.0
        norm = 1.0
    return vec / norm


class HashEmbeddingProvider:
    """Self-contained provider computing hash_embed from the prompt text."""

    def __init__(self, dim: int = 256):
        if dim < 16:
            raise ValidationError(f"embedding dim {dim} < 16")
        self.dim = dim
        self.tag = f"hash:{dim}"

    def embed_prompt(self, sample_id: str, prompt: str) -> np.ndarray:
        return hash_embed(prompt, self.dim)

    def embed_dataset(self, dataset: Dataset) -> np.ndarray:
        return np.vstack([hash_embed(r.prompt, self.dim) for r in dataset.records])


class StoreEmbeddingProvider:
    """Provider backed by a loaded embedding file; lookups are by sample_id."""

    def __init__(self, store: EmbeddingStore):
        self.store = store
        self.dim = store.dim
        self.tag = store.provider_tag

    def embed_prompt(self, sample_id: str, prompt: str) -> np.ndarray:
        return self.store.vector(sample_id)

    def embed_dataset(self, dataset: Dataset) -> np.ndarray:
        return np.vstack([self.store.vector(r.sample_id) for r in dataset.records])
