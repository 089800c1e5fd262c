"""Versioned binary checkpoints for trained ranker parameters.

Layout: magic ``LLMRCKPT``, u32 format version, config block (u32 h, d_j,
d_t, m; f64 lambda, tau, dropout), u32 feature schema version, u32 embedding
dim, length-prefixed pool fingerprint, then the twelve parameter tensors in
declaration order, each as [u8 ndim, ndim x u32 dims, little-endian f32
data].  Loading validates the magic, version, and every tensor shape.

Serialization is fully deterministic: identical parameters and config
produce byte-identical files.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import FormatError, ValidationError
from .model import RankerParams, TENSOR_NAMES
from .training import TrainConfig

CHECKPOINT_MAGIC = b"LLMRCKPT"
FORMAT_VERSION = 1


@dataclass(frozen=True)
class CheckpointMeta:
    lambda_: float
    tau: float
    dropout: float
    format_version: int = FORMAT_VERSION


def save_checkpoint(path: str | Path, params: RankerParams, config: TrainConfig) -> None:
    params.validate()
    fp = params.pool_fingerprint.encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<I", FORMAT_VERSION))
        fh.write(struct.pack("<IIII", params.h, params.d_j, params.d_t, params.m))
        fh.write(struct.pack("<ddd", config.lambda_, config.tau, config.dropout))
        fh.write(struct.pack("<II", params.feature_schema_version, params.embedding_dim))
        fh.write(struct.pack("<H", len(fp)))
        fh.write(fp)
        for name in TENSOR_NAMES:
            tensor = getattr(params, name)
            fh.write(struct.pack("<B", tensor.ndim))
            fh.write(struct.pack(f"<{tensor.ndim}I", *tensor.shape))
            fh.write(np.ascontiguousarray(tensor, dtype="<f4").tobytes())


def load_checkpoint(path: str | Path) -> tuple[RankerParams, CheckpointMeta]:
    with open(path, "rb") as fh:
        data = fh.read()

    def need(offset: int, size: int) -> bytes:
        if offset + size > len(data):
            raise FormatError(f"{path}: truncated checkpoint")
        return data[offset : offset + size]

    if need(0, 8) != CHECKPOINT_MAGIC:
        raise FormatError(f"{path}: bad magic {data[:8]!r}")
    (version,) = struct.unpack("<I", need(8, 4))
    if version != FORMAT_VERSION:
        raise FormatError(f"{path}: unsupported checkpoint version {version}")
    h, d_j, d_t, m = struct.unpack("<IIII", need(12, 16))
    lambda_, tau, dropout = struct.unpack("<ddd", need(28, 24))
    schema_version, embedding_dim = struct.unpack("<II", need(52, 8))
    (fp_len,) = struct.unpack("<H", need(60, 2))
    fingerprint = need(62, fp_len).decode("utf-8")
    offset = 62 + fp_len

    tensors: dict[str, np.ndarray] = {}
    for name in TENSOR_NAMES:
        (ndim,) = struct.unpack("<B", need(offset, 1))
        offset += 1
        shape = struct.unpack(f"<{ndim}I", need(offset, 4 * ndim))
        offset += 4 * ndim
        count = int(np.prod(shape)) if ndim else 1
        raw = need(offset, count * 4)
        offset += count * 4
        tensors[name] = np.frombuffer(raw, dtype="<f4").reshape(shape).astype(np.float64)
    if offset != len(data):
        raise FormatError(f"{path}: {len(data) - offset} trailing bytes")

    params = RankerParams(
        **tensors,
        h=h,
        feature_schema_version=schema_version,
        embedding_dim=embedding_dim,
        pool_fingerprint=fingerprint,
    )
    try:
        params.validate()
    except ValidationError as exc:
        raise FormatError(f"{path}: inconsistent checkpoint: {exc}") from exc
    if params.d_j != d_j or params.d_t != d_t or params.m != m:
        raise FormatError(f"{path}: header dims disagree with tensor shapes")
    return params, CheckpointMeta(lambda_=lambda_, tau=tau, dropout=dropout)
