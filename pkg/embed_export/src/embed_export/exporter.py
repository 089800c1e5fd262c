"""Encode dataset prompts and write the routing toolkit's embedding format.

Input is the toolkit's JSONL dataset interchange (only ``sample_id`` and
``prompt`` are consumed here).  Output is the ``LLMREMB1`` binary layout:
magic, u32 dim, u32 count, then per record [u16 id_len, id bytes, dim x
little-endian f32].  A JSON manifest is written alongside the binary as
``<out>.manifest.json``.
"""

from __future__ import annotations

import datetime
import hashlib
import json
import struct
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .encoders import resolve_encoder

EMBEDDING_MAGIC = b"LLMREMB1"


@dataclass(frozen=True)
class ExportManifest:
    encoder: str
    encoder_version: str
    normalized: bool
    dataset_sha256: str
    dim: int
    count: int
    created: str

    def to_file(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(asdict(self), fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def from_file(cls, path: str | Path) -> "ExportManifest":
        with open(path, encoding="utf-8") as fh:
            return cls(**json.load(fh))


def read_prompts(path: str | Path) -> list[tuple[str, str]]:
    """(sample_id, prompt) pairs in file order; validates ids and shapes."""
    pairs: list[tuple[str, str]] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                sample_id = str(obj["sample_id"])
                prompt = str(obj["prompt"])
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise ValueError(f"{path}: line {lineno}: {exc}") from exc
            if sample_id in seen:
                raise ValueError(f"{path}: line {lineno}: duplicate sample_id {sample_id!r}")
            seen.add(sample_id)
            pairs.append((sample_id, prompt))
    if not pairs:
        raise ValueError(f"{path}: no records")
    return pairs


def _sha256(path: str | Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def export_embeddings(
    dataset_path: str | Path,
    encoder,
    out_path: str | Path,
    batch_size: int = 64,
) -> ExportManifest:
    """Encode every prompt and write the binary store plus its manifest.

    ``encoder`` is either a name understood by ``resolve_encoder`` or an
    already-constructed encoder object.  Records are written in dataset
    order; an encode failure aborts naming the offending sample_id.
    """
    if isinstance(encoder, str):
        encoder = resolve_encoder(encoder)
    pairs = read_prompts(dataset_path)

    vectors = np.empty((len(pairs), encoder.dim), dtype=np.float32)
    for start in range(0, len(pairs), batch_size):
        batch = pairs[start : start + batch_size]
        try:
            encoded = encoder.encode([prompt for _, prompt in batch])
        except Exception:
            # Retry one by one so the failing record can be named.
            for offset, (sample_id, prompt) in enumerate(batch):
                try:
                    vectors[start + offset] = encoder.encode([prompt])[0]
                except Exception as exc:
                    raise RuntimeError(
                        f"encoding failed for sample {sample_id!r}: {exc}"
                    ) from exc
            continue
        if encoded.shape != (len(batch), encoder.dim):
            raise RuntimeError(
                f"encoder returned shape {encoded.shape}, expected "
                f"({len(batch)}, {encoder.dim})"
            )
        vectors[start : start + len(batch)] = encoded

    if not np.all(np.isfinite(vectors)):
        bad = int(np.argwhere(~np.isfinite(vectors).all(axis=1))[0][0])
        raise RuntimeError(f"encoding failed for sample {pairs[bad][0]!r}: non-finite vector")

    out_path = Path(out_path)
    with open(out_path, "wb") as fh:
        fh.write(EMBEDDING_MAGIC)
        fh.write(struct.pack("<II", encoder.dim, len(pairs)))
        for (sample_id, _), vec in zip(pairs, vectors):
            id_bytes = sample_id.encode("utf-8")
            fh.write(struct.pack("<H", len(id_bytes)))
            fh.write(id_bytes)
            fh.write(vec.tobytes())

    manifest = ExportManifest(
        encoder=encoder.name,
        encoder_version=encoder.version,
        normalized=bool(getattr(encoder, "normalized", False)),
        dataset_sha256=_sha256(dataset_path),
        dim=encoder.dim,
        count=len(pairs),
        created=datetime.datetime.now(datetime.timezone.utc).isoformat(),
    )
    manifest.to_file(str(out_path) + ".manifest.json")
    return manifest
