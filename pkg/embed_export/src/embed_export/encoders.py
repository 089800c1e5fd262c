"""Sentence encoders behind one tiny interface.

``resolve_encoder`` understands two name families:

- ``hash:<dim>`` — a builtin deterministic signed-hashing encoder, useful
  for tests and fully offline runs;
- anything else — a sentence-transformers model name, loaded lazily.  If
  the library is missing or the model cannot be fetched, the error is
  reported as EncoderUnavailable rather than a stack trace.
"""

from __future__ import annotations

import re
import zlib

import numpy as np


class EncoderUnavailable(Exception):
    """The requested encoder cannot be constructed in this environment."""


class HashingEncoder:
    """Signed feature hashing of word unigrams+bigrams, L2-normalized f32."""

    def __init__(self, dim: int):
        if dim < 16:
            raise EncoderUnavailable(f"hash encoder dim {dim} < 16")
        self.dim = dim
        self.name = f"hash:{dim}"
        self.version = "builtin-1"
        self.normalized = True

    @staticmethod
    def _grams(text: str) -> list[str]:
        tokens = re.findall(r"[a-z0-9]+", text.lower())
        return tokens + [f"{a}_{b}" for a, b in zip(tokens, tokens[1:])]

    def encode(self, texts: list[str]) -> np.ndarray:
        out = np.zeros((len(texts), self.dim), dtype=np.float32)
        for row, text in enumerate(texts):
            grams = self._grams(text)
            if not grams:
                raise ValueError("prompt has no tokens")
            for g in grams:
                bucket = zlib.crc32(g.encode("utf-8")) % self.dim
                sign = 1.0 if zlib.crc32(b"sign:" + g.encode("utf-8")) & 1 else -1.0
                out[row, bucket] += sign
            norm = float(np.linalg.norm(out[row]))
            if norm == 0.0:
                out[row, zlib.crc32(grams[0].encode("utf-8")) % self.dim] = 1.0
                norm = 1.0
            out[row] /= norm
        return out


class SentenceTransformerEncoder:
    """Wraps a sentence-transformers model in evaluation mode."""

    def __init__(self, model_name: str):
        try:
            import sentence_transformers
        except ImportError as exc:
            raise EncoderUnavailable(
                f"sentence-transformers is not installed (needed for {model_name!r})"
            ) from exc
        try:
            self._model = sentence_transformers.SentenceTransformer(model_name)
        except Exception as exc:
            raise EncoderUnavailable(
                f"could not load encoder {model_name!r}: {exc}"
            ) from exc
        self._model.eval()
        self.dim = int(self._model.get_sentence_embedding_dimension())
        self.name = model_name
        self.version = f"sentence-transformers {sentence_transformers.__version__}"
        self.normalized = False  # library default; recorded in the manifest

    def encode(self, texts: list[str]) -> np.ndarray:
        vectors = self._model.encode(
            texts, convert_to_numpy=True, show_progress_bar=False
        )
        return np.asarray(vectors, dtype=np.float32)


DEFAULT_ENCODER = "sentence-transformers/all-MiniLM-L6-v2"

_HASH_NAME = re.compile(r"^hash:(\d+)$")


def resolve_encoder(name: str):
    match = _HASH_NAME.match(name)
    if match:
        return HashingEncoder(int(match.group(1)))
    return SentenceTransformerEncoder(name)
