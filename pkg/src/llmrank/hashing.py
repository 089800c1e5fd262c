"""Platform-stable tokenization and hashing helpers.

Python's builtin ``hash`` is salted per process, so every hashed-feature
path in the toolkit goes through CRC32 instead: same token, same bucket,
on every run and every platform.
"""

from __future__ import annotations

import hashlib
import re
import zlib

_TOKEN_RE = re.compile(r"[a-z0-9]+")


def tokenize(text: str) -> list[str]:
    """Lowercase and split on non-alphanumeric runs."""
    return _TOKEN_RE.findall(text.lower())


def stable_bucket(token: str, dim: int) -> int:
    """Map a token to a bucket in [0, dim)."""
    return zlib.crc32(token.encode("utf-8")) % dim


def stable_sign(token: str) -> float:
    """Deterministic +/-1 sign for signed feature hashing."""
    return 1.0 if zlib.crc32(b"sign:" + token.encode("utf-8")) & 1 else -1.0


def fingerprint(*parts: bytes) -> str:
    """Short stable hex digest over the given byte chunks."""
    h = hashlib.blake2b(digest_size=16)
    for part in parts:
        h.update(len(part).to_bytes(8, "little"))
        h.update(part)
    return h.hexdigest()
