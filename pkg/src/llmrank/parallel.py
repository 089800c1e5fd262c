"""Parallelism cap via the LLMRANK_THREADS environment variable."""

from __future__ import annotations

import os


def max_threads() -> int:
    """Worker cap for fan-out loops; defaults to 1 (sequential)."""
    raw = os.environ.get("LLMRANK_THREADS", "")
    try:
        value = int(raw)
    except ValueError:
        return 1
    return max(1, value)
