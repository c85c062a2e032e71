"""Stable seed derivation for reproducible, parallelism-proof experiments.

Python's builtin ``hash`` is randomized per process, so derived seeds go
through SHA-256 instead: the same (master seed, excerpt id, trial, ...)
chain yields the same substream on every machine and under any worker
scheduling.
"""

from __future__ import annotations

import hashlib


def stable_seed(*parts) -> int:
    """Deterministic 63-bit seed from an arbitrary mix of ints and strings."""
    text = "\x1f".join(str(part) for part in parts)
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little") & 0x7FFFFFFFFFFFFFFF
