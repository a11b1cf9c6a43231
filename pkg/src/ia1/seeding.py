"""Deterministic seed derivation.

Per-example seeds are derived from (global seed, stable identifiers) with a
keyed hash rather than Python's salted ``hash()``, so generation is
order-independent, parallelizable, and reproducible across processes.
"""

import hashlib
import os


def derive_seed(*parts: object) -> int:
    """Map an arbitrary tuple of identifiers to a stable 64-bit seed."""
    text = "\x1f".join(str(p) for p in parts)
    digest = hashlib.blake2b(text.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def effective_threads() -> int:
    """Intra-stage parallelism cap from IA1_THREADS (default: single-threaded)."""
    raw = os.environ.get("IA1_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1
