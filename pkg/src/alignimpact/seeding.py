"""Deterministic seed derivation.

Every randomized stage derives its own seed from the run seed plus a short
tag path, so stages stay independent (reordering one never shifts another's
randomness) and runs are reproducible across processes and platforms.
"""
from __future__ import annotations

import hashlib


def derive_seed(base: int, *tags: object) -> int:
    """Mix a base seed and tag path into a stable non-negative 63-bit seed."""
    material = repr(int(base)) + "".join("|" + repr(t) for t in tags)
    digest = hashlib.sha256(material.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") >> 1
