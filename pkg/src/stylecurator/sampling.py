"""Seeded, platform-independent sampling primitives.

Sampling anywhere in the pipeline is a keyed permutation: items are ranked
by SHA-256 over (seed, salt, item key) and a sample is a prefix of that
ranking. The scheme is fully specified (no library RNG stream to drift
across versions or platforms), and growing the sample size with a fixed
seed only ever extends the prefix, which makes mixing-ratio monotonicity
a testable property.
"""

from __future__ import annotations

import hashlib
from typing import Callable, Iterable, Sequence, TypeVar

T = TypeVar("T")

SAMPLER_NAME = "sha256-perm-v1"


def _rank(seed: int, salt: str, key: str) -> bytes:
    payload = f"{seed}\x1f{salt}\x1f{key}".encode("utf-8")
    return hashlib.sha256(payload).digest()


def seeded_permutation(
    items: Sequence[T], seed: int, salt: str, key: Callable[[T], str] = str
) -> list[T]:
    """Deterministic pseudo-random order of items, keyed by (seed, salt)."""
    return sorted(items, key=lambda it: (_rank(seed, salt, key(it)), key(it)))


def sample_prefix(
    items: Sequence[T], k: int, seed: int, salt: str, key: Callable[[T], str] = str
) -> list[T]:
    """First k elements of the seeded permutation (uniform without replacement)."""
    if k < 0:
        raise ValueError(f"sample size must be non-negative, got {k}")
    if k >= len(items):
        return list(seeded_permutation(items, seed, salt, key))
    return seeded_permutation(items, seed, salt, key)[:k]
