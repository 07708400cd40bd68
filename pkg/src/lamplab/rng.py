"""Reproducible random streams.

Every random draw in the package comes from a counter-based Philox
generator keyed by a SHA-256 hash of ``(master_seed, *scope)``.  Scope
parts are strings or integers naming the role of the stream, e.g.
``substream(seed, "sensor", "haar", trial)``.  Distinct scopes give
independent streams, identical scopes give bit-identical streams on
every platform and regardless of execution order, which is what makes
threaded trial loops deterministic.
"""

from __future__ import annotations

import hashlib

import numpy as np


def _derive_key(master_seed: int, scope: tuple) -> int:
    """128-bit Philox key from the master seed and a scope tuple."""
    tag = "\x1f".join([repr(int(master_seed))] + [repr(s) for s in scope])
    digest = hashlib.sha256(tag.encode("utf-8")).digest()
    return int.from_bytes(digest[:16], "little")


def substream(master_seed: int, *scope: int | str) -> np.random.Generator:
    """Return the named substream of the master seed."""
    return np.random.Generator(np.random.Philox(key=_derive_key(master_seed, scope)))


def derive_seed(master_seed: int, *scope: int | str) -> int:
    """A child master seed, for components that split further themselves."""
    return _derive_key(master_seed, scope)


def sample_selection(rng: np.random.Generator, m: int, n: int) -> np.ndarray:
    """First ``n`` entries of a partial Fisher-Yates shuffle of ``[1..m]``, sorted.

    Returns a 1-based int64 array of ``n`` distinct indices.
    """
    if not 0 < n < m:
        raise ValueError(f"need 0 < n < m, got n={n}, m={m}")
    idx = np.arange(1, m + 1, dtype=np.int64)
    draws = rng.integers(np.arange(n), m)
    for t in range(n):
        j = draws[t]
        idx[t], idx[j] = idx[j], idx[t]
    sel = idx[:n]
    sel.sort()
    return sel
