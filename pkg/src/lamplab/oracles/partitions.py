"""Set partitions, weighted graphs and block-constant labellings.

These index the matrix moments ``prod_{i<j} Psi[a_i, a_j]^{w_ij}``: a
partition of ``[k]`` groups the positions, a symmetric nonnegative
integer matrix ``w`` weights the position pairs, and a labelling
assigns one index in ``[1..m]`` per block.  Conflict-freeness is the
XOR condition under which the structured ensemble's moments match the
rotation-invariant ones.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterator, NamedTuple

import numpy as np

from ..errors import InvalidInputError, NumericFailureError, SizeLimitError
from ..sensing import xor_index

MAX_PARTITION_K = 8
MAX_EXHAUSTIVE_M = 64
MAX_EXHAUSTIVE_BLOCKS = 5


@dataclass(frozen=True)
class Partition:
    """Partition of ``[k]`` stored as a restricted-growth string.

    ``rgs`` is 1-based: ``rgs[0] = 1`` and each later value is at most
    one more than the running maximum.  ``blocks`` lists 1-based element
    indices per block, in order of first appearance.
    """

    rgs: tuple[int, ...]
    blocks: tuple[tuple[int, ...], ...] = field(init=False)

    def __post_init__(self):
        if not self.rgs or self.rgs[0] != 1:
            raise InvalidInputError("restricted-growth string must start at 1")
        top = 0
        for v in self.rgs:
            if v < 1 or v > top + 1:
                raise InvalidInputError(f"invalid restricted-growth string {self.rgs}")
            top = max(top, v)
        blocks = [[] for _ in range(top)]
        for pos, v in enumerate(self.rgs, start=1):
            blocks[v - 1].append(pos)
        object.__setattr__(self, "blocks", tuple(tuple(b) for b in blocks))

    @property
    def k(self) -> int:
        return len(self.rgs)

    @property
    def size(self) -> int:
        """Number of blocks."""
        return len(self.blocks)

    def block_of(self, s: int) -> int:
        """1-based block index of element ``s``."""
        return self.rgs[s - 1]

    @classmethod
    def singletons(cls, k: int) -> "Partition":
        return cls(tuple(range(1, k + 1)))

    @classmethod
    def from_blocks(cls, blocks: list[list[int]], k: int) -> "Partition":
        rgs = [0] * k
        for bi, block in enumerate(sorted(blocks, key=min), start=1):
            for el in block:
                rgs[el - 1] = bi
        if 0 in rgs:
            raise InvalidInputError("blocks must cover [1..k]")
        return cls(tuple(rgs))


def enumerate_partitions(k: int) -> list[Partition]:
    """All set partitions of ``[k]`` (Bell-number many), ``k <= 8``."""
    if k < 1:
        raise InvalidInputError("k must be >= 1")
    if k > MAX_PARTITION_K:
        raise SizeLimitError(f"partition enumeration capped at k <= {MAX_PARTITION_K}")
    out: list[Partition] = []

    def grow(prefix: list[int], top: int) -> None:
        if len(prefix) == k:
            out.append(Partition(tuple(prefix)))
            return
        for v in range(1, top + 2):
            prefix.append(v)
            grow(prefix, max(top, v))
            prefix.pop()

    grow([1], 1)
    return out


@dataclass(frozen=True)
class WeightedGraph:
    """Symmetric nonnegative integer weights on ``[k]``, zero diagonal."""

    w: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.w, dtype=np.int64)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise InvalidInputError("weight matrix must be square")
        if not np.array_equal(w, w.T):
            raise InvalidInputError("weight matrix must be symmetric")
        if np.any(np.diag(w) != 0):
            raise InvalidInputError("weight matrix must have zero diagonal")
        if np.any(w < 0):
            raise InvalidInputError("weights must be nonnegative")
        object.__setattr__(self, "w", w)

    @property
    def k(self) -> int:
        return self.w.shape[0]

    def degree(self, i: int) -> int:
        """Total weight at node ``i`` (1-based)."""
        return int(self.w[i - 1].sum())

    @property
    def total_weight(self) -> int:
        return int(self.w.sum() // 2)

    @classmethod
    def line(cls, k: int) -> "WeightedGraph":
        """The path graph: unit weights on consecutive nodes."""
        w = np.zeros((k, k), dtype=np.int64)
        for i in range(k - 1):
            w[i, i + 1] = w[i + 1, i] = 1
        return cls(w)

    @classmethod
    def single_edge(cls, k: int, i: int, j: int, weight: int) -> "WeightedGraph":
        w = np.zeros((k, k), dtype=np.int64)
        w[i - 1, j - 1] = w[j - 1, i - 1] = weight
        return cls(w)


@dataclass(frozen=True)
class Labelling:
    """Indices in ``[1..m]``, one shared value per block of a partition."""

    a: tuple[int, ...]

    def validate_for(self, pi: Partition, m: int) -> None:
        if len(self.a) != pi.k:
            raise InvalidInputError(f"labelling length {len(self.a)} != k = {pi.k}")
        if any(not 1 <= v <= m for v in self.a):
            raise InvalidInputError(f"labels must lie in [1..{m}]")
        for s in range(1, pi.k + 1):
            for t in range(s + 1, pi.k + 1):
                same_block = pi.block_of(s) == pi.block_of(t)
                if same_block != (self.a[s - 1] == self.a[t - 1]):
                    raise InvalidInputError(
                        "labelling must be constant exactly on the blocks"
                    )

    def block_value(self, pi: Partition, s: int) -> int:
        """Shared label of block ``s`` (1-based)."""
        return self.a[pi.blocks[s - 1][0] - 1]


def wst(w: WeightedGraph, pi: Partition) -> np.ndarray:
    """Total edge weight between block pairs; ``W[s, s]`` is intra-block."""
    if w.k != pi.k:
        raise InvalidInputError(f"graph on {w.k} nodes vs partition of {pi.k}")
    r = pi.size
    out = np.zeros((r, r), dtype=np.int64)
    for i in range(1, pi.k + 1):
        for j in range(i + 1, pi.k + 1):
            wij = int(w.w[i - 1, j - 1])
            if wij == 0:
                continue
            s = pi.block_of(i) - 1
            t = pi.block_of(j) - 1
            out[s, t] += wij
            if s != t:
                out[t, s] += wij
    return out


def is_disassortative(w: WeightedGraph, pi: Partition) -> bool:
    """True when no edge weight lands inside a block."""
    return not np.any(np.diag(wst(w, pi)))


def _weighted_pairs(w: WeightedGraph, pi: Partition) -> list[tuple[int, int]]:
    mat = wst(w, pi)
    r = pi.size
    return [(s, t) for s in range(1, r + 1) for t in range(s + 1, r + 1) if mat[s - 1, t - 1] >= 1]


def is_conflict_free(a: Labelling, w: WeightedGraph, pi: Partition, m: int) -> bool:
    """No two weighted block pairs share the same XOR of their labels."""
    if not is_disassortative(w, pi):
        raise InvalidInputError("conflict-freeness requires a disassortative weight matrix")
    a.validate_for(pi, m)
    pairs = _weighted_pairs(w, pi)
    xors = [
        xor_index(a.block_value(pi, s), a.block_value(pi, t), m) for (s, t) in pairs
    ]
    return len(set(xors)) == len(xors)


class ConflictFreeCount(NamedTuple):
    cf_count: int
    cset_count: int
    bound: int


def _labelling_chunks(m: int, r: int, chunk: int = 1 << 17) -> Iterator[np.ndarray]:
    perms = itertools.permutations(range(1, m + 1), r)
    while True:
        block = list(itertools.islice(perms, chunk))
        if not block:
            return
        yield np.asarray(block, dtype=np.int64)


def count_conflict_free(w: WeightedGraph, pi: Partition, m: int) -> ConflictFreeCount:
    """Exhaustive count of conflict-free labellings over ``Cset(pi)``.

    Returns the count, ``|Cset| = m (m-1) ... (m-|pi|+1)`` and the
    deficiency bound ``|pi|^4 m^{|pi|-1}``, after checking that the
    deficiency really is within the bound.
    """
    if m > MAX_EXHAUSTIVE_M:
        raise SizeLimitError(f"exhaustive count capped at m <= {MAX_EXHAUSTIVE_M}")
    if pi.size > MAX_EXHAUSTIVE_BLOCKS:
        raise SizeLimitError(f"exhaustive count capped at |pi| <= {MAX_EXHAUSTIVE_BLOCKS}")
    if not is_disassortative(w, pi):
        raise InvalidInputError("counting requires a disassortative weight matrix")
    r = pi.size
    cset = 1
    for i in range(r):
        cset *= m - i
    bound = r**4 * m ** (r - 1)
    pairs = _weighted_pairs(w, pi)
    if len(pairs) < 2:
        return ConflictFreeCount(cf_count=cset, cset_count=cset, bound=bound)
    # chunk columns hold the r block labels; XOR per weighted pair,
    # conflict when two pairs collide
    cf = 0
    for chunk in _labelling_chunks(m, r):
        cols = {s: chunk[:, s - 1] - 1 for s in range(1, r + 1)}
        xors = np.stack([cols[s] ^ cols[t] for (s, t) in pairs], axis=1)
        conflict = np.zeros(chunk.shape[0], dtype=bool)
        for i in range(len(pairs)):
            for j in range(i + 1, len(pairs)):
                conflict |= xors[:, i] == xors[:, j]
        cf += int((~conflict).sum())
    if cset - cf > bound:
        raise NumericFailureError(
            f"conflict deficiency {cset - cf} exceeds bound {bound}"
        )
    return ConflictFreeCount(cf_count=cf, cset_count=cset, bound=bound)
