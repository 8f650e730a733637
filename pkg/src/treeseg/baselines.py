"""Naive segmenters and the common segmenter interface.

A segmenter is fitted once per transcript (``fit``) and then queried for any
number of segments ``K`` (``query``). Hierarchical segmenters return nested
boundaries as ``K`` grows.
"""

from __future__ import annotations

from typing import Optional, Protocol, Union

from .core import DEFAULT_MIN_SIZE, PartitionTree, divide, leaves_at_k
from .embedding import EmbeddingTimeline
from .partition import FlatPartition

MASK64 = (1 << 64) - 1


class SplitMix64:
    """SplitMix64 generator (Steele, Lea & Flood), state advanced by the golden gamma.

    Constants: increment 0x9E3779B97F4A7C15, mixing multipliers
    0xBF58476D1CE4E5B9 and 0x94D049BB133111EB with shifts 30, 27, 31.
    """

    GAMMA = 0x9E3779B97F4A7C15
    MUL1 = 0xBF58476D1CE4E5B9
    MUL2 = 0x94D049BB133111EB

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next(self) -> int:
        self.state = (self.state + self.GAMMA) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * self.MUL1) & MASK64
        z = ((z ^ (z >> 27)) * self.MUL2) & MASK64
        return z ^ (z >> 31)

    def below(self, n: int) -> int:
        """Uniform integer in ``[0, n)`` by rejection (no modulo bias)."""
        if n <= 0:
            raise ValueError("n must be positive")
        threshold = (1 << 64) % n
        while True:
            x = self.next()
            if x >= threshold:
                return x % n


def equi_seg(T: int, K: int) -> FlatPartition:
    if not 1 <= K <= T:
        raise ValueError(f"K must be in 1..{T}, got {K}")
    edges = [b * T // K for b in range(K + 1)]
    return FlatPartition(tuple(zip(edges[:-1], edges[1:])))


def random_seg(T: int, K: int, seed: int) -> FlatPartition:
    """``K - 1`` distinct boundaries drawn uniformly from ``1..T-1``.

    Uses Floyd's subset sampling on a SplitMix64 stream, so a seed gives the
    same partition on every platform.
    """
    if not 1 <= K <= T:
        raise ValueError(f"K must be in 1..{T}, got {K}")
    rng = SplitMix64(seed)
    n, k = T - 1, K - 1
    chosen: set[int] = set()
    for j in range(n - k, n):
        t = rng.below(j + 1)
        chosen.add(j if t in chosen else t)
    return FlatPartition.from_boundaries(T, (c + 1 for c in chosen))


Source = Union[EmbeddingTimeline, int]


def _length(source: Source) -> int:
    return source if isinstance(source, int) else len(source)


class Fitted(Protocol):
    max_k: int

    def query(self, K: int, seed: Optional[int] = None) -> FlatPartition: ...


class Segmenter(Protocol):
    name: str
    needs_embeddings: bool
    repetitions: int

    def fit(self, source: Source, k_max: Optional[int] = None) -> Fitted: ...


class _FittedLength:
    def __init__(self, T, fn):
        self.T = T
        self.max_k = T
        self._fn = fn

    def query(self, K, seed=None):
        return self._fn(self.T, min(K, self.T), seed)


class EquiSeg:
    name = "equi"
    needs_embeddings = False
    repetitions = 1

    def fit(self, source: Source, k_max=None):
        return _FittedLength(_length(source), lambda T, K, seed: equi_seg(T, K))


class RandomSeg:
    """Single random draw per query; the harness repeats and averages."""

    name = "random"
    needs_embeddings = False

    def __init__(self, repetitions: int = 100):
        self.repetitions = repetitions

    def fit(self, source: Source, k_max=None):
        return _FittedLength(_length(source), lambda T, K, seed: random_seg(T, K, 0 if seed is None else seed))


class FittedTree:
    """Serve any ``K`` from one partition tree by replaying its divisions."""

    def __init__(self, tree: PartitionTree):
        self.tree = tree
        self.max_k = tree.leaf_count

    def query(self, K, seed=None):
        return leaves_at_k(self.tree, min(K, self.tree.leaf_count))


class TreeSeg:
    name = "treeseg"
    needs_embeddings = True
    repetitions = 1

    def __init__(self, min_size: int = DEFAULT_MIN_SIZE, score: str = "gain"):
        self.min_size = min_size
        self.score = score

    def fit(self, source, k_max=None):
        if isinstance(source, int):
            raise TypeError("TreeSeg needs an embedding timeline")
        return FittedTree(divide(source, k_max, self.min_size, self.score))

