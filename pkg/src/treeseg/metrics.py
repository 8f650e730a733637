"""Pk and WindowDiff segmentation error metrics over utterance indices.

Both metrics slide a window of width ``k`` over the timeline. For each probe
position ``t`` in ``[0, T - k)`` they look at utterances ``t`` and ``t + k``:

* Pk counts probes where reference and hypothesis disagree on whether the two
  utterances share a segment.
* WindowDiff counts probes where the two segmentations place a different
  number of boundaries inside ``(t, t + k]``.

Scores are the fraction of erroneous probes, so 0 is perfect.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Union

import numpy as np

from .exceptions import DegenerateInputError
from .partition import FlatPartition


@dataclass(frozen=True)
class BoundarySeq:
    """Sorted boundary positions in ``1..T-1``; ``p`` separates ``p - 1`` and ``p``."""

    T: int
    positions: tuple[int, ...]

    def __post_init__(self):
        pos = tuple(int(p) for p in self.positions)
        if any(b <= a for a, b in zip(pos, pos[1:])):
            raise ValueError("boundary positions must be strictly increasing")
        if pos and (pos[0] < 1 or pos[-1] > self.T - 1):
            raise ValueError(f"boundary positions must lie in 1..{self.T - 1}")
        object.__setattr__(self, "positions", pos)

    @classmethod
    def from_partition(cls, partition: FlatPartition) -> "BoundarySeq":
        return cls(partition.T, tuple(partition.boundaries))

    @classmethod
    def of(cls, T: int, positions: Iterable[int]) -> "BoundarySeq":
        return cls(T, tuple(sorted(positions)))

    def to_partition(self) -> FlatPartition:
        return FlatPartition.from_boundaries(self.T, self.positions)

    def indicator(self) -> np.ndarray:
        """``ind[p] = 1`` iff there is a boundary at ``p`` (length ``T + 1``)."""
        ind = np.zeros(self.T + 1, dtype=np.int64)
        ind[list(self.positions)] = 1
        return ind


Segmentation = Union[BoundarySeq, FlatPartition]


def _as_boundaries(seg: Segmentation) -> BoundarySeq:
    return BoundarySeq.from_partition(seg) if isinstance(seg, FlatPartition) else seg


def default_k(ref: Segmentation) -> int:
    """Half the mean reference segment length, rounded half up, at least 1."""
    ref = _as_boundaries(ref)
    half_mean = ref.T / (2.0 * (len(ref.positions) + 1))
    return max(1, int(np.floor(half_mean + 0.5)))


def _window_counts(seq: BoundarySeq, k: int) -> np.ndarray:
    # boundaries in (t, t + k] for t = 0 .. T - k - 1
    csum = np.cumsum(seq.indicator())
    t = np.arange(seq.T - k)
    return csum[t + k] - csum[t]


def _prepare(ref, hyp, k):
    ref, hyp = _as_boundaries(ref), _as_boundaries(hyp)
    if ref.T != hyp.T:
        raise ValueError(f"length mismatch: reference T={ref.T}, hypothesis T={hyp.T}")
    if ref.T < 2:
        raise DegenerateInputError("metrics need T >= 2")
    if k is None:
        k = default_k(ref)
    if k < 1:
        raise ValueError("k must be >= 1")
    if ref.T <= k:
        raise DegenerateInputError(f"window k={k} does not fit in T={ref.T}")
    return ref, hyp, k


def pk(ref: Segmentation, hyp: Segmentation, k: Optional[int] = None) -> float:
    ref, hyp, k = _prepare(ref, hyp, k)
    r = _window_counts(ref, k) > 0
    h = _window_counts(hyp, k) > 0
    return float(np.count_nonzero(r != h)) / (ref.T - k)


def windiff(ref: Segmentation, hyp: Segmentation, k: Optional[int] = None) -> float:
    ref, hyp, k = _prepare(ref, hyp, k)
    r = _window_counts(ref, k)
    h = _window_counts(hyp, k)
    return float(np.count_nonzero(r != h)) / (ref.T - k)


def score(ref: Segmentation, hyp: Segmentation, k: Optional[int] = None) -> tuple[float, float]:
    """``(pk, windiff)`` with a shared window."""
    ref_b = _as_boundaries(ref)
    k = default_k(ref_b) if k is None else k
    return pk(ref_b, hyp, k), windiff(ref_b, hyp, k)
