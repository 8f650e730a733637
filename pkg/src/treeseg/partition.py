"""Flat partitions of a timeline into contiguous segments.

Spans are half-open ``(start, end)`` pairs over utterance indices. A flat
partition of a timeline of length ``T`` is an ordered tuple of spans that are
contiguous, disjoint and cover ``[0, T)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

Span = tuple[int, int]


@dataclass(frozen=True)
class FlatPartition:
    spans: tuple[Span, ...]

    def __post_init__(self):
        spans = tuple((int(s), int(e)) for s, e in self.spans)
        if not spans:
            raise ValueError("a partition needs at least one segment")
        if spans[0][0] != 0:
            raise ValueError(f"partition must start at 0, got {spans[0][0]}")
        for (s0, e0), (s1, e1) in zip(spans, spans[1:]):
            if e0 != s1:
                raise ValueError(f"segments {(s0, e0)} and {(s1, e1)} are not contiguous")
        for s, e in spans:
            if e <= s:
                raise ValueError(f"empty or reversed segment {(s, e)}")
        object.__setattr__(self, "spans", spans)

    @classmethod
    def from_sizes(cls, sizes: Iterable[int]) -> "FlatPartition":
        spans = []
        start = 0
        for size in sizes:
            spans.append((start, start + int(size)))
            start += int(size)
        return cls(tuple(spans))

    @classmethod
    def from_boundaries(cls, T: int, boundaries: Iterable[int]) -> "FlatPartition":
        """Build from interior boundary positions in ``1..T-1``.

        A boundary at ``p`` separates utterance ``p - 1`` from ``p``.
        """
        cuts = sorted(set(int(b) for b in boundaries))
        if cuts and (cuts[0] < 1 or cuts[-1] > T - 1):
            raise ValueError(f"boundaries must lie in 1..{T - 1}")
        edges = [0, *cuts, T]
        return cls(tuple(zip(edges[:-1], edges[1:])))

    @property
    def T(self) -> int:
        return self.spans[-1][1]

    @property
    def sizes(self) -> list[int]:
        return [e - s for s, e in self.spans]

    @property
    def boundaries(self) -> list[int]:
        return [s for s, _ in self.spans[1:]]

    def labels(self) -> list[int]:
        """Segment index of every utterance."""
        out = []
        for k, (s, e) in enumerate(self.spans):
            out.extend([k] * (e - s))
        return out

    def __len__(self) -> int:
        return len(self.spans)

    def __iter__(self):
        return iter(self.spans)


def is_valid_partition(spans: Sequence[Span], T: int) -> bool:
    try:
        part = FlatPartition(tuple(spans))
    except ValueError:
        return False
    return part.T == T
