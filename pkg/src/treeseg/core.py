"""Divisive clustering of an embedding timeline into a binary partition tree.

A segment's cost is its within-segment sum of squared errors (SSE) around its
mean. Splitting a segment at boundary ``i`` costs
``SSE(start, i) + SSE(i, end)``; every boundary leaving both children with at
least ``M`` utterances is a candidate. Leaves are split best-first, always
taking the leaf whose best candidate reduces SSE the most, until ``K_max``
leaves exist or no leaf has ``2 * M`` utterances.

All SSE values come from cumulative sums of vectors and squared norms, so the
candidate scan of one node is a single vectorized pass.
"""

from __future__ import annotations

import heapq
import json
from dataclasses import dataclass, field
from typing import IO, Iterator, Optional, Sequence

import numpy as np

from .exceptions import IntegrityError
from .partition import FlatPartition

DEFAULT_MIN_SIZE = 5
SPLIT_SCORES = ("gain", "loss")

# below this fraction of the prefix energy the fast SSE may have lost digits
_REFINE_RATIO = 1e-5
_NEGATIVE_TOLERANCE = 1e-6


@dataclass(frozen=True, eq=False)
class PrefixSums:
    """Cumulative sums over a (globally centered) embedding timeline.

    ``S1[b] - S1[a]`` is the vector sum of rows ``[a, b)`` and
    ``S2[b] - S2[a]`` their summed squared norms. Rows are centered on the
    timeline mean first, which leaves every SSE unchanged and keeps the
    cumulative sums small. ``E`` holds the rows as given, for exact
    recomputation.
    """

    S1: np.ndarray
    S2: np.ndarray
    E: np.ndarray

    @property
    def T(self) -> int:
        return self.E.shape[0]


def build_prefix_sums(E, center: bool = True) -> PrefixSums:
    E = np.asarray(getattr(E, "vectors", E), dtype=np.float64)
    if E.ndim == 1:
        E = E[:, None]
    if E.ndim != 2 or E.shape[0] == 0:
        raise ValueError(f"expected a non-empty (T, d) array, got shape {E.shape}")
    if not np.isfinite(E).all():
        raise IntegrityError("embedding timeline contains non-finite values")
    C = E - E.mean(axis=0) if center else E
    T, d = C.shape
    S1 = np.zeros((T + 1, d))
    np.cumsum(C, axis=0, out=S1[1:])
    S2 = np.zeros(T + 1)
    np.cumsum(np.einsum("td,td->t", C, C), out=S2[1:])
    E = E.copy()
    for arr in (S1, S2, E):
        arr.setflags(write=False)
    return PrefixSums(S1, S2, E)


def _two_pass_sse(E: np.ndarray, a: int, b: int) -> float:
    seg = E[a:b]
    dev = seg - seg.mean(axis=0)
    return float(np.einsum("td,td->", dev, dev))


def _sse_many(ps: PrefixSums, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    n = (b - a).astype(np.float64)
    s = ps.S1[b] - ps.S1[a]
    sse = (ps.S2[b] - ps.S2[a]) - np.einsum("kd,kd->k", s, s) / n
    scale = ps.S2[b]
    if (sse < -_NEGATIVE_TOLERANCE * np.maximum(scale, 1.0)).any():
        raise IntegrityError("prefix sums produced a strongly negative SSE")
    for k in np.flatnonzero((sse <= _REFINE_RATIO * scale) & (scale > 0)):
        # cancellation: recompute exactly from the rows
        sse[k] = _two_pass_sse(ps.E, int(a[k]), int(b[k]))
    return sse


def segment_sse(ps: PrefixSums, a: int, b: int) -> float:
    """Sum of squared distances of rows ``[a, b)`` to their mean."""
    if not 0 <= a < b <= ps.T:
        raise ValueError(f"invalid segment [{a}, {b}) for T={ps.T}")
    return float(_sse_many(ps, np.array([a]), np.array([b]))[0])


def split_loss(ps: PrefixSums, a: int, b: int, i: int) -> float:
    if not a < i < b:
        raise ValueError(f"split {i} must lie strictly inside [{a}, {b})")
    return segment_sse(ps, a, i) + segment_sse(ps, i, b)


@dataclass(frozen=True)
class SplitCandidate:
    start: int
    end: int
    index: int
    loss: float
    gain: float


@dataclass
class SearchStats:
    loss_evaluations: int = 0
    nodes_scanned: int = 0
    node_sizes: int = 0


def best_split(ps: PrefixSums, start: int, end: int, M: int,
               stats: Optional[SearchStats] = None) -> Optional[SplitCandidate]:
    """Lowest-loss boundary in ``[start, end)`` with both sides >= ``M``.

    Ties go to the smallest boundary. Returns ``None`` when the span is
    shorter than ``2 * M``.
    """
    if M < 1:
        raise ValueError("M must be >= 1")
    if end - start < 2 * M:
        return None
    cand = np.arange(start + M, end - M + 1)
    lo = np.full(cand.shape, start)
    hi = np.full(cand.shape, end)
    losses = _sse_many(ps, lo, cand) + _sse_many(ps, cand, hi)
    j = int(np.argmin(losses))
    if stats is not None:
        stats.loss_evaluations += len(cand)
        stats.nodes_scanned += 1
        stats.node_sizes += end - start
    parent = segment_sse(ps, start, end)
    loss = float(losses[j])
    return SplitCandidate(start, end, int(cand[j]), loss, max(0.0, parent - loss))


@dataclass(eq=False)
class TreeNode:
    start: int
    end: int
    split: Optional[int] = None
    order: Optional[int] = None
    left: Optional["TreeNode"] = None
    right: Optional["TreeNode"] = None
    candidate: Optional[SplitCandidate] = field(default=None, repr=False)

    @property
    def size(self) -> int:
        return self.end - self.start

    @property
    def is_leaf(self) -> bool:
        return self.left is None

    @property
    def children(self) -> list["TreeNode"]:
        return [] if self.left is None else [self.left, self.right]

    def to_dict(self) -> dict:
        return {"start": self.start, "end": self.end, "split": self.split,
                "order": self.order, "children": [c.to_dict() for c in self.children]}

    def same_structure(self, other: "TreeNode") -> bool:
        return self.to_dict() == other.to_dict()


@dataclass(eq=False)
class PartitionTree:
    """Binary partition tree; ``splits[k]`` is the node divided ``k``-th."""

    root: TreeNode
    M: int
    k_max: Optional[int] = None
    splits: list[TreeNode] = field(default_factory=list)
    stats: SearchStats = field(default_factory=SearchStats, repr=False)

    @property
    def T(self) -> int:
        return self.root.end

    @property
    def leaf_count(self) -> int:
        return len(self.splits) + 1

    @property
    def K(self) -> int:
        return self.leaf_count

    @property
    def reached_k_max(self) -> bool:
        return self.k_max is None or self.leaf_count >= self.k_max

    def nodes(self) -> Iterator[TreeNode]:
        stack = [self.root]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(reversed(node.children))

    def leaves(self) -> FlatPartition:
        return FlatPartition(tuple((n.start, n.end) for n in self.nodes() if n.is_leaf))

    def leaves_at_k(self, K: int) -> FlatPartition:
        return leaves_at_k(self, K)

    def to_dict(self) -> dict:
        return {"T": self.T, "M": self.M, "K": self.leaf_count, "K_max": self.k_max,
                "root": self.root.to_dict()}

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    def dump(self, stream: IO[str]) -> None:
        stream.write(self.dumps())
        stream.write("\n")

    @classmethod
    def from_dict(cls, obj: dict) -> "PartitionTree":
        def build(d):
            node = TreeNode(d["start"], d["end"], d.get("split"), d.get("order"))
            kids = d.get("children") or []
            if kids:
                if len(kids) != 2 or node.split is None or node.order is None:
                    raise ValueError(f"internal node [{node.start}, {node.end}) must have split, order and two children")
                node.left, node.right = build(kids[0]), build(kids[1])
                if (node.left.start, node.left.end, node.right.start, node.right.end) != (
                        node.start, node.split, node.split, node.end):
                    raise ValueError(f"children of [{node.start}, {node.end}) do not match split {node.split}")
            return node

        root = build(obj["root"])
        if root.start != 0 or root.end != obj["T"]:
            raise ValueError("root must span [0, T)")
        tree = cls(root, int(obj["M"]), obj.get("K_max"))
        internal = sorted((n for n in tree.nodes() if not n.is_leaf), key=lambda n: n.order)
        if [n.order for n in internal] != list(range(len(internal))):
            raise ValueError("split orders must be 0..n-1")
        tree.splits = internal
        if tree.leaf_count != obj["K"]:
            raise ValueError(f"K={obj['K']} does not match {tree.leaf_count} leaves")
        return tree

    @classmethod
    def loads(cls, text: str) -> "PartitionTree":
        return cls.from_dict(json.loads(text))

    @classmethod
    def from_splits(cls, T: int, boundaries: Sequence[int], M: int = 1) -> "PartitionTree":
        """Tree obtained by inserting ``boundaries`` one at a time, in order."""
        root = TreeNode(0, T)
        tree = cls(root, M)
        for order, b in enumerate(boundaries):
            node = root
            while not node.is_leaf:
                node = node.left if b < node.split else node.right
            if not node.start < b < node.end:
                raise ValueError(f"boundary {b} already used or outside [0, {T})")
            _apply_split(node, b, order)
            tree.splits.append(node)
        tree.k_max = tree.leaf_count
        return tree


def _apply_split(node: TreeNode, index: int, order: int) -> None:
    node.split = index
    node.order = order
    node.left = TreeNode(node.start, index)
    node.right = TreeNode(index, node.end)


def _priority(cand: SplitCandidate, score: str) -> float:
    return -cand.gain if score == "gain" else cand.loss


def divide(E, K_max: Optional[int] = None, M: int = DEFAULT_MIN_SIZE,
           score: str = "gain") -> PartitionTree:
    """Grow a binary partition tree best-first.

    Each node's best split is computed once, when the node is created, and
    kept in a heap. ``score="gain"`` (default) splits the leaf with the largest
    SSE reduction; ``score="loss"`` the leaf with the smallest split loss. Ties
    go to the leftmost leaf. With ``K_max=None`` splitting continues until no
    leaf can be divided.
    """
    if score not in SPLIT_SCORES:
        raise ValueError(f"score must be one of {SPLIT_SCORES}")
    if M < 1:
        raise ValueError("M must be >= 1")
    if K_max is not None and K_max < 1:
        raise ValueError("K_max must be >= 1")
    ps = E if isinstance(E, PrefixSums) else build_prefix_sums(E)

    root = TreeNode(0, ps.T)
    tree = PartitionTree(root, M, K_max)
    heap: list = []

    def push(node: TreeNode):
        node.candidate = best_split(ps, node.start, node.end, M, tree.stats)
        if node.candidate is not None:
            heapq.heappush(heap, (_priority(node.candidate, score), node.start, id(node), node))

    push(root)
    while heap and (K_max is None or tree.leaf_count < K_max):
        *_, node = heapq.heappop(heap)
        _apply_split(node, node.candidate.index, len(tree.splits))
        tree.splits.append(node)
        push(node.left)
        push(node.right)
    return tree


def leaves_at_k(tree: PartitionTree, K: int) -> FlatPartition:
    """Leaves after replaying the first ``K - 1`` divisions of ``tree``."""
    if not 1 <= K <= tree.leaf_count:
        raise ValueError(f"K must be in 1..{tree.leaf_count}, got {K}")
    spans = []
    stack = [tree.root]
    while stack:
        node = stack.pop()
        if node.is_leaf or node.order >= K - 1:
            spans.append((node.start, node.end))
        else:
            stack.extend([node.right, node.left])
    return FlatPartition(tuple(spans))


def partition_sse(ps: PrefixSums, partition: FlatPartition) -> float:
    return sum(segment_sse(ps, s, e) for s, e in partition)


def load_tree(path) -> PartitionTree:
    with open(path, encoding="utf-8") as fh:
        return PartitionTree.loads(fh.read())
