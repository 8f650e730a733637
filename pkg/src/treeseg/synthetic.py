"""Synthetic timelines with planted topic structure.

Each topic gets a mean vector; utterance embeddings are the topic mean plus
isotropic Gaussian noise. Used for demos and for recovery tests where the
correct segmentation is known.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .embedding import EmbeddingTimeline
from .ingest import CorpusEntry, GroundTruthTree, Timeline, TreeNode
from .partition import FlatPartition


@dataclass
class PlantedTimeline:
    embeddings: EmbeddingTimeline
    truth: FlatPartition
    means: np.ndarray
    separation: float
    noise: float


def log_uniform_sizes(rng: np.random.Generator, n: int, low: int, high: int) -> list[int]:
    return [int(round(np.exp(rng.uniform(np.log(low), np.log(high))))) for _ in range(n)]


def planted_timeline(sizes, rng: np.random.Generator, dim: int = 16,
                     noise_ratio: float = 0.05) -> PlantedTimeline:
    """Piecewise-constant means plus noise with std ``noise_ratio * separation``.

    ``separation`` is the smallest distance between the means of adjacent
    topics.
    """
    means = rng.standard_normal((len(sizes), dim))
    means /= np.linalg.norm(means, axis=1, keepdims=True)
    if len(sizes) > 1:
        separation = float(np.linalg.norm(np.diff(means, axis=0), axis=1).min())
    else:
        separation = 1.0
    sigma = noise_ratio * separation
    E = np.concatenate([m + sigma * rng.standard_normal((n, dim)) for m, n in zip(means, sizes)])
    return PlantedTimeline(EmbeddingTimeline(E, "planted", 0), FlatPartition.from_sizes(sizes),
                           means, separation, sigma)


def dummy_timeline(T: int) -> Timeline:
    return Timeline.from_texts([f"utterance {i}" for i in range(T)])


def flat_tree(partition: FlatPartition) -> GroundTruthTree:
    root = TreeNode(0, partition.T, [TreeNode(s, e) for s, e in partition])
    return GroundTruthTree(root)


def random_tree(rng: np.random.Generator, T: int, depth: int, fanout=(2, 5),
                min_leaf: int = 5) -> GroundTruthTree:
    """Random nested annotation; every node at depth < ``depth`` is subdivided when it fits."""

    def grow(node: TreeNode, d: int):
        if d == depth:
            return
        k = int(rng.integers(fanout[0], fanout[1] + 1))
        k = min(k, node.size // min_leaf)
        if k < 2:
            return
        cuts = np.sort(rng.choice(np.arange(1, node.size), size=k - 1, replace=False))
        edges = [node.start, *(node.start + int(c) for c in cuts), node.end]
        node.children = [TreeNode(a, b) for a, b in zip(edges[:-1], edges[1:])]
        for child in node.children:
            grow(child, d + 1)

    root = TreeNode(0, T)
    grow(root, 0)
    return GroundTruthTree(root)


def planted_corpus(n: int, rng: np.random.Generator, topics=(3, 8), min_size: int = 5,
                   max_size: int = 150, dim: int = 16, noise_ratio: float = 0.05):
    """``n`` flat-annotated planted timelines with segments of at least ``2 * min_size``.

    Returns ``(entries, embeddings)`` with embeddings keyed by transcript id.
    """
    entries, embeddings = [], {}
    for j in range(n):
        k = int(rng.integers(topics[0], topics[1] + 1))
        sizes = log_uniform_sizes(rng, k, 2 * min_size, max_size)
        planted = planted_timeline(sizes, rng, dim, noise_ratio)
        tid = f"synthetic-{j:03d}"
        entries.append(CorpusEntry(tid, dummy_timeline(planted.truth.T), flat_tree(planted.truth)))
        embeddings[tid] = planted.embeddings
    return entries, embeddings
