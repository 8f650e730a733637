"""Hierarchical topic segmentation of transcripts by divisive clustering."""

from .baselines import EquiSeg, FittedTree, RandomSeg, SplitMix64, TreeSeg, equi_seg, random_seg
from .core import (
    PartitionTree,
    PrefixSums,
    SplitCandidate,
    best_split,
    build_prefix_sums,
    divide,
    leaves_at_k,
    segment_sse,
    split_loss,
)
from .embedding import (
    Block,
    EmbeddingCache,
    EmbeddingTimeline,
    HashBackend,
    RemoteBackend,
    deterministic_backend,
    embed_timeline,
    extract_blocks,
    remote_backend,
)
from .evalharness import EvalConfig, EvalReport, emit_report, evaluate_corpus, evaluate_transcript, load_report
from .ingest import (
    GroundTruthTree,
    Timeline,
    Utterance,
    corpus_stats,
    flatten_at_depth,
    load_corpus,
    parse_annotation,
    parse_transcript,
    prune_flat,
)
from .metrics import BoundarySeq, pk, windiff
from .partition import FlatPartition

__version__ = "0.1.0"
