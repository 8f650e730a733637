"""Transcript and annotation loading, ground-truth trees, pruning and corpus stats.

Transcript files are either line-delimited JSON records::

    {"index": 0, "speaker": "A", "text": "hello", "start": 0.0, "end": 1.2}

or plain text with one utterance per line. Annotation files hold a single
nested span structure ``{"start": 0, "end": T, "children": [...]}`` with
``end`` exclusive.
"""

from __future__ import annotations

import io
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterator, Optional, Sequence

from .exceptions import (
    AnnotationDepthError,
    AnnotationError,
    EmptyInputError,
    ParseError,
)
from .partition import FlatPartition

log = logging.getLogger(__name__)

MAX_ANNOTATION_DEPTH = 4
DEFAULT_MIN_SIZE = 5
TRANSCRIPT_SUFFIXES = (".jsonl", ".txt")
ANNOTATION_SUFFIX = ".annotation.json"


@dataclass(frozen=True)
class Utterance:
    index: int
    text: str
    speaker: Optional[str] = None
    start_time: Optional[float] = None
    end_time: Optional[float] = None


@dataclass(frozen=True)
class Timeline:
    utterances: tuple[Utterance, ...]

    def __post_init__(self):
        if not self.utterances:
            raise EmptyInputError("timeline has no utterances")
        for pos, utt in enumerate(self.utterances):
            if utt.index != pos:
                raise ValueError(f"utterance at position {pos} has index {utt.index}")
            if not utt.text.strip():
                raise ValueError(f"utterance {pos} has empty text")

    @classmethod
    def from_texts(cls, texts: Sequence[str], speakers: Sequence[Optional[str]] | None = None):
        speakers = speakers or [None] * len(texts)
        return cls(tuple(Utterance(i, t, s) for i, (t, s) in enumerate(zip(texts, speakers))))

    @property
    def texts(self) -> list[str]:
        return [u.text for u in self.utterances]

    def __len__(self) -> int:
        return len(self.utterances)

    def __getitem__(self, i):
        return self.utterances[i]

    def __iter__(self) -> Iterator[Utterance]:
        return iter(self.utterances)


def _optional_float(value, line, name):
    if value is None:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ParseError(f"field {name!r} must be a number or null", line)
    return float(value)


def parse_transcript(stream: IO[str], format_id: str = "jsonl") -> Timeline:
    """Parse a transcript stream into a :class:`Timeline`.

    ``format_id`` is ``"jsonl"`` for record files or ``"text"`` for one
    utterance per line. Blank lines are ignored in both formats.
    """
    if format_id not in ("jsonl", "text"):
        raise ValueError(f"unknown transcript format {format_id!r}")

    utterances = []
    for lineno, raw in enumerate(stream, start=1):
        if not raw.strip():
            continue
        if format_id == "text":
            utterances.append(Utterance(len(utterances), raw.strip()))
            continue

        try:
            rec = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON ({exc.msg})", lineno) from None
        if not isinstance(rec, dict):
            raise ParseError("record must be a JSON object", lineno)
        index = rec.get("index")
        if isinstance(index, bool) or not isinstance(index, int):
            raise ParseError("field 'index' must be an integer", lineno)
        if index != len(utterances):
            raise ParseError(f"expected index {len(utterances)}, got {index}", lineno)
        text = rec.get("text")
        if not isinstance(text, str) or not text.strip():
            raise ParseError("field 'text' must be a non-empty string", lineno)
        speaker = rec.get("speaker")
        if speaker is not None and not isinstance(speaker, str):
            raise ParseError("field 'speaker' must be a string or null", lineno)
        utterances.append(
            Utterance(
                index=index,
                text=text.strip(),
                speaker=speaker,
                start_time=_optional_float(rec.get("start"), lineno, "start"),
                end_time=_optional_float(rec.get("end"), lineno, "end"),
            )
        )

    if not utterances:
        raise EmptyInputError("transcript contains no utterances")
    return Timeline(tuple(utterances))


def load_transcript(path) -> Timeline:
    path = Path(path)
    format_id = "text" if path.suffix == ".txt" else "jsonl"
    with open(path, encoding="utf-8") as fh:
        return parse_transcript(fh, format_id)


def write_transcript(timeline: Timeline, stream: IO[str]) -> None:
    for u in timeline:
        rec = {"index": u.index, "speaker": u.speaker, "text": u.text,
               "start": u.start_time, "end": u.end_time}
        stream.write(json.dumps(rec) + "\n")


@dataclass
class TreeNode:
    """A ground-truth segment; ``children`` partition ``[start, end)``."""

    start: int
    end: int
    children: list["TreeNode"] = field(default_factory=list)

    @property
    def size(self) -> int:
        return self.end - self.start

    @property
    def is_leaf(self) -> bool:
        return not self.children

    def depth(self) -> int:
        if not self.children:
            return 0
        return 1 + max(c.depth() for c in self.children)

    def to_dict(self) -> dict:
        return {"start": self.start, "end": self.end,
                "children": [c.to_dict() for c in self.children]}


@dataclass
class GroundTruthTree:
    root: TreeNode

    @property
    def T(self) -> int:
        return self.root.end

    @property
    def depth(self) -> int:
        return self.root.depth()

    def to_dict(self) -> dict:
        return self.root.to_dict()

    @classmethod
    def from_partitions(cls, levels: Sequence[FlatPartition]) -> "GroundTruthTree":
        """Build a tree from nested flat partitions, coarsest first.

        The resulting depth equals ``len(levels)`` and ``flatten_at_depth``
        returns ``levels[tau - 1]`` exactly.
        """
        T = levels[0].T
        root = TreeNode(0, T)
        frontier = [root]
        for part in levels:
            if part.T != T:
                raise AnnotationError("levels cover different timeline lengths")
            nxt = []
            spans = list(part.spans)
            for node in frontier:
                kids = [TreeNode(s, e) for s, e in spans if node.start <= s and e <= node.end]
                if sum(k.size for k in kids) != node.size:
                    raise AnnotationError(f"level does not refine node [{node.start}, {node.end})")
                # single-child nodes keep unrefined segments at their level
                node.children = kids
                nxt.extend(kids)
            frontier = nxt
        return cls(root)


def _build_node(obj, where: str, lineage_depth: int) -> TreeNode:
    if not isinstance(obj, dict):
        raise AnnotationError(f"{where}: node must be an object")
    start, end = obj.get("start"), obj.get("end")
    for name, value in (("start", start), ("end", end)):
        if isinstance(value, bool) or not isinstance(value, int):
            raise AnnotationError(f"{where}: field {name!r} must be an integer")
    if end <= start:
        raise AnnotationError(f"{where}: empty span [{start}, {end})")
    children = obj.get("children", [])
    if not isinstance(children, list):
        raise AnnotationError(f"{where}: 'children' must be a list")

    node = TreeNode(start, end)
    if not children:
        return node
    name = f"node [{start}, {end})"
    cursor = start
    for k, child in enumerate(children):
        kid = _build_node(child, f"{name} child {k}", lineage_depth + 1)
        if kid.start < cursor:
            raise AnnotationError(f"{name}: child [{kid.start}, {kid.end}) overlaps its predecessor")
        if kid.start > cursor:
            raise AnnotationError(f"{name}: gap at {cursor} before child [{kid.start}, {kid.end})")
        cursor = kid.end
        node.children.append(kid)
    if cursor != end:
        raise AnnotationError(f"{name}: children end at {cursor}, not {end}")
    return node


def parse_annotation(stream: IO[str], timeline_len: int,
                     max_depth: int = MAX_ANNOTATION_DEPTH) -> GroundTruthTree:
    try:
        obj = json.load(stream)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid annotation JSON ({exc.msg})", exc.lineno) from None
    root = _build_node(obj, "root", 0)
    if root.start != 0 or root.end != timeline_len:
        raise AnnotationError(
            f"root spans [{root.start}, {root.end}) but the timeline is [0, {timeline_len})")
    tree = GroundTruthTree(root)
    if tree.depth > max_depth:
        log.warning("annotation depth %d exceeds the supported maximum %d", tree.depth, max_depth)
        raise AnnotationDepthError(f"annotation depth {tree.depth} exceeds maximum {max_depth}")
    return tree


def load_annotation(path, timeline_len: int) -> GroundTruthTree:
    with open(path, encoding="utf-8") as fh:
        return parse_annotation(fh, timeline_len)


def flatten_at_depth(tree: GroundTruthTree, tau: int) -> FlatPartition:
    """Leaf partition of the sub-tree holding every node of depth <= ``tau``."""
    depth = tree.depth
    if not 1 <= tau <= depth:
        raise ValueError(f"tau must be in 1..{depth}, got {tau}")
    spans = []

    def walk(node: TreeNode, d: int):
        if d == tau or node.is_leaf:
            spans.append((node.start, node.end))
            return
        for child in node.children:
            walk(child, d + 1)

    walk(tree.root, 0)
    return FlatPartition(tuple(spans))


def prune_flat(partition: FlatPartition, min_size: int = DEFAULT_MIN_SIZE) -> FlatPartition:
    """Merge segments shorter than ``min_size`` into the following segment.

    Merging cascades left to right. An undersized final segment has no
    successor and is merged into its predecessor instead.
    """
    sizes: list[int] = []
    carry = 0
    for size in partition.sizes:
        size += carry
        if size < min_size:
            carry = size
        else:
            sizes.append(size)
            carry = 0
    if carry:
        if sizes:
            sizes[-1] += carry
        else:
            sizes.append(carry)
    return FlatPartition.from_sizes(sizes)


def ground_truth_levels(tree: GroundTruthTree, min_size: int = DEFAULT_MIN_SIZE) -> list[FlatPartition]:
    """Pruned flat partition for every level ``1..depth``."""
    return [prune_flat(flatten_at_depth(tree, tau), min_size) for tau in range(1, tree.depth + 1)]


@dataclass
class CorpusEntry:
    transcript_id: str
    timeline: Timeline
    tree: GroundTruthTree
    dev: bool = False


def _annotation_path(transcript: Path) -> Path:
    return transcript.with_name(transcript.stem + ANNOTATION_SUFFIX)


def iter_corpus_files(corpus_dir) -> list[tuple[str, Path, Path]]:
    """Sorted ``(id, transcript, annotation)`` triples found in a corpus directory."""
    corpus_dir = Path(corpus_dir)
    if not corpus_dir.is_dir():
        raise FileNotFoundError(f"corpus directory {corpus_dir} does not exist")
    found = []
    for path in sorted(corpus_dir.iterdir()):
        if path.suffix not in TRANSCRIPT_SUFFIXES:
            continue
        ann = _annotation_path(path)
        if not ann.exists():
            log.warning("no annotation for %s, skipping", path.name)
            continue
        found.append((path.stem, path, ann))
    return found


def load_corpus(corpus_dir, n_dev: int = 5) -> list[CorpusEntry]:
    """Load every transcript/annotation pair; the first ``n_dev`` ids are tagged dev.

    Unreadable or invalid pairs are skipped with a warning.
    """
    entries = []
    for tid, tpath, apath in iter_corpus_files(corpus_dir):
        try:
            timeline = load_transcript(tpath)
            tree = load_annotation(apath, len(timeline))
        except (OSError, UnicodeDecodeError, ValueError, ParseError, AnnotationError, EmptyInputError) as exc:
            log.warning("skipping %s: %s", tid, exc)
            continue
        entries.append(CorpusEntry(tid, timeline, tree))
    if not entries:
        raise EmptyInputError(f"no usable transcripts in {corpus_dir}")
    for entry in entries[:n_dev]:
        entry.dev = True
    return entries


@dataclass
class StatsTable:
    n_transcripts: int
    avg_length: float
    level_counts: list[int]
    avg_segments: list[float]

    def format(self, name: str = "corpus") -> str:
        levels = len(self.level_counts)
        head = ["Dataset", "Avg. |U|"] + [f"L{i + 1}" for i in range(levels)]
        counts = [name, f"{self.avg_length:.1f}"] + [str(c) for c in self.level_counts]
        segs = [name, ""] + [f"{s:.2f}" if c else "-" for s, c in zip(self.avg_segments, self.level_counts)]
        rows = [head, counts, ["Avg. segments after pruning"], segs]
        return "\n".join("  ".join(f"{cell:>10}" for cell in row) for row in rows)


def corpus_stats(corpus_dir, min_size: int = DEFAULT_MIN_SIZE,
                 levels: int = MAX_ANNOTATION_DEPTH) -> StatsTable:
    """Per-level annotation counts and average pruned segment counts."""
    entries = load_corpus(corpus_dir, n_dev=0)
    return stats_for_entries(entries, min_size=min_size, levels=levels)


def stats_for_entries(entries: Sequence[CorpusEntry], min_size: int = DEFAULT_MIN_SIZE,
                      levels: int = MAX_ANNOTATION_DEPTH) -> StatsTable:
    if not entries:
        raise EmptyInputError("empty corpus")
    counts = [0] * levels
    seg_sums = [0.0] * levels
    for entry in entries:
        for tau, part in enumerate(ground_truth_levels(entry.tree, min_size)[:levels]):
            counts[tau] += 1
            seg_sums[tau] += len(part)
    avg_len = sum(len(e.timeline) for e in entries) / len(entries)
    avg_segs = [s / c if c else 0.0 for s, c in zip(seg_sums, counts)]
    return StatsTable(len(entries), avg_len, counts, avg_segs)


def dumps_annotation(tree: GroundTruthTree) -> str:
    buf = io.StringIO()
    json.dump(tree.to_dict(), buf)
    return buf.getvalue()
