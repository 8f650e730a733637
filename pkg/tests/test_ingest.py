import io
import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from treeseg.exceptions import AnnotationDepthError, AnnotationError, EmptyInputError, ParseError
from treeseg.ingest import (
    GroundTruthTree,
    corpus_stats,
    flatten_at_depth,
    ground_truth_levels,
    load_corpus,
    parse_annotation,
    parse_transcript,
    prune_flat,
    write_transcript,
)
from treeseg.partition import FlatPartition


def jsonl(*records):
    return io.StringIO("".join(json.dumps(r) + "\n" for r in records))


def node(start, end, *children):
    return {"start": start, "end": end, "children": list(children)}


# Root with three segments, the middle one split again.
NESTED = node(0, 30, node(0, 10), node(10, 22, node(10, 16), node(16, 22)), node(22, 30))

# three levels with a shallow leaf next to deeper branches
THREE_LEVEL = node(0, 40,
                   node(0, 8),
                   node(8, 30, node(8, 18, node(8, 12), node(12, 18)), node(18, 30)),
                   node(30, 40))


def test_plain_text_three_lines():
    tl = parse_transcript(io.StringIO("hello\nworld\nagain\n"), "text")
    assert len(tl) == 3
    assert [u.index for u in tl] == [0, 1, 2]
    assert tl[2].text == "again"


def test_jsonl_records():
    tl = parse_transcript(jsonl(
        {"index": 0, "speaker": "A", "text": "hi", "start": 0.0, "end": 1.5},
        {"index": 1, "speaker": None, "text": " there ", "start": None, "end": None},
    ))
    assert tl[0].speaker == "A" and tl[0].end_time == 1.5
    assert tl[1].text == "there" and tl[1].speaker is None


def test_empty_text_is_rejected_with_line_number():
    stream = jsonl({"index": 0, "text": "ok"}, {"index": 1, "text": "   "})
    with pytest.raises(ParseError) as err:
        parse_transcript(stream)
    assert err.value.line == 2


@pytest.mark.parametrize("bad, line", [
    ("not json\n", 1),
    ('{"index": 0, "text": "a"}\n[1, 2]\n', 2),
    ('{"index": 1, "text": "a"}\n', 1),
    ('{"index": 0, "text": "a", "start": "x"}\n', 1),
    ('{"index": 0, "text": "a", "speaker": 3}\n', 1),
])
def test_malformed_records(bad, line):
    with pytest.raises(ParseError) as err:
        parse_transcript(io.StringIO(bad))
    assert err.value.line == line


def test_zero_utterances():
    with pytest.raises(EmptyInputError):
        parse_transcript(io.StringIO("\n\n"), "text")


def test_transcript_round_trip():
    tl = parse_transcript(jsonl({"index": 0, "speaker": "A", "text": "a", "start": 1.0, "end": 2.0},
                                {"index": 1, "text": "b"}))
    buf = io.StringIO()
    write_transcript(tl, buf)
    buf.seek(0)
    assert parse_transcript(buf) == tl


def test_annotation_depth_one():
    tree = parse_annotation(io.StringIO(json.dumps(node(0, 10, node(0, 4), node(4, 10)))), 10)
    assert tree.depth == 1
    assert flatten_at_depth(tree, 1).spans == ((0, 4), (4, 10))


def test_annotation_gap_is_structural_error():
    with pytest.raises(AnnotationError, match="gap at 4"):
        parse_annotation(io.StringIO(json.dumps(node(0, 10, node(0, 4), node(5, 10)))), 10)


def test_annotation_overlap_and_cover():
    with pytest.raises(AnnotationError, match="overlaps"):
        parse_annotation(io.StringIO(json.dumps(node(0, 10, node(0, 5), node(4, 10)))), 10)
    with pytest.raises(AnnotationError, match="children end at 8"):
        parse_annotation(io.StringIO(json.dumps(node(0, 10, node(0, 5), node(5, 8)))), 10)
    with pytest.raises(AnnotationError, match="timeline"):
        parse_annotation(io.StringIO(json.dumps(node(0, 10))), 12)


def test_annotation_deeper_than_four_rejected():
    deep = node(0, 10, node(0, 10, node(0, 10, node(0, 10, node(0, 10, node(0, 5), node(5, 10))))))
    with pytest.raises(AnnotationDepthError):
        parse_annotation(io.StringIO(json.dumps(deep)), 10)


def test_nested_topology():
    tree = parse_annotation(io.StringIO(json.dumps(NESTED)), 30)
    assert tree.depth == 2
    assert flatten_at_depth(tree, 1).spans == ((0, 10), (10, 22), (22, 30))
    assert flatten_at_depth(tree, 2).spans == ((0, 10), (10, 16), (16, 22), (22, 30))


def test_flatten_mixes_shallow_leaves_and_frontier():
    tree = parse_annotation(io.StringIO(json.dumps(THREE_LEVEL)), 40)
    assert tree.depth == 3
    # depth-1 leaves (0,8), (30,40) next to the depth-2 frontier inside (8,30)
    assert flatten_at_depth(tree, 2).spans == ((0, 8), (8, 18), (18, 30), (30, 40))
    assert flatten_at_depth(tree, 3).spans == ((0, 8), (8, 12), (12, 18), (18, 30), (30, 40))
    with pytest.raises(ValueError):
        flatten_at_depth(tree, 4)
    with pytest.raises(ValueError):
        flatten_at_depth(tree, 0)


@pytest.mark.parametrize("sizes, expected", [
    ([3, 7, 10], [10, 10]),
    ([7, 10, 2], [7, 12]),
    ([8, 9], [8, 9]),
    ([2, 2, 2, 10], [6, 10]),
    ([1, 1], [2]),
    ([4, 4], [8]),
    ([10, 3, 1], [14]),
])
def test_prune_flat(sizes, expected):
    assert prune_flat(FlatPartition.from_sizes(sizes), 5).sizes == expected


@given(st.lists(st.integers(1, 12), min_size=1, max_size=15), st.integers(1, 8))
def test_prune_flat_properties(sizes, min_size):
    out = prune_flat(FlatPartition.from_sizes(sizes), min_size)
    assert out.T == sum(sizes)
    assert set(out.boundaries) <= set(FlatPartition.from_sizes(sizes).boundaries)
    if len(out) > 1:
        assert min(out.sizes) >= min_size


@st.composite
def annotation_trees(draw, T=None, depth=3):
    T = T or draw(st.integers(2, 60))

    def grow(start, end, d):
        n = node(start, end)
        if d < depth and end - start >= 2 and draw(st.booleans()):
            k = draw(st.integers(1, min(4, end - start - 1)))
            cuts = sorted(draw(st.sets(st.integers(start + 1, end - 1), min_size=k, max_size=k)))
            edges = [start, *cuts, end]
            n["children"] = [grow(a, b, d + 1) for a, b in zip(edges[:-1], edges[1:])]
        return n

    return grow(0, T, 0), T


@given(annotation_trees())
def test_flatten_invariants(data):
    obj, T = data
    tree = parse_annotation(io.StringIO(json.dumps(obj)), T)
    counts = []
    for tau in range(1, tree.depth + 1):
        part = flatten_at_depth(tree, tau)
        assert part.T == T and part.spans[0][0] == 0
        counts.append(len(part))
        if tau > 1:
            prev = flatten_at_depth(tree, tau - 1)
            assert set(prev.boundaries) <= set(part.boundaries)
    assert counts == sorted(counts)


def test_from_partitions_round_trip():
    levels = [FlatPartition.from_sizes([20, 20]),
              FlatPartition.from_sizes([20, 10, 10]),
              FlatPartition.from_sizes([5, 15, 10, 10])]
    tree = GroundTruthTree.from_partitions(levels)
    assert tree.depth == 3
    for tau, part in enumerate(levels, start=1):
        assert flatten_at_depth(tree, tau) == part


def write_pair(root, tid, texts, ann):
    (root / f"{tid}.txt").write_text("\n".join(texts) + "\n")
    (root / f"{tid}.annotation.json").write_text(json.dumps(ann))


def test_corpus_stats_single_transcript(tmp_path):
    write_pair(tmp_path, "a", [f"u{i}" for i in range(10)], node(0, 10, node(0, 5), node(5, 10)))
    stats = corpus_stats(tmp_path)
    assert stats.n_transcripts == 1
    assert stats.level_counts[0] == 1
    assert stats.avg_segments[0] == 2.0
    assert stats.avg_length == 10.0
    assert "Avg. |U|" in stats.format("demo")


def test_corpus_stats_counts_levels_after_pruning(tmp_path):
    write_pair(tmp_path, "a", [f"u{i}" for i in range(30)], NESTED)
    write_pair(tmp_path, "b", [f"u{i}" for i in range(20)], node(0, 20, node(0, 3), node(3, 20)))
    stats = corpus_stats(tmp_path)
    assert stats.level_counts == [2, 1, 0, 0]
    # a: 3 segments at L1; b: [3, 17] prunes to one segment
    assert stats.avg_segments[0] == pytest.approx((3 + 1) / 2)
    assert stats.avg_segments[1] == 4.0


def test_corpus_skips_unreadable_and_rejects_empty(tmp_path, caplog):
    write_pair(tmp_path, "good", [f"u{i}" for i in range(10)], node(0, 10))
    write_pair(tmp_path, "bad", ["x"], node(0, 5))
    (tmp_path / "orphan.txt").write_text("a\n")
    entries = load_corpus(tmp_path)
    assert [e.transcript_id for e in entries] == ["good"]
    assert any("bad" in r.message for r in caplog.records)
    empty = tmp_path / "empty"
    empty.mkdir()
    with pytest.raises(EmptyInputError):
        corpus_stats(empty)


def test_dev_tag_is_first_five(tmp_path):
    for j in range(7):
        write_pair(tmp_path, f"t{j}", [f"u{i}" for i in range(10)], node(0, 10))
    entries = load_corpus(tmp_path)
    assert [e.dev for e in entries] == [True] * 5 + [False] * 2


def test_ground_truth_levels_are_pruned_independently():
    tree = GroundTruthTree.from_partitions([FlatPartition.from_sizes([3, 17]),
                                            FlatPartition.from_sizes([3, 8, 9])])
    assert [p.sizes for p in ground_truth_levels(tree, 5)] == [[20], [11, 9]]
