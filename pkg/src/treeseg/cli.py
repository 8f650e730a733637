"""Command line entry point: ``treeseg {segment,score,eval,stats}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import ingest
from .baselines import EquiSeg, FittedTree, RandomSeg, TreeSeg, equi_seg, random_seg
from .core import SPLIT_SCORES, PartitionTree, divide
from .embedding import (
    DEFAULT_BATCH,
    DEFAULT_WINDOW,
    EmbeddingCache,
    HashBackend,
    RemoteBackend,
    embed_timeline,
)
from .evalharness import EvalConfig, emit_report, evaluate_corpus
from .exceptions import TreeSegError
from .metrics import default_k, pk, windiff
from .partition import FlatPartition

log = logging.getLogger("treeseg")


def _add_embedding_args(p):
    p.add_argument("--window", type=int, default=DEFAULT_WINDOW, help="block width W")
    p.add_argument("--backend", choices=["remote", "hash"], default="remote")
    p.add_argument("--embed-url", help="embeddings endpoint (remote backend)")
    p.add_argument("--model", default="text-embedding-ada-002")
    p.add_argument("--hash-dim", type=int, default=64, help="vector size of the hash backend")
    p.add_argument("--cache", help="JSONL embedding cache file")
    p.add_argument("--batch", type=int, default=DEFAULT_BATCH)
    p.add_argument("--embed-speakers", action="store_true", help="prefix utterances with speaker labels")


def _backend(args):
    if args.backend == "hash":
        return HashBackend(dim=args.hash_dim, batch_size=args.batch)
    if not args.embed_url:
        raise SystemExit("--embed-url is required for the remote backend")
    return RemoteBackend(args.embed_url, args.model, batch_size=args.batch)


def _embedder(args):
    backend = _backend(args)
    cache = EmbeddingCache(args.cache)

    def embed(timeline):
        return embed_timeline(timeline, args.window, backend, cache, embed_speakers=args.embed_speakers)

    return embed


def _flat_dict(part: FlatPartition) -> dict:
    return {"T": part.T, "segments": [list(s) for s in part.spans]}


def cmd_segment(args):
    timeline = ingest.load_transcript(args.input)
    T = len(timeline)
    if args.method == "treeseg":
        emb = _embedder(args)(timeline)
        tree = divide(emb, args.k, args.min_size, args.split_score)
        text = tree.dumps()
        summary = f"{tree.leaf_count} segments"
    else:
        if args.k is None:
            raise SystemExit(f"--k is required for --method {args.method}")
        part = equi_seg(T, args.k) if args.method == "equi" else random_seg(T, args.k, args.seed)
        text = json.dumps(_flat_dict(part), indent=1)
        summary = f"{len(part)} segments"
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
        print(f"wrote {args.out}: {summary}")
    else:
        print(text)
    return 0


def _load_hypothesis(path):
    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    if "root" in obj:
        return PartitionTree.from_dict(obj)
    return FlatPartition(tuple(tuple(s) for s in obj["segments"]))


def cmd_score(args):
    hyp = _load_hypothesis(args.hyp)
    tree = ingest.load_annotation(args.ref, hyp.T)
    print(f"{'level':>5} {'K':>4} {'k':>4} {'Pk':>7} {'WinDiff':>8}")
    for tau, ref in enumerate(ingest.ground_truth_levels(tree, args.min_size), start=1):
        if args.level is not None and tau != args.level:
            continue
        part = FittedTree(hyp).query(len(ref)) if isinstance(hyp, PartitionTree) else hyp
        k = args.k or default_k(ref)
        print(f"{tau:>5} {len(ref):>4} {k:>4} {pk(ref, part, k):7.3f} {windiff(ref, part, k):8.3f}")
    return 0


def cmd_eval(args):
    corpus = ingest.load_corpus(args.corpus)
    methods = []
    for name in args.methods.split(","):
        name = name.strip()
        if name == "treeseg":
            methods.append(TreeSeg(args.min_size, args.split_score))
        elif name == "equi":
            methods.append(EquiSeg())
        elif name == "random":
            methods.append(RandomSeg(args.repetitions))
        else:
            raise SystemExit(f"unknown method {name!r}")
    config = EvalConfig(window=args.window, min_size=args.min_size, seed=args.seed,
                        repetitions=args.repetitions, include_dev=args.include_dev,
                        model=args.model if args.backend == "remote" else f"hash-d{args.hash_dim}")
    embed = None
    if any(m.needs_embeddings for m in methods):
        embedder = _embedder(args)
        embed = lambda entry: embedder(entry.timeline)  # noqa: E731
    dataset = args.dataset or Path(args.corpus).name
    report = evaluate_corpus(corpus, methods, config, embed=embed, dataset=dataset, workers=args.workers)
    print(emit_report(report, args.out))
    return 0


def cmd_stats(args):
    table = ingest.corpus_stats(args.corpus, args.min_size)
    print(table.format(args.name or Path(args.corpus).name))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="treeseg", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("segment", help="segment one transcript")
    p.add_argument("--input", required=True)
    p.add_argument("--method", choices=["treeseg", "equi", "random"], default="treeseg")
    p.add_argument("--min-size", type=int, default=5)
    p.add_argument("--k", type=int, help="number of segments (default: grow the full tree)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--split-score", choices=SPLIT_SCORES, default="gain")
    p.add_argument("--out")
    _add_embedding_args(p)
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("score", help="score a tree or flat segmentation against an annotation")
    p.add_argument("--ref", required=True)
    p.add_argument("--hyp", required=True)
    p.add_argument("--k", type=int)
    p.add_argument("--level", type=int)
    p.add_argument("--min-size", type=int, default=5)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("eval", help="run the hierarchical evaluation over a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--methods", default="treeseg,equi,random")
    p.add_argument("--min-size", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--repetitions", type=int, default=100)
    p.add_argument("--include-dev", action="store_true")
    p.add_argument("--split-score", choices=SPLIT_SCORES, default="gain")
    p.add_argument("--dataset")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out")
    _add_embedding_args(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("stats", help="annotation statistics of a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--min-size", type=int, default=5)
    p.add_argument("--name")
    p.set_defaults(func=cmd_stats)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (TreeSegError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
