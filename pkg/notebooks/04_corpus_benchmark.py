"""
A seeded benchmark on a synthetic corpus
========================================

Planted corpora stand in for real meeting transcripts; the harness, tables
and report format are the same ones used with annotated data.
"""

# %%
import numpy as np

from treeseg import EquiSeg, RandomSeg, TreeSeg
from treeseg.evalharness import EvalConfig, emit_report, evaluate_corpus
from treeseg.synthetic import planted_corpus

entries, embeddings = planted_corpus(20, np.random.default_rng(42))
config = EvalConfig(seed=42, repetitions=20, include_dev=True)
report = evaluate_corpus(entries, [TreeSeg(), EquiSeg(), RandomSeg(20)], config,
                         embed=lambda e: embeddings[e.transcript_id], dataset="planted")

# %%
print(emit_report(report))

# %% [markdown]
# Text embeddings come from a backend. The hash backend is deterministic
# and offline, which is handy for wiring tests; it carries no meaning.

# %%
from treeseg.embedding import EmbeddingCache, HashBackend, embed_timeline
from treeseg.ingest import Timeline

timeline = Timeline.from_texts(["hello all", "first item is budget", "budget looks fine",
                                "next, hiring", "two open roles"])
cache = EmbeddingCache()
emb = embed_timeline(timeline, 2, HashBackend(dim=16), cache)
print(emb.vectors.shape, len(cache), "cached blocks")
