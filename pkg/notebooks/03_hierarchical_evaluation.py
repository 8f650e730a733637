"""
Scoring a tree against every annotation level
=============================================

Two model trees with identical leaves but opposite division orders. Only
the one that splits coarse topics first agrees with the upper levels.
"""

# %%
from treeseg.baselines import FittedTree
from treeseg.core import PartitionTree
from treeseg.evalharness import evaluate_transcript
from treeseg.ingest import GroundTruthTree
from treeseg.partition import FlatPartition

levels = [
    FlatPartition.from_boundaries(60, [30]),
    FlatPartition.from_boundaries(60, [15, 30, 45]),
    FlatPartition.from_boundaries(60, [8, 15, 22, 30, 38, 45, 52]),
]
truth = GroundTruthTree.from_partitions(levels)

coarse_first = PartitionTree.from_splits(60, [30, 15, 45, 8, 22, 38, 52])
fine_first = PartitionTree.from_splits(60, [8, 52, 22, 38, 15, 45, 30])

# %%
for name, tree in (("coarse first", coarse_first), ("fine first", fine_first)):
    rows = evaluate_transcript(FittedTree(tree), truth, method=name)
    print(name)
    for r in rows:
        print(f"  level {r.level}  K={r.K}  Pk={r.pk:.3f}  WinDiff={r.windiff:.3f}")
