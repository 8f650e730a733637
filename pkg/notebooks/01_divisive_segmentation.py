"""
Divisive segmentation on a planted timeline
===========================================

Three topics with distinct mean vectors, a little noise, and the binary
partition tree that ``divide`` grows over them.
"""

# %%
import numpy as np

from treeseg import divide
from treeseg.synthetic import planted_timeline

rng = np.random.default_rng(0)
planted = planted_timeline([12, 30, 18], rng, dim=8, noise_ratio=0.05)
print("true boundaries:", planted.truth.boundaries)

# %% [markdown]
# Every split is chosen best-first. The first division is the one with the
# largest drop in within-segment squared error.

# %%
tree = divide(planted.embeddings, K_max=6, M=5)
for node in tree.splits:
    print(f"split {node.order}: [{node.start}, {node.end}) at {node.split}"
          f"  gain={node.candidate.gain:.3f}")

# %%
for K in range(1, tree.leaf_count + 1):
    print(K, tree.leaves_at_k(K).boundaries)

# %% [markdown]
# The tree serializes to plain JSON and reloads to the same structure.

# %%
from treeseg.core import PartitionTree

text = tree.dumps()
assert PartitionTree.loads(text).dumps() == text
print(text[:200])
