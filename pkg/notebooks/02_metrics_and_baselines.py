"""
Pk, WinDiff and the two reference baselines
===========================================
"""

# %%
from treeseg import EquiSeg, RandomSeg
from treeseg.metrics import BoundarySeq, default_k, pk, windiff

ref = BoundarySeq.of(10, [5])
hyp = BoundarySeq.of(10, [])
print(pk(ref, hyp, 2), windiff(ref, hyp, 2))

# %% [markdown]
# Without an explicit ``k`` both metrics use half the mean reference segment
# length, rounded half up.

# %%
ref = BoundarySeq.of(100, [10, 20, 30])
print("k =", default_k(ref))
for shift in (0, 1, 3, 8):
    hyp = BoundarySeq.of(100, [10 + shift, 20 + shift, 30 + shift])
    print(shift, round(pk(ref, hyp), 3), round(windiff(ref, hyp), 3))

# %%
equi = EquiSeg().fit(100).query(4)
rand = RandomSeg().fit(100).query(4, seed=17)
print("equi  ", equi.boundaries, pk(ref, equi))
print("random", rand.boundaries, pk(ref, rand))
