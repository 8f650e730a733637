import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import pk_oracle, windiff_oracle
from treeseg.exceptions import DegenerateInputError
from treeseg.metrics import BoundarySeq, default_k, pk, score, windiff
from treeseg.partition import FlatPartition


def B(T, *pos):
    return BoundarySeq.of(T, pos)


def test_identity_is_zero():
    ref = B(30, 7, 15, 22)
    assert pk(ref, ref) == 0.0
    assert windiff(ref, ref) == 0.0


def test_hand_case():
    assert pk(B(10, 5), B(10), 2) == 0.25
    assert windiff(B(10, 5), B(10), 2) == 0.25


def test_hand_case_matches_oracle():
    assert pk_oracle(10, [5], [], 2) == 0.25
    assert windiff_oracle(10, [5], [], 2) == 0.25


def test_accepts_flat_partitions():
    ref = FlatPartition.from_sizes([5, 5])
    hyp = FlatPartition.from_sizes([10])
    assert score(ref, hyp, 2) == (0.25, 0.25)


def test_default_k():
    assert default_k(B(10, 5)) == 3  # 10 / 4 = 2.5 rounds half up
    assert default_k(B(100, 10, 20, 30)) == 13  # 100 / 8 = 12.5
    assert default_k(B(3, 1, 2)) == 1


def test_errors():
    with pytest.raises(ValueError):
        pk(B(10), B(11))
    with pytest.raises(DegenerateInputError):
        pk(B(4), B(4), 4)
    with pytest.raises(DegenerateInputError):
        windiff(B(1), B(1))
    with pytest.raises(ValueError):
        BoundarySeq(10, (5, 3))
    with pytest.raises(ValueError):
        BoundarySeq(10, (10,))


@st.composite
def boundary_pairs(draw, max_T=20):
    T = draw(st.integers(2, max_T))
    inner = st.sets(st.integers(1, T - 1), max_size=T - 1) if T > 1 else st.just(set())
    ref, hyp = draw(inner), draw(inner)
    k = draw(st.integers(1, T - 1))
    return T, sorted(ref), sorted(hyp), k


@given(boundary_pairs())
def test_matches_enumeration(case):
    T, ref, hyp, k = case
    assert pk(B(T, *ref), B(T, *hyp), k) == pk_oracle(T, ref, hyp, k)
    assert windiff(B(T, *ref), B(T, *hyp), k) == windiff_oracle(T, ref, hyp, k)


@given(boundary_pairs(max_T=60))
def test_range_and_windiff_dominates(case):
    T, ref, hyp, k = case
    p, w = pk(B(T, *ref), B(T, *hyp), k), windiff(B(T, *ref), B(T, *hyp), k)
    assert 0.0 <= p <= 1.0 and 0.0 <= w <= 1.0
    # any Pk error is also a boundary-count mismatch
    assert w >= p


def test_zero_iff_equal_when_k_below_min_segment():
    rng = np.random.default_rng(0)
    for _ in range(300):
        ref = sorted(rng.choice(np.arange(1, 60), size=4, replace=False))
        sizes = np.diff([0, *ref, 60])
        k = int(sizes.min()) - 1
        if k < 1:
            continue
        hyp = sorted(set(ref) ^ {int(rng.integers(1, 60))})
        assert pk(B(60, *ref), B(60, *ref), k) == 0.0
        assert windiff(B(60, *ref), B(60, *hyp), k) > 0.0


def test_near_miss_property():
    rng = np.random.default_rng(1)
    for _ in range(500):
        T = int(rng.integers(20, 120))
        ref = sorted(rng.choice(np.arange(1, T), size=int(rng.integers(1, 6)), replace=False))
        hyp = sorted({int(np.clip(b + rng.integers(-2, 3), 1, T - 1)) for b in ref})
        k = default_k(B(T, *ref))
        if T <= k:
            continue
        assert windiff(B(T, *ref), B(T, *hyp)) >= pk(B(T, *ref), B(T, *hyp)) - 1e-12
        assert windiff(B(T, *ref), B(T, *hyp)) == windiff_oracle(T, ref, hyp, k)


def test_content_independent_shift():
    # the metrics only see boundaries and T
    a = pk(B(40, 10, 20), B(40, 12, 25))
    b = pk(FlatPartition.from_boundaries(40, [10, 20]), FlatPartition.from_boundaries(40, [25, 12]))
    assert a == b
