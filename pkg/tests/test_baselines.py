from collections import Counter

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from treeseg.baselines import EquiSeg, RandomSeg, SplitMix64, TreeSeg, equi_seg, random_seg


def test_splitmix64_reference_values():
    # first outputs for seed 1234567 from the published reference implementation
    rng = SplitMix64(1234567)
    assert [rng.next() for _ in range(3)] == [
        6457827717110365317,
        3203168211198807973,
        9817491932198370423,
    ]


def test_equi_examples():
    assert equi_seg(10, 2).spans == ((0, 5), (5, 10))
    assert equi_seg(10, 3).spans == ((0, 3), (3, 6), (6, 10))
    assert equi_seg(6, 6).sizes == [1] * 6
    with pytest.raises(ValueError):
        equi_seg(4, 5)


@given(st.integers(1, 500), st.data())
def test_equi_sizes(T, data):
    K = data.draw(st.integers(1, T))
    part = equi_seg(T, K)
    assert len(part) == K and part.T == T
    assert set(part.sizes) <= {T // K, -(-T // K)}


def test_random_examples():
    assert random_seg(50, 1, 123).spans == ((0, 50),)
    assert random_seg(50, 7, 9) == random_seg(50, 7, 9)
    assert random_seg(50, 7, 9) != random_seg(50, 7, 10)
    assert len(random_seg(5, 5, 0)) == 5
    with pytest.raises(ValueError):
        random_seg(4, 5, 0)


@given(st.integers(2, 300), st.integers(0, 2**64 - 1), st.data())
def test_random_is_valid_with_exact_k(T, seed, data):
    K = data.draw(st.integers(1, T))
    part = random_seg(T, K, seed)
    assert len(part) == K and part.T == T


def test_random_boundary_uniformity():
    T, draws = 100, 10_000
    counts = Counter(random_seg(T, 2, seed).boundaries[0] for seed in range(draws))
    p = 1 / 99
    sigma = np.sqrt(draws * p * (1 - p))
    assert set(counts) <= set(range(1, T))
    for pos in range(1, T):
        assert abs(counts[pos] - draws * p) <= 3 * sigma + 1, pos


def test_segmenter_interface():
    E = np.repeat(np.eye(4), 10, axis=0)
    from treeseg.embedding import EmbeddingTimeline

    emb = EmbeddingTimeline(E, "m", 0)
    fitted = TreeSeg(min_size=5).fit(emb, 4)
    assert fitted.query(4).boundaries == [10, 20, 30]
    assert len(fitted.query(10)) == 4  # capped by the tree
    assert EquiSeg().fit(40).query(4).boundaries == [10, 20, 30]
    assert RandomSeg().fit(emb).query(3, seed=5) == random_seg(40, 3, 5)
    with pytest.raises(TypeError):
        TreeSeg().fit(40)
