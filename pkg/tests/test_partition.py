import pytest

from treeseg.partition import FlatPartition, is_valid_partition


def test_from_boundaries_and_back():
    part = FlatPartition.from_boundaries(10, [5, 2])
    assert part.spans == ((0, 2), (2, 5), (5, 10))
    assert part.boundaries == [2, 5]
    assert part.sizes == [2, 3, 5]
    assert part.labels() == [0, 0, 1, 1, 1, 2, 2, 2, 2, 2]


@pytest.mark.parametrize("spans", [
    (),
    ((1, 4),),
    ((0, 4), (5, 8)),
    ((0, 4), (4, 4)),
])
def test_invalid(spans):
    with pytest.raises(ValueError):
        FlatPartition(spans)


def test_boundary_range():
    with pytest.raises(ValueError):
        FlatPartition.from_boundaries(5, [5])
    assert not is_valid_partition(((0, 3),), 4)
    assert is_valid_partition(((0, 3), (3, 4)), 4)
