import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from condent.partition import (
    Filtration,
    Partition,
    atoms_from_generators,
    coarsenings,
    count_partitions,
    enumerate_partitions,
    extend_with_complement,
    format_partition,
    join,
    meet,
    parse_partition,
    point_partition,
    refines,
    refining_chain,
    separates_points,
    trivial_partition,
)
from condent.space import make_space, uniform_space
from oracles import bell, bfs_meet, blocks_of

P = Partition


@st.composite
def partitions(draw, n=None):
    n = draw(st.integers(1, 8)) if n is None else n
    labels = draw(st.lists(st.integers(0, n - 1), min_size=n, max_size=n))
    return Partition.from_labels(labels)


@st.composite
def partition_pairs(draw, k=2):
    n = draw(st.integers(1, 8))
    return [draw(partitions(n)) for _ in range(k)]


# Representation ---------------------------------------------------------------


def test_canonical_form_is_structural():
    assert P([[3, 2], [1, 0]]) == P([[0, 1], [2, 3]])
    assert hash(P([[2], [0, 1]])) == hash(P.from_labels([5, 5, 7]))
    assert blocks_of(P.from_labels([1, 0, 1])) == [[0, 2], [1]]


@pytest.mark.parametrize(
    "blocks, n",
    [([[0, 1], [1, 2]], None), ([[0], []], None), ([[0], [2]], 3), ([[0, 1]], 3)],
)
def test_invalid_partitions(blocks, n):
    with pytest.raises(ValueError):
        P(blocks, n=n)


def test_point_partition_examples():
    assert blocks_of(point_partition(uniform_space(3))) == [[0], [1], [2]]
    assert blocks_of(point_partition(make_space([1.0]))) == [[0]]
    assert len(point_partition(4)) == 4


def test_text_round_trip():
    xi = P([[0, 3], [1], [2, 4]])
    assert parse_partition(format_partition(xi)) == xi
    assert parse_partition("# comment\n0,1\n\n2\n", n=3) == P([[0, 1], [2]])
    with pytest.raises(ValueError, match="line 1"):
        parse_partition("0;1\n")


# Order and lattice -----------------------------------------------------------


def test_refines_examples():
    s4 = uniform_space(4)
    assert refines(s4, trivial_partition(4), P([[0, 2], [1], [3]]))
    assert not refines(uniform_space(2), point_partition(2), trivial_partition(2))
    s = make_space([0.5, 0.5, 0.0])
    assert refines(s, P([[0], [1, 2]]), P([[0, 2], [1]]))
    assert not refines(s, P([[0], [1, 2]]), P([[0, 2], [1]]), exact=True)


def test_join_examples():
    a, b = P([[0, 1], [2, 3]]), P([[0, 2], [1, 3]])
    assert join(a, b) == point_partition(4)
    assert join(a, a) == a
    assert join(a, trivial_partition(4)) == a


def test_meet_examples():
    assert meet(P([[0], [1], [2, 3]]), P([[0, 1], [2], [3]])) == P([[0, 1], [2, 3]])
    xi = P([[0, 2], [1], [3]])
    assert meet(xi, xi) == xi
    assert meet(xi, point_partition(4)) == xi


def test_lattice_ops_need_same_size():
    with pytest.raises(ValueError):
        join(trivial_partition(2), trivial_partition(3))
    with pytest.raises(ValueError):
        meet(trivial_partition(2), trivial_partition(3))


@settings(max_examples=300, deadline=None)
@given(partition_pairs(3))
def test_lattice_laws(triple):
    x, y, z = triple
    assert join(x, y) == join(y, x)
    assert meet(x, y) == meet(y, x)
    assert join(join(x, y), z) == join(x, join(y, z))
    assert meet(meet(x, y), z) == meet(x, meet(y, z))
    assert join(x, x) == x and meet(x, x) == x
    assert meet(x, join(x, y)) == x
    assert join(x, meet(x, y)) == x


@settings(max_examples=300, deadline=None)
@given(partition_pairs(2))
def test_order_consistency_and_meet_oracle(pair):
    x, y = pair
    s = uniform_space(x.n)
    assert refines(s, x, join(x, y))
    assert refines(s, meet(x, y), x)
    assert blocks_of(meet(x, y)) == bfs_meet(x, y)


# Generators ------------------------------------------------------------------


def test_atoms_examples():
    s4 = uniform_space(4)
    assert atoms_from_generators(s4, [{0, 1}]) == P([[0, 1], [2, 3]])
    assert atoms_from_generators(s4, []) == trivial_partition(4)
    assert atoms_from_generators(s4, [{0, 1}, {0, 2}]) == point_partition(4)


def test_separates_points_examples():
    s4 = uniform_space(4)
    assert separates_points(s4, [{0, 1}, {0, 2}], range(4))
    assert not separates_points(s4, [], {0, 1})
    assert separates_points(s4, [{0}], {0, 1})


def test_extend_with_complement_examples():
    s4 = uniform_space(4)
    assert extend_with_complement(s4, {0, 1}, [{0}, {1}]) == P([[0], [1], [2, 3]])
    assert extend_with_complement(s4, range(4), [{i} for i in range(4)]) == point_partition(4)
    assert extend_with_complement(s4, {2}, [{2}]) == P([[2], [0, 1, 3]])
    with pytest.raises(ValueError):
        extend_with_complement(s4, {0, 1}, [{0}])


def test_refining_chain_examples():
    s4 = uniform_space(4)
    assert refining_chain(s4, [{0, 1}, {0, 2}]) == [
        trivial_partition(4),
        P([[0, 1], [2, 3]]),
        point_partition(4),
    ]
    assert refining_chain(s4, []) == [trivial_partition(4)]
    assert refining_chain(uniform_space(2), [{0}]) == [trivial_partition(2), point_partition(2)]


@st.composite
def generator_families(draw):
    n = draw(st.integers(1, 8))
    sets = draw(st.lists(st.frozensets(st.integers(0, n - 1)), max_size=5))
    return n, sets


@settings(max_examples=300, deadline=None)
@given(generator_families())
def test_atoms_are_join_of_single_generators(family):
    n, gamma = family
    s = uniform_space(n)
    expected = trivial_partition(n)
    for g in gamma:
        expected = join(expected, atoms_from_generators(s, [g]))
    assert atoms_from_generators(s, gamma) == expected
    assert separates_points(s, gamma, range(n)) == (atoms_from_generators(s, gamma) == point_partition(n))
    chain = refining_chain(s, gamma)
    assert chain[-1] == atoms_from_generators(s, gamma)
    Filtration(chain)  # validates increasing refinement


# Filtrations -----------------------------------------------------------------


def test_filtration_validation_and_limit():
    levels = [trivial_partition(4), P([[0, 1], [2, 3]])]
    f = Filtration(levels)
    assert f.limit == levels[-1]
    assert f.level(1) == levels[0]
    with pytest.raises(IndexError):
        f.level(0)
    with pytest.raises(ValueError):
        Filtration([P([[0, 1], [2, 3]]), P([[0, 2], [1, 3]])])
    with pytest.raises(ValueError):
        Filtration(levels, limit=trivial_partition(4))


# Counting --------------------------------------------------------------------


def test_count_partitions_examples():
    assert count_partitions(3)[0] == 5
    assert count_partitions(1)[0] == 1
    assert 7 in count_partitions(4)[1]
    assert count_partitions(4)[1][2] == 7


@pytest.mark.parametrize("n", [0, 21, -1, 2.5, True])
def test_count_partitions_range(n):
    with pytest.raises(ValueError):
        count_partitions(n)


def test_count_partitions_at_cap_is_exact():
    assert count_partitions(20)[0] == bell(20) == 51724158235372


@pytest.mark.parametrize("n", range(1, 11))
def test_enumeration_matches_bell(n):
    seen = set(enumerate_partitions(n))
    bell_n, row = count_partitions(n)
    assert len(seen) == bell_n == bell(n)
    by_size = np.bincount([len(p) for p in seen], minlength=n + 1)
    assert by_size.tolist() == row


def test_enumeration_cap():
    with pytest.raises(ValueError):
        next(enumerate_partitions(11))


def test_coarsenings_are_coarser():
    s = uniform_space(5)
    a = P([[0, 1], [2], [3, 4]])
    cs = list(coarsenings(a))
    assert len(cs) == count_partitions(3)[0]
    assert all(refines(s, c, a) for c in cs)
