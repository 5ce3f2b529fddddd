import pytest
from hypothesis import given, settings, strategies as st

from psplit.instances import make_clustering, make_ex1, make_osif, random_network
from psplit.model import Disjunct, DisjunctConstraint, Disjunction, SeparableFunction
from psplit.partition import (
    EmptyClassError,
    GapError,
    OverlapError,
    Partition,
    PartitionError,
    format_partition,
    parse_partition,
    partition_by_coefficient,
    partition_uniform,
    refinement_chain,
    resolve_partitions,
    validate_partition,
)


@pytest.mark.parametrize("n, P, want", [
    (4, 2, ((0, 1), (2, 3))),
    (4, 4, ((0,), (1,), (2,), (3,))),
    (4, 1, ((0, 1, 2, 3),)),
    (3, 2, ((0, 1), (2,))),
])
def test_uniform(n, P, want):
    assert partition_uniform(n, P).classes == want


@pytest.mark.parametrize("P", [0, 5])
def test_uniform_rejects_bad_P(P):
    with pytest.raises(PartitionError):
        partition_uniform(4, P)


def lin_disjunction(weights):
    c = DisjunctConstraint(SeparableFunction.linear(dict(enumerate(weights))), 0.0)
    return Disjunction((Disjunct((c,)), Disjunct((c,))))


def test_coefficient_ties_match_uniform():
    d = lin_disjunction([1.0, 1.0, 1.0, 1.0])
    assert partition_by_coefficient(d, 2, [0] * 4, [1] * 4) == partition_uniform(4, 2)


def test_coefficient_groups_similar_weights():
    d = lin_disjunction([5.0, 0.1, 4.9, 0.2])
    p = partition_by_coefficient(d, 2, [0] * 4, [1] * 4)
    assert {frozenset(c) for c in p.classes} == {frozenset({0, 2}), frozenset({1, 3})}


def test_coefficient_class_sizes():
    d = lin_disjunction([3.0, 1.0, 2.0])
    assert sorted(len(c) for c in partition_by_coefficient(d, 2, [0] * 3, [1] * 3).classes) == [1, 2]


def test_validate_partition_errors():
    validate_partition(Partition.of([[0, 1], [2, 3]]), 4)
    with pytest.raises(OverlapError):
        validate_partition(Partition.of([[0, 1], [1, 2]]), 3)
    with pytest.raises(GapError):
        validate_partition(Partition.of([[0], [2]]), 3)
    with pytest.raises(EmptyClassError):
        validate_partition(Partition.of([[0, 1, 2], []]), 3)


def test_parse_and_format():
    p = parse_partition("0,1|2,3")
    assert p.classes == ((0, 1), (2, 3))
    assert parse_partition(format_partition(p)) == p
    with pytest.raises(PartitionError):
        parse_partition("0,a|1")


def test_resolve_restricts_to_support():
    nn = random_network([3, 3, 2], seed=2)
    p = make_osif(nn, 0, 2.0)
    for d, part in zip(p.disjunctions, resolve_partitions(p, 2)):
        validate_partition(part, d.support)


def test_resolve_keeps_coordinates_together_for_clustering():
    p = make_clustering([[0, 0], [1, 0], [0, 1]], 2)
    for d, part in zip(p.disjunctions, resolve_partitions(p, 2)):
        assert part.P == 2
        validate_partition(part, d.support)


@settings(max_examples=80, deadline=None)
@given(st.integers(1, 30), st.data())
def test_uniform_sizes_balanced(n, data):
    P = data.draw(st.integers(1, n))
    p = partition_uniform(n, P)
    sizes = [len(c) for c in p.classes]
    assert max(sizes) - min(sizes) <= 1
    assert [i for c in p.classes for i in c] == list(range(n))


@settings(max_examples=80, deadline=None)
@given(st.lists(st.floats(-10, 10, allow_nan=False), min_size=1, max_size=12), st.data())
def test_coefficient_partition_valid(weights, data):
    P = data.draw(st.integers(1, len(weights)))
    d = lin_disjunction([w if w != 0 else 1.0 for w in weights])
    n = len(weights)
    validate_partition(partition_by_coefficient(d, P, [-1] * n, [2] * n), n)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 16), st.data())
def test_refinement_chain_nests(n, data):
    sizes = sorted(set(data.draw(st.lists(st.integers(1, n), min_size=1, max_size=4))))
    chain = refinement_chain(range(n), sizes)
    assert [p.P for p in chain] == sizes
    for coarse, fine in zip(chain, chain[1:]):
        assert fine.refines(coarse)
