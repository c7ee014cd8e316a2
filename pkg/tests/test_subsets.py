"""
Tests for the Subset type and the state enumeration:

  - Members, size, printing and hex form of a subset built from indices.
  - Out-of-range indices and widths are rejected.
  - Flipping is an involution and moves by exactly one in Hamming distance; Hamming distance
    is symmetric and satisfies the triangle inequality on random triples.
  - Set operations agree with Python sets.
  - Full enumeration is complete and in ascending bit order; the size-filtered enumeration
    is sorted the same way.
  - Enumerations above the cap raise instead of allocating.
"""
import itertools
import math

import pytest

from ewachain.errors import EnumerationTooLarge, StateSpaceTooLarge
from ewachain.rng import make_rng
from ewachain.subsets import (Subset, count_states, enumerate_states, hamming, neighbors,
                              states_of_size)


@pytest.fixture(params=[(5, (0, 2)), (8, ()), (8, (7,)), (64, (0, 63)), (12, (1, 4, 5, 11))])
def built(request):
    p, indices = request.param
    return p, indices, Subset.from_indices(indices, p)


def test_members_and_size(built):
    p, indices, S = built
    assert S.indices == tuple(sorted(indices))
    assert S.size == len(indices) == len(S)
    assert all(j in S for j in indices)
    assert all(j not in S for j in range(p) if j not in indices)
    assert S.bits == sum(1 << j for j in indices)


def test_printing():
    S = Subset.from_indices([2, 0], 5)
    assert str(S) == "{0,2}"
    assert S.hex() == "05"
    assert Subset.empty(5).hex() == "00"
    assert Subset.full(8).hex() == "ff"
    assert str(Subset.empty(3)) == "{}"


def test_rejects_bad_input():
    with pytest.raises(ValueError):
        Subset.from_indices([5], 5)
    with pytest.raises(ValueError):
        Subset.from_indices([-1], 5)
    with pytest.raises(ValueError):
        Subset(0, 65)
    with pytest.raises(ValueError):
        Subset(1 << 4, 4)


def test_flip_and_hamming(built):
    p, _, S = built
    for j in range(p):
        flipped = S.flip(j)
        assert flipped.flip(j) == S
        assert S.hamming(flipped) == 1
        assert hamming(S, flipped) == 1
        assert (j in flipped) != (j in S)


def test_neighbors():
    S = Subset.from_indices([1], 4)
    found = neighbors(S)
    assert len(found) == 4
    assert [N.bits for N in found] == [0b0011, 0b0000, 0b0110, 0b1010]


def test_hamming_triangle_inequality():
    rng = make_rng(11)
    for _ in range(10000):
        A, B, C = (Subset(int(rng.integers(0, 1 << 62)), 64) for _ in range(3))
        assert hamming(A, C) <= hamming(A, B) + hamming(B, C)
        assert hamming(A, B) == hamming(B, A) == (A.bits ^ B.bits).bit_count()


def test_set_operations():
    p = 10
    a, b = {0, 3, 4, 9}, {3, 5, 9}
    A, B = Subset.from_indices(a, p), Subset.from_indices(b, p)
    assert set(A.union(B)) == a | b
    assert set(A.intersection(B)) == a & b
    assert set(A.difference(B)) == a - b
    assert A.hamming(B) == len(a ^ b)
    assert A.intersection(B).issubset(A)
    assert A.union(B).issuperset(B)
    assert A.difference(B).isdisjoint(B)
    with pytest.raises(ValueError):
        A.union(Subset.empty(9))


@pytest.mark.parametrize("p", [1, 3, 6])
def test_full_enumeration(p):
    states = list(enumerate_states(p))
    assert len(states) == 2**p == count_states(p)
    assert [S.bits for S in states] == list(range(2**p))


def test_filtered_enumeration():
    states = list(enumerate_states(4, max_size=1))
    assert [S.bits for S in states] == [0, 1, 2, 4, 8]
    states = list(enumerate_states(6, max_size=2))
    assert len(states) == count_states(6, max_size=2) == 1 + 6 + 15
    assert [S.bits for S in states] == sorted(S.bits for S in states)
    assert all(S.size <= 2 for S in states)


def test_states_of_size():
    layer = list(states_of_size(5, 2))
    assert len(layer) == math.comb(5, 2)
    expected = sorted(sum(1 << j for j in c) for c in itertools.combinations(range(5), 2))
    assert [S.bits for S in layer] == expected


def test_enumeration_caps():
    with pytest.raises(StateSpaceTooLarge):
        enumerate_states(30)
    with pytest.raises(StateSpaceTooLarge):
        enumerate_states(6, cap=32)
    with pytest.raises(EnumerationTooLarge):
        enumerate_states(40, max_size=5, cap=1000)
