import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from _oracles import brute_states, moves
from ruinlab import ValidationError
from ruinlab.simplex import (
    ChipConfig,
    center_state,
    distance,
    enumerate_interior,
    face,
    interior_neighbors,
    interior_neighbors_of_boundary,
    neighbors,
)


@pytest.mark.parametrize("k,N", [(2, 2), (2, 9), (3, 3), (3, 4), (3, 11), (4, 4), (4, 10), (5, 9)])
def test_enumeration_matches_brute_force(k, N):
    index = enumerate_interior(k, N)
    interior, boundary = brute_states(k, N)
    assert [tuple(x) for x in index.interior] == interior
    assert [tuple(z) for z in index.boundary] == boundary
    assert index.interior_count == math.comb(N - 1, k - 1)
    assert index.boundary_count == k * math.comb(N - 1, k - 2)


def test_small_enumerations():
    assert enumerate_interior(3, 3).interior.tolist() == [[1, 1, 1]]
    assert enumerate_interior(4, 4).interior.tolist() == [[1, 1, 1, 1]]
    assert enumerate_interior(3, 4).interior.tolist() == [[1, 1, 2], [1, 2, 1], [2, 1, 1]]


@pytest.mark.parametrize("k,N", [(1, 3), (3, 2), (0, 0)])
def test_enumerate_rejects_bad_sizes(k, N):
    with pytest.raises(ValidationError):
        enumerate_interior(k, N)


def test_index_roundtrip_and_lookup_misses():
    index = enumerate_interior(4, 9)
    for i, x in enumerate(index.interior):
        assert index.encode(x) == i
        assert index.decode(i).chips == tuple(x)
    for j, z in enumerate(index.boundary):
        assert index.encode_boundary(z) == j
        assert index.decode_boundary(j).chips == tuple(z)
    assert index.lookup([[0, 3, 3, 3]])[0] == -1
    assert index.lookup_boundary([[0, 0, 4, 5]])[0] == -1
    with pytest.raises(ValidationError):
        index.encode((0, 3, 3, 3))


def test_index_arrays_are_read_only():
    index = enumerate_interior(3, 5)
    with pytest.raises(ValueError):
        index.interior[0, 0] = 7


def test_chip_config_predicates():
    assert ChipConfig((1, 2, 3)).is_interior
    z = ChipConfig((0, 2, 3))
    assert z.is_boundary and z.ruined_player == 1 and z.N == 5 and z.k == 3
    corner = ChipConfig((0, 0, 5))
    assert not corner.is_boundary and not corner.is_interior and corner.ruined_player is None
    with pytest.raises(ValidationError):
        ChipConfig((1, -1, 2))
    with pytest.raises(ValidationError):
        ChipConfig((1.5, 1, 2))


def test_neighbors_of_center_all_exit():
    ms = neighbors((1, 1, 1))
    assert len(ms) == 6
    assert all(m.valid and min(m.target) == 0 for m in ms)


def test_neighbors_examples():
    assert sorted(c.chips for c in interior_neighbors((1, 1, 2))) == [(1, 2, 1), (2, 1, 1)]
    N = 30
    inside = interior_neighbors((1, 1, 1, N - 3))
    assert len(neighbors((1, 1, 1, N - 3))) == 12
    # only the moves where the rich player gives stay inside
    assert len(inside) == 3
    assert sorted(c.chips for c in inside) == [(1, 1, 2, N - 4), (1, 2, 1, N - 4), (2, 1, 1, N - 4)]


def test_invalid_moves_flagged():
    ms = neighbors((0, 2, 3))
    bad = [m for m in ms if not m.valid]
    assert len(bad) == 2 and all(m.giver == 1 for m in bad)
    assert all(sum(m.target) == 5 for m in ms)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(1, 6), min_size=2, max_size=5))
def test_neighbor_relation_symmetric(chips):
    for m in neighbors(chips):
        if m.valid:
            assert tuple(chips) in {n.target for n in neighbors(m.target) if n.valid}


def test_interior_neighbors_of_boundary_examples():
    assert [c.chips for c in interior_neighbors_of_boundary((0, 1, 3))] == [(1, 1, 2)]
    assert sorted(c.chips for c in interior_neighbors_of_boundary((0, 2, 2))) == [(1, 1, 2), (1, 2, 1)]
    with pytest.raises(ValidationError):
        interior_neighbors_of_boundary((0, 0, 4))
    with pytest.raises(ValidationError):
        interior_neighbors_of_boundary((1, 1, 2))


@pytest.mark.parametrize("k,N", [(3, 7), (4, 8)])
def test_interior_neighbors_of_boundary_matches_oracle(k, N):
    interior, boundary = brute_states(k, N)
    for z in boundary:
        expected = sorted(y for y in interior if z in set(moves(y)))
        got = [c.chips for c in interior_neighbors_of_boundary(z)]
        assert got == expected and got


def test_distance():
    assert distance((1, 1, 2), (1, 1, 2)) == 0
    assert distance((1, 1, 2), (2, 1, 1)) == pytest.approx(math.sqrt(2), abs=1e-15)
    with pytest.raises(ValidationError):
        distance((1, 1, 2), (1, 1, 3))
    N = 20
    index = enumerate_interior(4, N)
    dmin = min(distance((1, 1, 1, N - 3), z) for z in face(4, index))
    assert dmin >= (N - 3) / math.sqrt(2)


def test_faces():
    index = enumerate_interior(3, 4)
    assert [z.chips for z in face(1, index)] == [(0, 1, 3), (0, 2, 2), (0, 3, 1)]
    assert [z.chips for z in face(4, enumerate_interior(4, 4))] == [(1, 1, 2, 0), (1, 2, 1, 0), (2, 1, 1, 0)]
    index = enumerate_interior(4, 9)
    union = sorted(z.chips for i in range(1, 5) for z in face(i, index))
    assert union == [tuple(z) for z in index.boundary]
    with pytest.raises(ValidationError):
        face(5, index)


def test_center_state():
    assert center_state(enumerate_interior(3, 4)).chips == (1, 1, 2)
    assert center_state(enumerate_interior(4, 12)).chips == (3, 3, 3, 3)
    index = enumerate_interior(3, 10)
    c = np.array(center_state(index).chips)
    d = np.sum((3 * index.interior - 10) ** 2, axis=1)
    assert np.sum((3 * c - 10) ** 2) == d.min()
