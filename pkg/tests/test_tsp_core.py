from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scalefree_lab.rng import substream
from scalefree_lab.tsp_core import (
    TspInstance,
    Tour,
    TsplibError,
    generate_random_instance,
    held_karp_optimum,
    parse_tsplib,
    rounded_euclidean_cost,
    tour_cost,
)

from . import oracles

TRIANGLE = """NAME: tri
TYPE: TSP
COMMENT: three cities
DIMENSION: 3
EDGE_WEIGHT_TYPE: EUC_2D
NODE_COORD_SECTION
1 0 0
2 3 0
3 0 4
EOF
"""


def square() -> TspInstance:
    return TspInstance(np.array([[0, 0], [1, 0], [1, 1], [0, 1]]), "square")


# ---------------------------------------------------------------- costs


@pytest.mark.parametrize(
    "p, q, expected",
    [((0, 0), (3, 4), 5), ((0, 0), (0, 0), 0), ((0, 0), (1, 1), 1), ((0, 0), (1, 2), 2), ((5, 5), (5, 5), 0)],
)
def test_rounded_euclidean_cost(p, q, expected):
    assert rounded_euclidean_cost(p, q) == expected
    assert rounded_euclidean_cost(p, q) == oracles.rounded_cost(p, q)


@settings(max_examples=200, deadline=None)
@given(st.tuples(st.integers(0, 10**5), st.integers(0, 10**5)),
       st.tuples(st.integers(0, 10**5), st.integers(0, 10**5)))
def test_cost_symmetric_and_matches_oracle(p, q):
    assert rounded_euclidean_cost(p, q) == rounded_euclidean_cost(q, p) == oracles.rounded_cost(p, q)
    assert rounded_euclidean_cost(p, p) == 0


def test_distance_matrix_symmetric_zero_diagonal():
    inst = generate_random_instance(40, seed=5)
    d = inst.distance_matrix
    assert np.array_equal(d, d.T)
    assert np.all(np.diag(d) == 0)
    assert d.dtype == np.int64
    ref = oracles.cost_matrix(inst.coords.tolist())
    assert d.tolist() == ref


# ---------------------------------------------------------- generation


def test_generate_random_instance_reproducible_and_in_range():
    a = generate_random_instance(1000, 10**5, seed=7)
    b = generate_random_instance(1000, 10**5, seed=7)
    c = generate_random_instance(1000, 10**5, seed=8)
    assert a.n == 1000
    assert np.array_equal(a.coords, b.coords)
    assert not np.array_equal(a.coords, c.coords)
    assert a.coords.min() >= 0 and a.coords.max() <= 10**5 - 1
    assert np.all(a.coords == np.round(a.coords))


def test_generate_random_instance_rejects_small_n():
    with pytest.raises(ValueError):
        generate_random_instance(2, seed=0)
    with pytest.raises(ValueError):
        generate_random_instance(10, coord_bound=0, seed=0)


def test_coord_bound_one_gives_single_point():
    inst = generate_random_instance(5, coord_bound=1, seed=0)
    assert np.all(inst.coords == 0)


def test_instance_validation():
    with pytest.raises(ValueError):
        TspInstance(np.array([[0, 0], [1, 1]]))
    with pytest.raises(ValueError):
        TspInstance(np.array([[0, 0], [1, 1], [-1, 2]]))
    with pytest.raises(ValueError):
        TspInstance(np.zeros((4, 3)))


def test_instance_json_roundtrip():
    inst = generate_random_instance(12, seed=3)
    inst2 = TspInstance.from_json(inst.to_json())
    assert np.array_equal(inst.coords, inst2.coords)
    assert inst2.name == inst.name
    doc = inst.to_json()
    assert '"coords"' in doc and '"known_optimum"' in doc and '"n": 12' in doc


def test_neighbor_lists_sorted_by_cost_then_index():
    inst = TspInstance(np.array([[0, 0], [2, 0], [0, 2], [5, 5], [1, 0]]))
    nbr = inst.neighbor_lists(4)
    d = inst.distance_matrix
    for i in range(inst.n):
        keys = [(d[i, j], j) for j in nbr[i]]
        assert keys == sorted(keys)
        assert i not in nbr[i]
    # cities 1 and 2 tie at cost 2 from city 0; lower index first
    assert list(nbr[0][:3]) == [4, 1, 2]


# -------------------------------------------------------------- TSPLIB


def test_parse_tsplib_triangle():
    inst = parse_tsplib(TRIANGLE)
    assert inst.n == 3 and inst.name == "tri"
    assert inst.cost(0, 1) == 3 and inst.cost(0, 2) == 4 and inst.cost(1, 2) == 5


def test_parse_tsplib_without_eof_and_with_comments():
    text = """NAME : rl-like
COMMENT : Rattled grid (Pulleyblank)
TYPE : TSP
DIMENSION : 4
EDGE_WEIGHT_TYPE : EUC_2D
NODE_COORD_SECTION
1 0.0 0.0
2 1.0e1 0
3 10 10
4 0 10
"""
    inst = parse_tsplib(text)
    assert inst.n == 4
    assert tour_cost(inst, [0, 1, 2, 3]) == 40


def test_parse_tsplib_accepts_shuffled_ids():
    text = TRIANGLE.replace("1 0 0\n2 3 0\n3 0 4", "3 0 4\n1 0 0\n2 3 0")
    inst = parse_tsplib(text)
    assert inst.coords.tolist() == [[0, 0], [3, 0], [0, 4]]


@pytest.mark.parametrize(
    "text",
    [
        TRIANGLE.replace("EUC_2D", "EXPLICIT"),
        TRIANGLE.replace("EUC_2D", "GEO"),
        TRIANGLE.replace("TYPE: TSP", "TYPE: ATSP"),
        TRIANGLE.replace("DIMENSION: 3", "DIMENSION: 4"),
        TRIANGLE.replace("3 0 4", "3 0"),
        TRIANGLE.replace("3 0 4", "3 zero 4"),
        TRIANGLE.replace("3 0 4", "7 0 4"),
        TRIANGLE.replace("DIMENSION: 3\n", ""),
        "NAME: x\nTYPE: TSP\nDIMENSION: 3\nEDGE_WEIGHT_TYPE: EUC_2D\nEOF\n",
    ],
)
def test_parse_tsplib_errors(text):
    with pytest.raises(TsplibError):
        parse_tsplib(text)


# ---------------------------------------------------------- tour costs


def test_tour_cost_examples():
    tri = parse_tsplib(TRIANGLE)
    assert tour_cost(tri, [0, 1, 2]) == 12
    assert tour_cost(square(), [0, 1, 2, 3]) == 4
    # unit diagonals round to 1, so crossing only shows on a larger square
    assert tour_cost(square(), [0, 2, 1, 3]) == 4
    big = TspInstance(np.array([[0, 0], [10, 0], [10, 10], [0, 10]]))
    assert tour_cost(big, [0, 2, 1, 3]) == 48


def test_tour_cost_rejects_non_permutation():
    with pytest.raises(ValueError):
        tour_cost(square(), [0, 1, 1, 3])
    with pytest.raises(ValueError):
        tour_cost(square(), [0, 1, 2])
    with pytest.raises(ValueError):
        tour_cost(square(), [0, 1, 2, 4])


@settings(max_examples=50, deadline=None)
@given(st.integers(3, 30), st.integers(0, 10**6), st.integers(0, 100))
def test_tour_cost_rotation_and_reversal_invariant(n, seed, shift):
    inst = generate_random_instance(n, seed=seed)
    order = substream(seed).permutation(n)
    c = tour_cost(inst, order)
    assert tour_cost(inst, np.roll(order, shift)) == c
    assert tour_cost(inst, order[::-1]) == c
    assert c == oracles.cycle_cost(oracles.cost_matrix(inst.coords.tolist()), order.tolist())


def test_tour_validity():
    inst = square()
    t = Tour.from_order(inst, [3, 2, 1, 0])
    assert t.cost == 4 and t.is_valid(inst)
    assert not Tour(np.array([0, 1, 2, 3]), 5).is_valid(inst)


# ---------------------------------------------------------- Held-Karp


def test_held_karp_small_cases():
    assert held_karp_optimum(parse_tsplib(TRIANGLE)) == 12
    assert held_karp_optimum(square()) == 4


@pytest.mark.parametrize("seed", range(8))
def test_held_karp_matches_brute_force_n9(seed):
    inst = generate_random_instance(9, coord_bound=1000, seed=seed)
    assert held_karp_optimum(inst) == oracles.brute_force_optimum(inst.coords.tolist())


def test_held_karp_lower_bounds_random_tours():
    inst = generate_random_instance(12, seed=99)
    opt = held_karp_optimum(inst)
    rng = substream(99)
    for _ in range(200):
        assert opt <= tour_cost(inst, rng.permutation(12))


def test_held_karp_rejects_large_n():
    with pytest.raises(ValueError):
        held_karp_optimum(generate_random_instance(21, seed=0))
