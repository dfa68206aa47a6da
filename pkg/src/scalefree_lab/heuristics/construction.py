"""Randomized tour construction and the double-bridge kick."""

from __future__ import annotations

import numpy as np

from ..tsp_core import DENSE_LIMIT, TspInstance, Tour
from . import _kernels


def construct_random(inst: TspInstance, rng: np.random.Generator) -> Tour:
    """Visit the cities in a uniformly random order."""
    return Tour.from_order(inst, rng.permutation(inst.n))


def construct_nearest_neighbor(inst: TspInstance, rng: np.random.Generator, k: int = 3) -> Tour:
    """Randomized nearest neighbor.

    Starts at a uniformly random city and moves to a uniformly chosen member
    of the ``k`` nearest unvisited cities at every step.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    start = int(rng.integers(inst.n))
    u = rng.random(inst.n)
    nbr = inst.neighbor_lists(max(k, 10))
    order = _kernels.nearest_neighbor_tour(inst.coords, nbr, start, u, k)
    return Tour.from_order(inst, order)


def sorted_edges(inst: TspInstance) -> np.ndarray:
    """Candidate edges ``(i, j)``, ``i < j``, sorted by (cost, i, j).

    All pairs up to ``DENSE_LIMIT`` cities, otherwise the union of the
    12-nearest-neighbor lists.
    """
    cache = inst._cache
    if "edges" in cache:
        return cache["edges"]
    if inst.n <= DENSE_LIMIT:
        i, j = np.triu_indices(inst.n, k=1)
        c = inst.distance_matrix[i, j]
    else:
        nbr = inst.neighbor_lists(12)
        i = np.repeat(np.arange(inst.n), nbr.shape[1])
        j = nbr.ravel()
        lo, hi = np.minimum(i, j), np.maximum(i, j)
        pairs = np.unique(np.stack([lo, hi], axis=1), axis=0)
        i, j = pairs[:, 0], pairs[:, 1]
        diff = inst.coords[i] - inst.coords[j]
        c = np.floor(np.sqrt((diff**2).sum(axis=1)) + 0.5).astype(np.int64)
    idx = np.lexsort((j, i, c))
    edges = np.ascontiguousarray(np.stack([i[idx], j[idx]], axis=1), dtype=np.int64)
    edges.setflags(write=False)
    cache["edges"] = edges
    return edges


def construct_greedy(inst: TspInstance, rng: np.random.Generator, k: int = 3) -> Tour:
    """Randomized greedy matching.

    The globally shortest edge goes in first; afterwards each step adds an
    edge chosen uniformly among the ``k`` cheapest edges that keep every
    degree <= 2 and close no premature cycle. The final edge closes the
    Hamiltonian path into a tour.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    u = rng.random(inst.n)
    order = _kernels.greedy_tour(inst.coords, sorted_edges(inst), u, k)
    return Tour.from_order(inst, order)


def double_bridge_kick(
    tour: Tour, rng: np.random.Generator, inst: TspInstance | None = None
) -> Tour:
    """Cut the tour into A B C D at three random points and reconnect as A C B D."""
    order = np.asarray(tour.order)
    n = order.shape[0]
    if n < 8:
        raise ValueError(f"double-bridge kick needs n >= 8, got {n}")
    p1, p2, p3 = np.sort(rng.choice(np.arange(1, n), size=3, replace=False))
    new = np.concatenate([order[:p1], order[p2:p3], order[p1:p2], order[p3:]])
    if inst is None:
        return Tour(new, -1)
    return Tour.from_order(inst, new)
