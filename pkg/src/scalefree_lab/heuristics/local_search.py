"""2-opt, 3-opt and Lin-Kernighan local search on candidate neighbor lists."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..tsp_core import TspInstance, Tour
from . import _kernels

TWO_OPT_NEIGHBORS = 10
THREE_OPT_NEIGHBORS = 10
LK_NEIGHBORS = 12


@dataclass(frozen=True)
class LKParams:
    """Lin-Kernighan search limits.

    ``breadth`` alternatives are tried at the first two levels of a chain,
    one at every deeper level, up to ``max_depth`` 2-exchanges.
    """

    max_depth: int = 50
    breadth: int = 5
    neighbors: int = LK_NEIGHBORS

    def __post_init__(self) -> None:
        if self.max_depth < 2:
            raise ValueError(f"max_depth must be >= 2, got {self.max_depth}")
        if self.breadth < 1:
            raise ValueError(f"breadth must be >= 1, got {self.breadth}")
        if self.neighbors < 1:
            raise ValueError(f"neighbors must be >= 1, got {self.neighbors}")


def _candidates(inst: TspInstance, candidates: np.ndarray | int | None, default: int) -> np.ndarray:
    if candidates is None:
        candidates = default
    if isinstance(candidates, (int, np.integer)):
        return inst.neighbor_lists(int(candidates))
    return np.ascontiguousarray(candidates, dtype=np.int64)


def _descend(inst, tour, candidates, default, max_k, dont_look_bits) -> Tour:
    nbr = _candidates(inst, candidates, default)
    order, _ = _kernels.kopt_descent(
        inst.coords, nbr, np.ascontiguousarray(tour.order, dtype=np.int64), max_k, dont_look_bits
    )
    return Tour.from_order(inst, order)


def improve_two_opt(
    inst: TspInstance,
    tour: Tour,
    candidates: np.ndarray | int | None = None,
    dont_look_bits: bool = True,
) -> Tour:
    """First-improvement 2-opt descent to a local optimum.

    ``candidates`` is either an ``(n, k)`` neighbor array or a list width.
    """
    return _descend(inst, tour, candidates, TWO_OPT_NEIGHBORS, 2, dont_look_bits)


def improve_three_opt(
    inst: TspInstance,
    tour: Tour,
    candidates: np.ndarray | int | None = None,
    dont_look_bits: bool = True,
) -> Tour:
    """First-improvement 3-opt descent; 2-exchanges are tried before 3-exchanges."""
    return _descend(inst, tour, candidates, THREE_OPT_NEIGHBORS, 3, dont_look_bits)


def improve_lin_kernighan(inst: TspInstance, tour: Tour, params: LKParams | None = None) -> Tour:
    params = params or LKParams()
    nbr = inst.neighbor_lists(params.neighbors)
    order, _ = _kernels.lin_kernighan(
        inst.coords,
        nbr,
        np.ascontiguousarray(tour.order, dtype=np.int64),
        params.max_depth,
        params.breadth,
        params.breadth,
    )
    return Tour.from_order(inst, order)
