"""Construction heuristics and local searches for the RMS/ILS experiments.

Algorithm names follow the usual short forms: ``RA``/``NN``/``GR`` for
construction and ``2opt``/``3opt``/``LK`` for local search, so
``"NN+LK"`` is randomized nearest neighbor followed by Lin-Kernighan.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..tsp_core import TspInstance, Tour
from .construction import (
    construct_greedy,
    construct_nearest_neighbor,
    construct_random,
    double_bridge_kick,
    sorted_edges,
)
from .local_search import LKParams, improve_lin_kernighan, improve_three_opt, improve_two_opt

__all__ = [
    "ConstructionKind",
    "LKParams",
    "LocalSearchKind",
    "construct_greedy",
    "construct_nearest_neighbor",
    "construct_random",
    "double_bridge_kick",
    "improve_lin_kernighan",
    "improve_three_opt",
    "improve_two_opt",
    "parse_algorithm",
    "sorted_edges",
]

CONSTRUCTIONS = ("RA", "NN", "GR")
LOCAL_SEARCHES = ("2opt", "3opt", "LK")


@dataclass(frozen=True)
class ConstructionKind:
    variant: str = "RA"
    k: int = 3

    def __post_init__(self) -> None:
        if self.variant not in CONSTRUCTIONS:
            raise ValueError(f"unknown construction {self.variant!r}; expected one of {CONSTRUCTIONS}")
        if self.k < 1:
            raise ValueError(f"candidate width k must be >= 1, got {self.k}")

    def build(self, inst: TspInstance, rng: np.random.Generator) -> Tour:
        if self.variant == "RA":
            return construct_random(inst, rng)
        if self.variant == "NN":
            return construct_nearest_neighbor(inst, rng, self.k)
        return construct_greedy(inst, rng, self.k)


@dataclass(frozen=True)
class LocalSearchKind:
    variant: str = "3opt"
    lk: LKParams = field(default_factory=LKParams)

    def __post_init__(self) -> None:
        if self.variant not in LOCAL_SEARCHES:
            raise ValueError(f"unknown local search {self.variant!r}; expected one of {LOCAL_SEARCHES}")

    def improve(self, inst: TspInstance, tour: Tour) -> Tour:
        if self.variant == "2opt":
            return improve_two_opt(inst, tour)
        if self.variant == "3opt":
            return improve_three_opt(inst, tour)
        return improve_lin_kernighan(inst, tour, self.lk)


_LS_ALIASES = {"2opt": "2opt", "2-opt": "2opt", "3opt": "3opt", "3-opt": "3opt", "lk": "LK"}


def parse_algorithm(name: str, k: int = 3, lk: LKParams | None = None) -> tuple[ConstructionKind, LocalSearchKind]:
    """Parse names like ``"NN+LK"`` or ``"RA + 3-opt"``."""
    parts = [p.strip() for p in name.split("+")]
    if len(parts) != 2:
        raise ValueError(f"algorithm {name!r} must look like '<RA|NN|GR>+<3opt|LK>'")
    cons, ls = parts
    ls_key = _LS_ALIASES.get(ls.lower())
    if cons.upper() not in CONSTRUCTIONS or ls_key is None:
        raise ValueError(f"unknown algorithm {name!r}")
    return ConstructionKind(cons.upper(), k), LocalSearchKind(ls_key, lk or LKParams())
