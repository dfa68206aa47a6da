"""Symmetric Euclidean TSP instances, tours, and a small exact solver."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numba
import numpy as np

from .rng import as_generator

DENSE_LIMIT = 5000  # largest n for which the full cost matrix is materialized
HELD_KARP_LIMIT = 20


class TsplibError(ValueError):
    """Raised for TSPLIB input this reader does not accept."""


def rounded_euclidean_cost(p: Sequence[float], q: Sequence[float]) -> int:
    """Nearest-integer Euclidean distance, ``floor(sqrt(dx^2 + dy^2) + 0.5)``."""
    dx = float(p[0]) - float(q[0])
    dy = float(p[1]) - float(q[1])
    return int(math.floor(math.sqrt(dx * dx + dy * dy) + 0.5))


def _cost_rows(coords: np.ndarray, rows: np.ndarray) -> np.ndarray:
    diff = coords[rows, None, :] - coords[None, :, :]
    return np.floor(np.sqrt((diff**2).sum(axis=-1)) + 0.5).astype(np.int64)


@dataclass(frozen=True, eq=False)
class TspInstance:
    """A symmetric TSP with rounded Euclidean costs.

    ``coords`` is an ``(n, 2)`` float array; generated instances hold
    integer values only. The object is immutable, and the cost matrix and
    neighbor lists are computed lazily and cached.
    """

    coords: np.ndarray
    name: str = "unnamed"
    known_optimum: int | None = None

    def __post_init__(self) -> None:
        coords = np.ascontiguousarray(self.coords, dtype=np.float64)
        if coords.ndim != 2 or coords.shape[1] != 2:
            raise ValueError(f"coords must have shape (n, 2), got {coords.shape}")
        if coords.shape[0] < 3:
            raise ValueError(f"a TSP instance needs n >= 3 cities, got {coords.shape[0]}")
        if not np.all(np.isfinite(coords)) or np.any(coords < 0):
            raise ValueError("coordinates must be finite and non-negative")
        coords.setflags(write=False)
        object.__setattr__(self, "coords", coords)

    @property
    def n(self) -> int:
        return int(self.coords.shape[0])

    def cost(self, i: int, j: int) -> int:
        if self.n <= DENSE_LIMIT:
            return int(self.distance_matrix[i, j])
        return rounded_euclidean_cost(self.coords[i], self.coords[j])

    @cached_property
    def distance_matrix(self) -> np.ndarray:
        if self.n > DENSE_LIMIT:
            raise MemoryError(
                f"refusing to materialize a {self.n}x{self.n} cost matrix "
                f"(limit {DENSE_LIMIT}); use neighbor lists instead"
            )
        d = _cost_rows(self.coords, np.arange(self.n))
        d.setflags(write=False)
        return d

    def neighbor_lists(self, k: int) -> np.ndarray:
        """The ``k`` nearest other cities of every city, as an ``(n, k)`` array.

        Ordered by increasing cost, ties broken by lower city index.
        """
        k = min(int(k), self.n - 1)
        if k < 1:
            raise ValueError("k must be >= 1")
        key = ("nbr", k)
        if key not in self._cache:
            self._cache[key] = self._compute_neighbors(k)
        return self._cache[key]

    @cached_property
    def _cache(self) -> dict:
        # derived read-only arrays (neighbor lists, sorted edges)
        return {}

    def _compute_neighbors(self, k: int) -> np.ndarray:
        n = self.n
        if n <= DENSE_LIMIT:
            d = self.distance_matrix.copy()
            np.fill_diagonal(d, np.iinfo(np.int64).max)
            # stable sort keeps ascending index among equal costs
            nbr = np.argsort(d, axis=1, kind="stable")[:, :k]
        else:
            from scipy.spatial import cKDTree

            extra = min(n - 1, k + 8)
            _, idx = cKDTree(self.coords).query(self.coords, k=extra + 1)
            nbr = np.empty((n, k), dtype=np.int64)
            for i in range(n):
                cand = idx[i][idx[i] != i][:extra]
                c = np.array([rounded_euclidean_cost(self.coords[i], self.coords[j]) for j in cand])
                order = np.lexsort((cand, c))
                nbr[i] = cand[order][:k]
        nbr = np.ascontiguousarray(nbr, dtype=np.int64)
        nbr.setflags(write=False)
        return nbr

    def to_json(self) -> str:
        coords = [
            [int(x) if float(x).is_integer() else float(x) for x in row] for row in self.coords
        ]
        return json.dumps(
            {"name": self.name, "n": self.n, "coords": coords, "known_optimum": self.known_optimum}
        )

    @classmethod
    def from_json(cls, text: str) -> "TspInstance":
        doc = json.loads(text)
        inst = cls(np.asarray(doc["coords"], dtype=np.float64), doc.get("name", "unnamed"),
                   doc.get("known_optimum"))
        if "n" in doc and doc["n"] != inst.n:
            raise ValueError(f"n={doc['n']} does not match {inst.n} coordinates")
        return inst


@dataclass(frozen=True, eq=False)
class Tour:
    """A Hamiltonian cycle given as a city order, with its total cost."""

    order: np.ndarray
    cost: int = field(default=-1)

    @classmethod
    def from_order(cls, inst: TspInstance, order: Sequence[int]) -> "Tour":
        arr = np.ascontiguousarray(order, dtype=np.int64)
        arr.setflags(write=False)
        return cls(arr, tour_cost(inst, arr))

    def is_valid(self, inst: TspInstance) -> bool:
        return is_permutation(self.order, inst.n) and tour_cost(inst, self.order) == self.cost


def is_permutation(order: Sequence[int], n: int) -> bool:
    arr = np.asarray(order)
    if arr.shape != (n,) or not np.issubdtype(arr.dtype, np.integer):
        return False
    seen = np.zeros(n, dtype=bool)
    if arr.min() < 0 or arr.max() >= n:
        return False
    seen[arr] = True
    return bool(seen.all())


def tour_cost(inst: TspInstance, order: Sequence[int]) -> int:
    """Total cost of the closed cycle visiting ``order``."""
    arr = np.asarray(order)
    if not is_permutation(arr, inst.n):
        raise ValueError("order is not a permutation of 0..n-1")
    nxt = np.roll(arr, -1)
    if inst.n <= DENSE_LIMIT:
        return int(inst.distance_matrix[arr, nxt].sum())
    diff = inst.coords[arr] - inst.coords[nxt]
    return int(np.floor(np.sqrt((diff**2).sum(axis=1)) + 0.5).astype(np.int64).sum())


def generate_random_instance(
    n: int, coord_bound: int = 100_000, seed: int | np.random.Generator = 0, name: str | None = None
) -> TspInstance:
    """Cities with i.i.d. uniform integer coordinates in ``[0, coord_bound - 1]``."""
    if n < 3:
        raise ValueError(f"n must be >= 3, got {n}")
    if coord_bound < 1:
        raise ValueError(f"coord_bound must be >= 1, got {coord_bound}")
    rng = as_generator(seed)
    coords = rng.integers(0, coord_bound, size=(n, 2), dtype=np.int64)
    if name is None:
        name = f"rand{n}" if isinstance(seed, np.random.Generator) else f"rand{n}_s{seed}"
    return TspInstance(coords.astype(np.float64), name)


def parse_tsplib(text: str, known_optimum: int | None = None) -> TspInstance:
    """Read a TSPLIB ``TYPE: TSP`` / ``EDGE_WEIGHT_TYPE: EUC_2D`` file.

    A missing ``EOF`` line is tolerated as long as the coordinate section
    is complete.
    """
    header: dict[str, str] = {}
    coords: list[tuple[float, float]] = []
    ids: list[int] = []
    in_coords = False
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if line.upper() == "EOF":
            break
        if in_coords:
            parts = line.split()
            if len(parts) != 3:
                raise TsplibError(f"line {lineno}: malformed NODE_COORD_SECTION entry {line!r}")
            try:
                ids.append(int(parts[0]))
                coords.append((float(parts[1]), float(parts[2])))
            except ValueError:
                raise TsplibError(
                    f"line {lineno}: malformed NODE_COORD_SECTION entry {line!r}"
                ) from None
            continue
        if line.upper().startswith("NODE_COORD_SECTION"):
            in_coords = True
            continue
        key, sep, value = line.partition(":")
        if not sep:
            raise TsplibError(f"line {lineno}: unsupported section or header {line!r}")
        header[key.strip().upper()] = value.strip()

    kind = header.get("TYPE", "TSP").split()[0].upper()
    if kind != "TSP":
        raise TsplibError(f"unsupported TYPE {kind!r}; only TSP is accepted")
    ewt = header.get("EDGE_WEIGHT_TYPE", "").upper()
    if ewt != "EUC_2D":
        raise TsplibError(f"unsupported EDGE_WEIGHT_TYPE {ewt!r}; only EUC_2D is accepted")
    if "DIMENSION" not in header:
        raise TsplibError("missing DIMENSION")
    dim = int(header["DIMENSION"])
    if not in_coords:
        raise TsplibError("missing NODE_COORD_SECTION")
    if len(coords) != dim:
        raise TsplibError(f"DIMENSION is {dim} but {len(coords)} coordinates were read")
    if sorted(ids) != list(range(1, dim + 1)):
        raise TsplibError("node ids must be 1..DIMENSION")
    arr = np.empty((dim, 2), dtype=np.float64)
    for node, xy in zip(ids, coords):
        arr[node - 1] = xy
    return TspInstance(arr, header.get("NAME", "unnamed"), known_optimum)


@numba.njit(cache=True)
def _held_karp(d: np.ndarray) -> int:
    n = d.shape[0]
    m = n - 1  # city 0 is the fixed start; bit j stands for city j + 1
    full = 1 << m
    inf = np.iinfo(np.int64).max // 4
    dp = np.full((full, m), inf, dtype=np.int64)
    for j in range(m):
        dp[1 << j, j] = d[0, j + 1]
    for mask in range(1, full):
        for j in range(m):
            cur = dp[mask, j]
            if cur >= inf or not (mask >> j) & 1:
                continue
            for k in range(m):
                if (mask >> k) & 1:
                    continue
                nm = mask | (1 << k)
                val = cur + d[j + 1, k + 1]
                if val < dp[nm, k]:
                    dp[nm, k] = val
    best = inf
    for j in range(m):
        val = dp[full - 1, j] + d[j + 1, 0]
        if val < best:
            best = val
    return best


def held_karp_optimum(inst: TspInstance) -> int:
    """Exact optimal tour cost by bitmask dynamic programming (n <= 20)."""
    if inst.n > HELD_KARP_LIMIT:
        raise ValueError(f"Held-Karp is limited to n <= {HELD_KARP_LIMIT}, got n={inst.n}")
    return int(_held_karp(np.ascontiguousarray(inst.distance_matrix)))
