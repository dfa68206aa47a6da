"""Random multi-start (RMS) and iterated local search (ILS) drivers.

Both drivers record one empirical objective value (EOV) per iteration.
TSP is a minimization problem, so the EOV is the *negated* tour cost and
the best-EOV process ``best`` is a running maximum.
"""

from __future__ import annotations

import csv
import io
import json
import time
from pathlib import Path
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .heuristics import ConstructionKind, LocalSearchKind, double_bridge_kick
from .rng import substream
from .series import GapSeries
from .tsp_core import TspInstance, Tour

Kick = Callable[[Tour, np.random.Generator], Tour]


@dataclass(eq=False)
class RunTrace:
    instance_name: str
    algorithm: str
    driver: str
    seed: int
    eov: np.ndarray
    best: np.ndarray = field(default=None)  # type: ignore[assignment]
    wall_times: np.ndarray | None = None
    run_index: int = 0
    best_tour: Tour | None = None

    def __post_init__(self) -> None:
        self.eov = np.asarray(self.eov, dtype=np.int64)
        if self.best is None:
            self.best = np.maximum.accumulate(self.eov)
        self.best = np.asarray(self.best, dtype=np.int64)
        if self.best.shape != self.eov.shape:
            raise ValueError("best and eov must have equal length")
        if np.any(self.best != np.maximum.accumulate(self.eov)):
            raise ValueError("best must be the running maximum of eov")

    def __len__(self) -> int:
        return int(self.eov.size)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["iter", "eov", "best"])
        for i, (x, z) in enumerate(zip(self.eov, self.best), 1):
            w.writerow([i, int(x), int(z)])
        return buf.getvalue()

    def sidecar(self, optimum: float | None = None) -> dict:
        return {
            "instance": self.instance_name,
            "algorithm": self.algorithm,
            "driver": self.driver,
            "seed": self.seed,
            "run_index": self.run_index,
            "optimum": optimum,
        }

    @classmethod
    def from_csv(cls, text: str, sidecar: dict) -> "RunTrace":
        rows = list(csv.DictReader(io.StringIO(text)))
        if rows and list(rows[0].keys()) != ["iter", "eov", "best"]:
            raise ValueError("trace CSV must have header iter,eov,best")
        eov = np.array([int(r["eov"]) for r in rows], dtype=np.int64)
        best = np.array([int(r["best"]) for r in rows], dtype=np.int64)
        return cls(
            sidecar["instance"],
            sidecar["algorithm"],
            sidecar.get("driver", "RMS"),
            sidecar["seed"],
            eov,
            best,
            run_index=sidecar.get("run_index", 0),
        )


def _label(construction: ConstructionKind, local_search: LocalSearchKind) -> str:
    return f"{construction.variant}+{local_search.variant}"


def run_rms(
    inst: TspInstance,
    construction: ConstructionKind,
    local_search: LocalSearchKind,
    iterations: int,
    seed: int,
    run_index: int = 0,
    record_time: bool = False,
) -> RunTrace:
    """Fresh randomized construction plus local search at every iteration.

    Iteration ``i`` draws from the stream ``(seed, run_index, i)``, so the
    iterations are independent and any single one can be replayed.
    """
    if iterations < 1:
        raise ValueError(f"iterations must be >= 1, got {iterations}")
    eov = np.empty(iterations, dtype=np.int64)
    times = np.empty(iterations) if record_time else None
    best_tour = None
    for i in range(iterations):
        t0 = time.perf_counter()
        rng = substream(seed, run_index, i)
        tour = local_search.improve(inst, construction.build(inst, rng))
        eov[i] = -tour.cost
        if best_tour is None or tour.cost < best_tour.cost:
            best_tour = tour
        if times is not None:
            times[i] = time.perf_counter() - t0
    return RunTrace(inst.name, _label(construction, local_search), "RMS", seed, eov,
                    wall_times=times, run_index=run_index, best_tour=best_tour)


def run_ils(
    inst: TspInstance,
    construction: ConstructionKind,
    local_search: LocalSearchKind,
    iterations: int,
    seed: int,
    run_index: int = 0,
    kick: Kick | None = double_bridge_kick,
    record_time: bool = False,
) -> RunTrace:
    """Iterated local search from the incumbent best tour.

    Iteration 1 is an RMS iteration. Later iterations kick the incumbent,
    re-optimize, and replace the incumbent only on strict improvement.
    ``kick=None`` re-optimizes the incumbent unchanged.
    """
    if iterations < 1:
        raise ValueError(f"iterations must be >= 1, got {iterations}")
    eov = np.empty(iterations, dtype=np.int64)
    times = np.empty(iterations) if record_time else None
    incumbent: Tour | None = None
    for i in range(iterations):
        t0 = time.perf_counter()
        rng = substream(seed, run_index, i)
        if incumbent is None:
            start = construction.build(inst, rng)
        elif kick is None:
            start = incumbent
        else:
            start = Tour.from_order(inst, kick(incumbent, rng).order)
        tour = local_search.improve(inst, start)
        eov[i] = -tour.cost
        if incumbent is None or tour.cost < incumbent.cost:
            incumbent = tour
        if times is not None:
            times[i] = time.perf_counter() - t0
    return RunTrace(inst.name, _label(construction, local_search), "ILS", seed, eov,
                    wall_times=times, run_index=run_index, best_tour=incumbent)


class OptimumError(ValueError):
    """The supplied optimum is worse than a value already observed."""


def relative_gap_series(trace: RunTrace, optimum_value: float) -> GapSeries:
    """Relative gap ``(x* - Z_n) / |x*|`` of the best EOV, for n = 1..len(trace).

    ``optimum_value`` uses the EOV sign convention (negated optimal cost).
    """
    if optimum_value == 0:
        raise ValueError("optimum_value must be non-zero")
    top = int(trace.best[-1])
    if top > optimum_value:
        raise OptimumError(
            f"observed best EOV {top} exceeds the supplied optimum {optimum_value}; "
            "the optimum is wrong or has the wrong sign"
        )
    gap = (optimum_value - trace.best.astype(np.float64)) / abs(optimum_value)
    return GapSeries(np.arange(1, len(trace) + 1), gap, "RelativeGap", x_star=float(optimum_value))


def write_trace(trace: RunTrace, csv_path, optimum: float | None = None) -> None:
    """Write ``<name>.csv`` plus a ``<name>.json`` sidecar next to it."""
    csv_path = Path(csv_path)
    csv_path.write_text(trace.to_csv())
    csv_path.with_suffix(".json").write_text(json.dumps(trace.sidecar(optimum), sort_keys=True) + "\n")
