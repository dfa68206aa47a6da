"""Indexed value series shared by the trace and analysis code."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

MEANINGS = ("EIR", "ERG", "RelativeGap", "GoodSolutionRatio", "Accelerated")


@dataclass(frozen=True, eq=False)
class GapSeries:
    """Values indexed by a strictly increasing positive abscissa ``n``.

    ``n`` is an iteration count for EIR/ERG/gap series, a relative gap for
    good-solution ratios, and a budget for accelerated series.
    """

    n: np.ndarray
    value: np.ndarray
    meaning: str = "ERG"
    stderr: np.ndarray | None = None
    x_ref: float | None = None
    x_star: float | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        n = np.asarray(self.n, dtype=np.float64)
        value = np.asarray(self.value, dtype=np.float64)
        if n.ndim != 1 or n.shape != value.shape:
            raise ValueError("n and value must be 1-D arrays of equal length")
        if n.size and (np.any(n <= 0) or np.any(np.diff(n) <= 0)):
            raise ValueError("n must be positive and strictly increasing")
        if self.meaning not in MEANINGS:
            raise ValueError(f"unknown meaning {self.meaning!r}")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "value", value)
        if self.stderr is not None:
            se = np.asarray(self.stderr, dtype=np.float64)
            if se.shape != n.shape:
                raise ValueError("stderr must match n")
            object.__setattr__(self, "stderr", se)

    def __len__(self) -> int:
        return int(self.n.size)

    def at(self, n_query: float) -> float:
        """Value at ``n_query`` by linear interpolation in (log n, log value)."""
        return float(loglog_interp(self, np.array([n_query]))[0])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "value", "stderr"])
        se = self.stderr if self.stderr is not None else np.full(len(self), np.nan)
        for a, b, c in zip(self.n, self.value, se):
            w.writerow([fmt_number(a), fmt_number(b), fmt_number(c)])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, meaning: str = "ERG", **kwargs) -> "GapSeries":
        rows = list(csv.DictReader(io.StringIO(text)))
        n = np.array([float(r["n"]) for r in rows])
        v = np.array([float(r["value"]) for r in rows])
        se = np.array([float(r.get("stderr") or "nan") for r in rows])
        return cls(n, v, meaning, None if np.all(np.isnan(se)) else se, **kwargs)


def fmt_number(x: float) -> str:
    """Shortest round-trip text for ``x``; integral values print without a decimal point."""
    x = float(x)
    if np.isnan(x):
        return "nan"
    if x.is_integer() and abs(x) < 2**53:
        return str(int(x))
    return repr(x)


def loglog_interp(series: GapSeries, n_query: np.ndarray) -> np.ndarray:
    """Interpolate linearly in (log n, log value); queries must lie inside the series range."""
    q = np.asarray(n_query, dtype=np.float64)
    lo, hi = series.n[0], series.n[-1]
    if np.any(q < lo * (1 - 1e-12)) or np.any(q > hi * (1 + 1e-12)):
        raise ValueError(f"query outside series range [{lo:g}, {hi:g}]")
    if np.any(series.value <= 0):
        raise ValueError("log-log interpolation needs positive values")
    q = np.clip(q, lo, hi)
    return np.exp(np.interp(np.log(q), np.log(series.n), np.log(series.value)))
