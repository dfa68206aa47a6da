"""EIR/ERG series, log-log power-law fits and the diagnostics built on them.

Synthetic series come from a :class:`~scalefree_lab.evt.TailModel` with
common random numbers: replication ``r`` uses one unit exponential ``E_r``
for every grid point, so each replication's best-EOV path is monotone in n.
TSP series come from recorded :class:`~scalefree_lab.multistart.RunTrace`
objects.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy import stats

from .evt import EULER_GAMMA, TailModel, exponential_blocks, zn_from_exponentials
from .multistart import RunTrace, relative_gap_series
from .series import GapSeries, fmt_number, loglog_interp

DEFAULT_EPS_GRID = np.geomspace(1e-4, 1e-1, 25)
HALF_DECADE = 10 ** 0.5


def geometric_grid(n_min: float, n_max: float, extra: Iterable[float] = ()) -> np.ndarray:
    """Grid ``ceil(2^(k/2))`` restricted to ``[n_min, n_max]``, deduplicated.

    ``extra`` points inside the range are merged in.
    """
    if n_min < 1 or n_max < n_min:
        raise ValueError("need 1 <= n_min <= n_max")
    k_hi = int(math.ceil(2 * math.log2(n_max))) + 1
    pts = {float(math.ceil(2 ** (k / 2) - 1e-9)) for k in range(0, k_hi + 1)}
    pts.update(float(e) for e in extra)
    return np.array(sorted(p for p in pts if n_min <= p <= n_max))


# ------------------------------------------------------ synthetic series


def _check_grid(grid) -> np.ndarray:
    g = np.asarray(grid, dtype=np.float64)
    if g.ndim != 1 or g.size == 0 or np.any(g < 1) or np.any(np.diff(g) <= 0):
        raise ValueError("grid must be a non-empty, strictly increasing list of n >= 1")
    return g


def _crn_moments(model: TailModel, grid: np.ndarray, reps: int, seed: int, fn) -> tuple[np.ndarray, np.ndarray]:
    if reps < 2:
        raise ValueError("reps must be >= 2")
    s1 = np.zeros(grid.size)
    s2 = np.zeros(grid.size)
    for E in exponential_blocks(seed, reps):
        for j, n in enumerate(grid):
            v = fn(zn_from_exponentials(model, n, E))
            s1[j] += v.sum()
            s2[j] += np.square(v).sum()
    mean = s1 / reps
    var = np.maximum(s2 / reps - mean * mean, 0.0) * reps / (reps - 1)
    return mean, np.sqrt(var / reps)


def eir_series(model: TailModel, x: float, grid, reps: int, seed: int) -> GapSeries:
    """Expected improvement rate ``E[(Z_n - x)_+] / |x|`` on ``grid``."""
    if x == 0:
        raise ValueError("x must be non-zero")
    if not x < model.endpoint:
        raise ValueError(f"x={x} must lie below the endpoint {model.endpoint}")
    g = _check_grid(grid)
    mean, se = _crn_moments(model, g, reps, seed, lambda z: np.maximum(z - x, 0.0) / abs(x))
    return GapSeries(g, mean, "EIR", se, x_ref=float(x), x_star=float(model.endpoint),
                     meta={"model": model.to_spec(), "reps": reps, "seed": seed})


def erg_series(model: TailModel, x: float | None, grid, reps: int, seed: int) -> GapSeries:
    """Expected relative gap ``E[(x* - max(Z_n, x)) / |x*|]`` on ``grid``.

    ``x=None`` means no floor (x below the support).
    """
    xs = model.endpoint
    if not math.isfinite(xs):
        raise ValueError("the ERG needs a finite endpoint")
    if x is not None and not x < xs:
        raise ValueError(f"x={x} must lie below the endpoint {xs}")
    floor = -math.inf if x is None else float(x)
    g = _check_grid(grid)
    mean, se = _crn_moments(model, g, reps, seed, lambda z: (xs - np.maximum(z, floor)) / abs(xs))
    return GapSeries(g, mean, "ERG", se, x_ref=None if x is None else float(x), x_star=float(xs),
                     meta={"model": model.to_spec(), "reps": reps, "seed": seed})


# ------------------------------------------------------------ TSP traces


def erg_from_traces(traces: Sequence[RunTrace], optimum, grid=None) -> GapSeries:
    """Mean relative gap of the best EOV over several traces.

    ``optimum`` is in EOV convention (negated optimal cost), either one
    value for all traces or one per trace. ``grid`` defaults to every
    iteration of the shortest trace.
    """
    if not traces:
        raise ValueError("need at least one trace")
    opts = np.broadcast_to(np.asarray(optimum, dtype=np.float64), (len(traces),))
    shortest = min(len(t) for t in traces)
    g = np.arange(1, shortest + 1, dtype=np.float64) if grid is None else _check_grid(grid)
    if g[-1] > shortest or np.any(g != np.round(g)):
        raise ValueError(f"grid must be integers within the shortest trace (length {shortest})")
    idx = g.astype(np.int64) - 1
    gaps = np.stack([relative_gap_series(t, o).value[idx] for t, o in zip(traces, opts)])
    se = gaps.std(axis=0, ddof=1) / math.sqrt(len(traces)) if len(traces) > 1 else None
    return GapSeries(g, gaps.mean(axis=0), "RelativeGap", se,
                     x_star=float(opts[0]) if np.all(opts == opts[0]) else None,
                     meta={"traces": len(traces)})


# ------------------------------------------------------------ power laws


@dataclass(frozen=True)
class PowerLawFit:
    xi_hat: float
    log_intercept: float
    window: tuple[float, float]
    r_squared: float
    n_points: int
    meaning: str = "ERG"
    x: float | None = None
    x_star: float | None = None

    def predict(self, n):
        return np.exp(self.log_intercept) * np.power(np.asarray(n, dtype=np.float64), self.xi_hat)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["window"] = list(self.window)
        del d["n_points"]
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def default_window(n: np.ndarray) -> tuple[float, float]:
    """Top two decades of ``n`` below the largest half-decade, clipped to the data."""
    hi = n[-1] / HALF_DECADE
    return max(n[0], hi / 100.0), hi


def fit_power_law(series: GapSeries, window: tuple[float, float] | None = None) -> PowerLawFit:
    """OLS of ``log(value)`` on ``log(n)`` inside ``window``; the slope is the index estimate."""
    lo, hi = default_window(series.n) if window is None else window
    if not lo <= hi:
        raise ValueError(f"empty window ({lo}, {hi})")
    sel = (series.n >= lo * (1 - 1e-12)) & (series.n <= hi * (1 + 1e-12))
    if sel.sum() < 3:
        raise ValueError(f"window ({lo:g}, {hi:g}) holds {sel.sum()} points; need at least 3")
    v = series.value[sel]
    if np.any(v <= 0):
        raise ValueError("values inside the fit window must be positive")
    lx, ly = np.log(series.n[sel]), np.log(v)
    res = stats.linregress(lx, ly)
    resid = ly - (res.intercept + res.slope * lx)
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0 else max(0.0, 1.0 - float(np.sum(resid**2)) / ss_tot)
    return PowerLawFit(float(res.slope), float(res.intercept), (float(lo), float(hi)), min(r2, 1.0),
                       int(sel.sum()), series.meaning, series.x_ref, series.x_star)


def half_life_empirical(series: GapSeries) -> list[tuple[float, float | None]]:
    """Extra iterations needed to halve the value, for each grid point.

    The crossing of ``value(n)/2`` is interpolated linearly in
    (log n, log value). ``None`` marks points whose half value is never
    reached within the series.
    """
    v = series.value
    if np.any(v <= 0):
        raise ValueError("half-life needs a positive series")
    if np.any(np.diff(v) > 0):
        raise ValueError("half-life needs a non-increasing series")
    ln, lv = np.log(series.n), np.log(v)
    out: list[tuple[float, float | None]] = []
    for i, n in enumerate(series.n):
        target = lv[i] - math.log(2.0)
        j = int(np.searchsorted(-lv, -target, side="left"))  # first index with lv <= target
        if j >= v.size:
            out.append((float(n), None))
            continue
        if lv[j] == target or j == i:
            cross = ln[j]
        else:
            w = (lv[j - 1] - target) / (lv[j - 1] - lv[j])
            cross = ln[j - 1] + w * (ln[j] - ln[j - 1])
        out.append((float(n), float(math.exp(cross) - n)))
    return out


def scale_free_ratio_check(series: GapSeries, c: int) -> list[tuple[float, float]]:
    """``value(c n) / value(n)`` for each grid n with ``c n`` inside the series."""
    if int(c) != c or c < 2:
        raise ValueError("c must be an integer >= 2")
    ns = series.n[series.n * c <= series.n[-1] * (1 + 1e-12)]
    if ns.size == 0:
        raise ValueError(f"series does not cover any pair (n, {c}n)")
    if np.any(series.value <= 0):
        raise ValueError("ratio check needs a positive series")
    cn = loglog_interp(series, np.minimum(ns * c, series.n[-1]))
    base = loglog_interp(series, ns)
    return [(float(n), float(a / b)) for n, a, b in zip(ns, cn, base)]


# -------------------------------------------------- good-solution ratio


def good_solution_ratio(samples, x_star: float, eps_grid=None) -> GapSeries:
    """Fraction of EOVs within relative gap ``eps`` of ``x_star``, per eps.

    Returns a series indexed by eps; ``meta["counts"]`` holds the raw counts.
    """
    x = np.asarray(samples, dtype=np.float64).ravel()
    if x.size == 0:
        raise ValueError("samples must be non-empty")
    if x_star == 0 or not math.isfinite(x_star):
        raise ValueError("x_star must be finite and non-zero")
    eps = DEFAULT_EPS_GRID if eps_grid is None else np.asarray(eps_grid, dtype=np.float64)
    if np.any(eps <= 0) or np.any(eps >= 1):
        raise ValueError("eps must lie in (0, 1)")
    gap = (x_star - x) / abs(x_star)
    counts = np.searchsorted(np.sort(gap), eps, side="left")  # strict: gap < eps
    r = counts / x.size
    se = np.sqrt(r * (1 - r) / x.size)
    return GapSeries(eps, r, "GoodSolutionRatio", se, x_star=float(x_star),
                     meta={"counts": counts.astype(int).tolist(), "samples": int(x.size)})


def fit_ratio_slope(ratio: GapSeries, min_count: int = 100) -> PowerLawFit:
    """Log-log slope of ``r(eps)`` over the eps values with at least ``min_count`` hits."""
    counts = np.asarray(ratio.meta["counts"])
    ok = (counts >= min_count) & (ratio.value < 1)
    if ok.sum() < 3:
        raise ValueError(f"only {ok.sum()} eps values have >= {min_count} samples")
    eps = ratio.n[ok]
    return fit_power_law(ratio, (float(eps[0]), float(eps[-1])))


# ---------------------------------------------------------- acceleration


def acceleration_transform(series: GapSeries, schedule: str, beta: float | None = None,
                           budgets=None) -> GapSeries:
    """Re-index a series by budget ``m``: read it at ``n = m**beta`` or ``n = e**m``.

    ``budgets`` defaults to the images of the series grid (polynomial) or a
    step-0.25 grid spanning its log range (exponential).
    """
    lo, hi = series.n[0], series.n[-1]
    if schedule == "polynomial":
        if beta is None or not beta > 1:
            raise ValueError("the polynomial schedule needs beta > 1")
        m = series.n ** (1.0 / beta) if budgets is None else np.asarray(budgets, dtype=np.float64)
        n = m ** beta
    elif schedule == "exponential":
        if budgets is None:
            start = max(math.ceil(4 * math.log(lo)) / 4, 0.25)
            m = np.arange(start, math.log(hi) + 1e-12, 0.25)
        else:
            m = np.asarray(budgets, dtype=np.float64)
        n = np.exp(m)
    else:
        raise ValueError(f"unknown schedule {schedule!r}; expected 'polynomial' or 'exponential'")
    if np.any(n < lo * (1 - 1e-9)) or np.any(n > hi * (1 + 1e-9)):
        raise ValueError("budgets map outside the base series range")
    vals = loglog_interp(series, np.clip(n, lo, hi))
    return GapSeries(m, vals, "Accelerated", x_ref=series.x_ref, x_star=series.x_star,
                     meta={"schedule": schedule, "beta": beta, "base": series.meaning})


# ---------------------------------------------------------- predictions


def prop4_prediction(alpha: float, x_star: float, n) -> float | np.ndarray:
    """Large-n ERG for the LogPower model: ``(1 - gamma/(alpha log n)) / (|x*| (log n)^(1/alpha))``."""
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    if x_star == 0:
        raise ValueError("x_star must be non-zero")
    n = np.asarray(n, dtype=np.float64)
    if np.any(n < 3):
        raise ValueError("n must be >= 3")
    ln = np.log(n)
    out = (1.0 - EULER_GAMMA / (alpha * ln)) / (abs(x_star) * ln ** (1.0 / alpha))
    return float(out) if out.ndim == 0 else out


# ----------------------------------------------------------------- I/O


def table_csv(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    """CSV text with shortest round-trip numbers; ``None`` cells are left empty."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow(["" if c is None else fmt_number(c) for c in row])
    return buf.getvalue()
