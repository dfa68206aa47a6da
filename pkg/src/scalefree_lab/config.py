"""Experiment configuration: one JSON document, validated field by field.

Example::

    {
      "mode": "tsp_rms",
      "seed": 1,
      "instance": {"random": {"n": 50, "coord_bound": 100000, "seed": 0}},
      "algorithm": "NN+3opt",
      "iterations": 1000,
      "runs": 10
    }

A manifest written by :func:`scalefree_lab.experiment.run_experiment` is
also accepted; its ``config`` member is used.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

from .evt import TailModel
from .heuristics import LKParams, parse_algorithm

MODES = ("tsp_rms", "tsp_ils", "synthetic_evt", "analysis_only")


class ConfigError(ValueError):
    """Invalid configuration; ``errors`` lists ``(field path, message)`` pairs."""

    def __init__(self, errors: list[tuple[str, str]]):
        self.errors = errors
        super().__init__("; ".join(f"{p}: {m}" for p, m in errors))


@dataclass(frozen=True)
class RandomInstanceSpec:
    n: int
    coord_bound: int = 100_000
    seed: int = 0


@dataclass(frozen=True)
class TsplibSpec:
    path: str
    known_optimum: int | None = None


@dataclass(frozen=True)
class AnalysisOptions:
    n_min: float = 16
    n_max: float = 65536
    grid: tuple[float, ...] | None = None
    reps: int = 100_000
    x: float | None = None
    window: tuple[float, float] | None = None
    eps_min: float = 1e-4
    eps_max: float = 1e-1
    eps_points: int = 25
    samples: int = 0
    ratio_c: int = 2


@dataclass(frozen=True)
class ExperimentConfig:
    mode: str
    seed: int
    output: str = "out"
    random_instance: RandomInstanceSpec | None = None
    tsplib: TsplibSpec | None = None
    model: dict | None = None
    algorithm: str | None = None
    iterations: int | None = None
    runs: int = 1
    k: int = 3
    lk: LKParams = field(default_factory=LKParams)
    optimum: int | str | None = None
    traces_dir: str | None = None
    analysis: AnalysisOptions = field(default_factory=AnalysisOptions)
    base_dir: str = "."

    def to_dict(self) -> dict:
        """Canonical JSON form; feeding it back to :func:`validate_config` gives an equal config."""
        d: dict[str, Any] = {"mode": self.mode, "seed": self.seed, "output": self.output}
        if self.random_instance is not None:
            d["instance"] = {"random": asdict(self.random_instance)}
        if self.tsplib is not None:
            d["instance"] = {"tsplib": self.tsplib.path}
            if self.tsplib.known_optimum is not None:
                d["instance"]["known_optimum"] = self.tsplib.known_optimum
        if self.model is not None:
            d["model"] = self.model
        if self.mode in ("tsp_rms", "tsp_ils"):
            d.update(algorithm=self.algorithm, iterations=self.iterations, runs=self.runs, k=self.k,
                     lk={"max_depth": self.lk.max_depth, "breadth": self.lk.breadth,
                         "neighbors": self.lk.neighbors})
        if self.optimum is not None:
            d["optimum"] = self.optimum
        if self.traces_dir is not None:
            d["traces_dir"] = self.traces_dir
        a = asdict(self.analysis)
        for key in ("grid", "window"):
            if a[key] is not None:
                a[key] = list(a[key])
        d["analysis"] = a
        return d


# ------------------------------------------------------------- validation


def _is_int(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def _is_num(v) -> bool:
    return (isinstance(v, (int, float)) and not isinstance(v, bool)) and math.isfinite(v)


class _Checker:
    def __init__(self) -> None:
        self.errors: list[tuple[str, str]] = []

    def err(self, path: str, msg: str) -> None:
        self.errors.append((path, msg))

    def int_field(self, d: dict, key: str, path: str, default=None, minimum: int | None = None,
                  required: bool = False):
        if key not in d or d[key] is None:
            if required:
                self.err(path, "is required")
            return default
        v = d[key]
        if not _is_int(v):
            self.err(path, f"must be an integer, got {v!r}")
            return default
        if minimum is not None and v < minimum:
            self.err(path, f"must be >= {minimum}, got {v}")
            return default
        return v

    def num_field(self, d: dict, key: str, path: str, default=None, positive: bool = False):
        if key not in d or d[key] is None:
            return default
        v = d[key]
        if not _is_num(v):
            self.err(path, f"must be a finite number, got {v!r}")
            return default
        if positive and v <= 0:
            self.err(path, f"must be positive, got {v}")
            return default
        return float(v)


_TOP_KEYS = {"mode", "seed", "output", "instance", "model", "algorithm", "iterations", "runs", "k",
             "lk", "optimum", "traces_dir", "analysis"}
_ANALYSIS_KEYS = {"n_min", "n_max", "grid", "reps", "x", "window", "eps_min", "eps_max",
                  "eps_points", "samples", "ratio_c"}


def _parse_instance(c: _Checker, raw) -> tuple[RandomInstanceSpec | None, TsplibSpec | None]:
    if not isinstance(raw, dict):
        c.err("instance", "must be an object with 'random' or 'tsplib'")
        return None, None
    has_random, has_tsplib = "random" in raw, "tsplib" in raw
    if has_random and has_tsplib:
        c.err("instance", "ambiguous: give either 'random' parameters or a 'tsplib' path, not both")
        return None, None
    if has_random:
        r = raw["random"]
        if not isinstance(r, dict):
            c.err("instance.random", "must be an object")
            return None, None
        for extra in set(r) - {"n", "coord_bound", "seed"}:
            c.err(f"instance.random.{extra}", "unknown field")
        n = c.int_field(r, "n", "instance.random.n", minimum=3, required=True)
        cb = c.int_field(r, "coord_bound", "instance.random.coord_bound", 100_000, minimum=1)
        s = c.int_field(r, "seed", "instance.random.seed", 0, minimum=0)
        return (RandomInstanceSpec(n, cb, s) if n is not None else None), None
    if has_tsplib:
        p = raw["tsplib"]
        if not isinstance(p, str) or not p:
            c.err("instance.tsplib", "must be a file path")
            return None, None
        ko = c.int_field(raw, "known_optimum", "instance.known_optimum", minimum=1)
        return None, TsplibSpec(p, ko)
    c.err("instance", "must contain 'random' or 'tsplib'")
    return None, None


def _parse_analysis(c: _Checker, raw) -> AnalysisOptions:
    if raw is None:
        return AnalysisOptions()
    if not isinstance(raw, dict):
        c.err("analysis", "must be an object")
        return AnalysisOptions()
    for extra in set(raw) - _ANALYSIS_KEYS:
        c.err(f"analysis.{extra}", "unknown field")
    base = AnalysisOptions()
    n_min = c.num_field(raw, "n_min", "analysis.n_min", base.n_min, positive=True)
    n_max = c.num_field(raw, "n_max", "analysis.n_max", base.n_max, positive=True)
    if n_min is not None and n_max is not None and (n_min < 1 or n_max < n_min):
        c.err("analysis.n_max", "need 1 <= n_min <= n_max")
    grid = None
    if raw.get("grid") is not None:
        g = raw["grid"]
        if (not isinstance(g, list) or len(g) == 0 or not all(_is_num(v) and v >= 1 for v in g)
                or any(b <= a for a, b in zip(g, g[1:]))):
            c.err("analysis.grid", "must be a strictly increasing list of numbers >= 1")
        else:
            grid = tuple(float(v) for v in g)
    window = None
    if raw.get("window") is not None:
        w = raw["window"]
        if not (isinstance(w, list) and len(w) == 2 and all(_is_num(v) and v > 0 for v in w) and w[0] <= w[1]):
            c.err("analysis.window", "must be [n_lo, n_hi] with 0 < n_lo <= n_hi")
        else:
            window = (float(w[0]), float(w[1]))
    eps_min = c.num_field(raw, "eps_min", "analysis.eps_min", base.eps_min, positive=True)
    eps_max = c.num_field(raw, "eps_max", "analysis.eps_max", base.eps_max, positive=True)
    if eps_min is not None and eps_max is not None and not 0 < eps_min < eps_max < 1:
        c.err("analysis.eps_max", "need 0 < eps_min < eps_max < 1")
    return AnalysisOptions(
        n_min=n_min, n_max=n_max, grid=grid,
        reps=c.int_field(raw, "reps", "analysis.reps", base.reps, minimum=1000),
        x=c.num_field(raw, "x", "analysis.x"),
        window=window, eps_min=eps_min, eps_max=eps_max,
        eps_points=c.int_field(raw, "eps_points", "analysis.eps_points", base.eps_points, minimum=2),
        samples=c.int_field(raw, "samples", "analysis.samples", base.samples, minimum=0),
        ratio_c=c.int_field(raw, "ratio_c", "analysis.ratio_c", base.ratio_c, minimum=2),
    )


def validate_config(text: str, base_dir: str | Path = ".") -> ExperimentConfig:
    """Parse and check a JSON config; raise :class:`ConfigError` listing every bad field.

    Relative paths inside the config resolve against ``base_dir``.
    """
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError([("<root>", f"invalid JSON: {exc}")]) from None
    if isinstance(raw, dict) and "config" in raw and "version" in raw:
        raw = raw["config"]
    if not isinstance(raw, dict):
        raise ConfigError([("<root>", "config must be a JSON object")])
    c = _Checker()
    for extra in sorted(set(raw) - _TOP_KEYS):
        c.err(extra, "unknown field")

    mode = raw.get("mode")
    if mode not in MODES:
        c.err("mode", f"must be one of {list(MODES)}, got {mode!r}")
    seed = c.int_field(raw, "seed", "seed", minimum=0, required=True)
    output = raw.get("output", "out")
    if not isinstance(output, str) or not output:
        c.err("output", "must be a directory path")

    random_inst = tsplib = None
    model = None
    algorithm = None
    iterations = None
    runs = c.int_field(raw, "runs", "runs", 1, minimum=1)
    k = c.int_field(raw, "k", "k", 3, minimum=1)
    lk = LKParams()
    optimum = raw.get("optimum")
    traces_dir = raw.get("traces_dir")

    if mode in ("tsp_rms", "tsp_ils"):
        random_inst, tsplib = _parse_instance(c, raw.get("instance"))
        algorithm = raw.get("algorithm")
        if not isinstance(algorithm, str):
            c.err("algorithm", "is required (e.g. 'NN+3opt')")
        else:
            try:
                parse_algorithm(algorithm)
            except ValueError as exc:
                c.err("algorithm", str(exc))
        iterations = c.int_field(raw, "iterations", "iterations", minimum=1, required=True)
        if mode == "tsp_ils" and iterations is not None and random_inst is not None and random_inst.n < 8:
            c.err("instance.random.n", "ILS with a double-bridge kick needs n >= 8")
        lk_raw = raw.get("lk", {})
        if not isinstance(lk_raw, dict):
            c.err("lk", "must be an object")
        else:
            for extra in set(lk_raw) - {"max_depth", "breadth", "neighbors"}:
                c.err(f"lk.{extra}", "unknown field")
            try:
                lk = LKParams(**{kk: vv for kk, vv in lk_raw.items() if kk in ("max_depth", "breadth", "neighbors")})
            except (TypeError, ValueError) as exc:
                c.err("lk", str(exc))
        if optimum is not None and not (optimum == "best_found" or (_is_int(optimum) and optimum > 0)):
            c.err("optimum", "must be a positive tour cost or 'best_found'")
        if optimum is None and tsplib is not None and tsplib.known_optimum is None:
            c.err("optimum", "missing known_optimum for gap analysis; set instance.known_optimum, "
                             "optimum, or optimum='best_found'")
    elif mode == "synthetic_evt":
        spec = raw.get("model")
        if not isinstance(spec, dict):
            c.err("model", "is required: {kind, xi | alpha, endpoint}")
        else:
            try:
                model = TailModel.from_spec(spec).to_spec()
            except (KeyError, TypeError, ValueError) as exc:
                c.err("model", f"invalid model: {exc}")
    elif mode == "analysis_only":
        if not isinstance(traces_dir, str) or not traces_dir:
            c.err("traces_dir", "is required: directory of trace CSVs with JSON sidecars")
        if optimum is not None and not (optimum == "best_found" or (_is_int(optimum) and optimum > 0)):
            c.err("optimum", "must be a positive tour cost or 'best_found'")

    analysis = _parse_analysis(c, raw.get("analysis"))
    if model is not None and analysis.x is not None:
        m = TailModel.from_spec(model)
        if not analysis.x < m.endpoint:
            c.err("analysis.x", f"must lie below the model endpoint {m.endpoint}")

    if c.errors:
        raise ConfigError(c.errors)
    return ExperimentConfig(
        mode=mode, seed=seed, output=output, random_instance=random_inst, tsplib=tsplib,
        model=model, algorithm=algorithm, iterations=iterations, runs=runs, k=k, lk=lk,
        optimum=optimum, traces_dir=traces_dir, analysis=analysis, base_dir=str(base_dir),
    )


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError([("<file>", f"cannot read {path}: {exc}")]) from None
    return validate_config(text, base_dir=path.parent)
