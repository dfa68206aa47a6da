"""Run a validated :class:`~scalefree_lab.config.ExperimentConfig` into an output bundle.

Every data file is a pure function of the config: streams are keyed by
``(seed, run_index, iteration)`` and results are gathered in run order,
so the worker count never changes the bytes written. Only
``manifest.json`` carries a timestamp.
"""

from __future__ import annotations

import datetime as _dt
import hashlib
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (
    default_window,
    eir_series,
    erg_from_traces,
    erg_series,
    fit_power_law,
    geometric_grid,
    good_solution_ratio,
    half_life_empirical,
    scale_free_ratio_check,
    table_csv,
)
from .config import ConfigError, ExperimentConfig
from .evt import TailModel
from .heuristics import parse_algorithm
from .multistart import RunTrace, run_ils, run_rms, write_trace
from .rng import substream
from .series import GapSeries
from .tsp_core import HELD_KARP_LIMIT, TspInstance, generate_random_instance, held_karp_optimum, parse_tsplib

log = logging.getLogger(__name__)


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _fit_report(series: GapSeries, window) -> dict:
    """Fit over the positive prefix of ``series``; failures become an ``error`` entry."""
    pos = series.value > 0
    stop = int(np.argmin(pos)) if not pos.all() else pos.size
    head = GapSeries(series.n[:stop], series.value[:stop], series.meaning,
                     x_ref=series.x_ref, x_star=series.x_star)
    try:
        if stop < 3:
            raise ValueError("fewer than 3 positive values")
        return fit_power_law(head, window or default_window(head.n)).to_dict()
    except ValueError as exc:
        return {"meaning": series.meaning, "x": series.x_ref, "x_star": series.x_star,
                "window": list(window) if window else None, "error": str(exc)}


def _half_life_csv(series: GapSeries) -> str:
    pos = series.value > 0
    stop = int(np.argmin(pos)) if not pos.all() else pos.size
    if stop == 0:
        return table_csv(["n", "half_life"], [])
    head = GapSeries(series.n[:stop], series.value[:stop], series.meaning)
    return table_csv(["n", "half_life"], half_life_empirical(head))


# ----------------------------------------------------------------- TSP


def _load_instance(cfg: ExperimentConfig) -> TspInstance:
    if cfg.random_instance is not None:
        r = cfg.random_instance
        return generate_random_instance(r.n, r.coord_bound, r.seed)
    path = Path(cfg.base_dir) / cfg.tsplib.path
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError([("instance.tsplib", f"cannot read {path}: {exc}")]) from None
    return parse_tsplib(text, known_optimum=cfg.tsplib.known_optimum)


def _one_run(args) -> RunTrace:
    inst, mode, algorithm, k, lk, iterations, seed, run_index = args
    cons, ls = parse_algorithm(algorithm, k, lk)
    driver = run_rms if mode == "tsp_rms" else run_ils
    return driver(inst, cons, ls, iterations, seed, run_index=run_index)


def _resolve_optimum(cfg: ExperimentConfig, inst: TspInstance, traces: list[RunTrace]) -> tuple[int, str]:
    """Optimal tour cost and where it came from."""
    if isinstance(cfg.optimum, int):
        return cfg.optimum, "config"
    if cfg.optimum is None and inst.known_optimum is not None:
        return int(inst.known_optimum), "known_optimum"
    if cfg.optimum is None and inst.n <= HELD_KARP_LIMIT:
        return held_karp_optimum(inst), "held_karp"
    return int(-max(int(t.best[-1]) for t in traces)), "best_found"


def _run_tsp(cfg: ExperimentConfig, out: Path, jobs: int) -> list[str]:
    inst = _load_instance(cfg)
    tasks = [(inst, cfg.mode, cfg.algorithm, cfg.k, cfg.lk, cfg.iterations, cfg.seed, i)
             for i in range(cfg.runs)]
    if jobs > 1 and cfg.runs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            traces = list(pool.map(_one_run, tasks))
    else:
        traces = [_one_run(t) for t in tasks]
    cost, source = _resolve_optimum(cfg, inst, traces)
    opt_eov = -cost
    written = []
    _write(out / "instance.json", inst.to_json() + "\n")
    written.append("instance.json")
    for t in traces:
        name = f"traces/run_{t.run_index:03d}.csv"
        (out / "traces").mkdir(parents=True, exist_ok=True)
        write_trace(t, out / name, opt_eov)
        written += [name, name[:-4] + ".json"]
    gap = erg_from_traces(traces, opt_eov)
    _write(out / "gap.csv", gap.to_csv())
    fit = _fit_report(gap, cfg.analysis.window)
    fit["optimum_cost"] = cost
    fit["optimum_source"] = source
    _write(out / "fit.json", _dump(fit))
    _write(out / "half_life.csv", _half_life_csv(gap))
    return written + ["gap.csv", "fit.json", "half_life.csv"]


# ------------------------------------------------------------ synthetic


def _run_synthetic(cfg: ExperimentConfig, out: Path) -> list[str]:
    model = TailModel.from_spec(cfg.model)
    a = cfg.analysis
    grid = np.array(a.grid) if a.grid is not None else geometric_grid(a.n_min, a.n_max)
    written = []
    main: GapSeries | None = None
    if np.isfinite(model.endpoint):
        main = erg_series(model, a.x, grid, a.reps, cfg.seed)
        _write(out / "erg.csv", main.to_csv())
        written.append("erg.csv")
    if a.x is not None and a.x != 0:
        eir = eir_series(model, a.x, grid, a.reps, cfg.seed)
        _write(out / "eir.csv", eir.to_csv())
        written.append("eir.csv")
        main = main or eir
    if main is None:
        raise ConfigError([("analysis.x", "an infinite-endpoint model needs a non-zero x for the EIR")])
    fit = _fit_report(main, a.window)
    fit["model"] = model.to_spec()
    _write(out / "fit.json", _dump(fit))
    written.append("fit.json")
    if main.meaning == "ERG":
        _write(out / "half_life.csv", _half_life_csv(main))
        written.append("half_life.csv")
    if np.all(main.value > 0) and main.n[-1] >= a.ratio_c * main.n[0]:
        rows = scale_free_ratio_check(main, a.ratio_c)
        _write(out / "scale_free.csv", table_csv(["n", "ratio"], rows))
        written.append("scale_free.csv")
    if a.samples > 0 and np.isfinite(model.endpoint):
        draws = model.sample(substream(cfg.seed, 1, 0), a.samples)
        eps = np.geomspace(a.eps_min, a.eps_max, a.eps_points)
        r = good_solution_ratio(draws, model.endpoint, eps)
        rows = zip(r.n, r.value, r.meta["counts"])
        _write(out / "good_solution_ratio.csv", table_csv(["eps", "ratio", "count"], rows))
        written.append("good_solution_ratio.csv")
    return written


# -------------------------------------------------------- analysis only


def _run_analysis_only(cfg: ExperimentConfig, out: Path) -> list[str]:
    src = Path(cfg.base_dir) / cfg.traces_dir
    csvs = sorted(src.glob("*.csv"))
    if not csvs:
        raise ConfigError([("traces_dir", f"no trace CSVs in {src}")])
    traces, opts = [], []
    for p in csvs:
        side_path = p.with_suffix(".json")
        if not side_path.exists():
            raise ConfigError([("traces_dir", f"{p.name} has no JSON sidecar")])
        side = json.loads(side_path.read_text())
        traces.append(RunTrace.from_csv(p.read_text(), side))
        opts.append(side.get("optimum"))
    if isinstance(cfg.optimum, int):
        opt = -cfg.optimum
    elif cfg.optimum == "best_found":
        opt = max(int(t.best[-1]) for t in traces)
    elif all(o is not None for o in opts):
        opt = opts
    else:
        raise ConfigError([("optimum", "missing known_optimum for gap analysis: sidecars lack "
                                       "'optimum' and the config sets none")])
    gap = erg_from_traces(traces, opt)
    _write(out / "gap.csv", gap.to_csv())
    _write(out / "fit.json", _dump(_fit_report(gap, cfg.analysis.window)))
    _write(out / "half_life.csv", _half_life_csv(gap))
    return ["gap.csv", "fit.json", "half_life.csv"]


# ------------------------------------------------------------------ main


def run_experiment(cfg: ExperimentConfig, out_dir: str | Path | None = None, jobs: int = 1) -> Path:
    """Execute ``cfg`` and write the bundle; returns the output directory."""
    if jobs < 1:
        raise ValueError("jobs must be >= 1")
    out = Path(out_dir) if out_dir is not None else Path(cfg.base_dir) / cfg.output
    out.mkdir(parents=True, exist_ok=True)
    log.info("running %s into %s", cfg.mode, out)
    if cfg.mode in ("tsp_rms", "tsp_ils"):
        files = _run_tsp(cfg, out, jobs)
    elif cfg.mode == "synthetic_evt":
        files = _run_synthetic(cfg, out)
    else:
        files = _run_analysis_only(cfg, out)

    config = cfg.to_dict()
    config["output"] = str(out.resolve())
    if cfg.tsplib is not None:
        config["instance"]["tsplib"] = str((Path(cfg.base_dir) / cfg.tsplib.path).resolve())
    if cfg.traces_dir is not None:
        config["traces_dir"] = str((Path(cfg.base_dir) / cfg.traces_dir).resolve())
    manifest = {
        "config": config,
        "version": __version__,
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(),
        "files": {f: hashlib.sha256((out / f).read_bytes()).hexdigest() for f in sorted(files)},
    }
    _write(out / "manifest.json", _dump(manifest))
    return out
