"""Command-line entry point ``scalefree-lab``.

Exit codes: 0 success, 2 configuration error, 3 runtime error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from . import __version__
from .config import ConfigError, load_config

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="scalefree-lab", description="Best-of-n convergence experiments.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run an experiment and write its output bundle")
    run.add_argument("--config", required=True, help="path to the JSON config")
    run.add_argument("--out", help="output directory (overrides the config's 'output')")
    run.add_argument("--jobs", type=int, default=1, help="worker processes for independent runs")
    val = sub.add_parser("validate", help="check a config and print its canonical form")
    val.add_argument("--config", required=True, help="path to the JSON config")
    return p


def _report_config_error(exc: ConfigError) -> None:
    for path, msg in exc.errors:
        print(f"config error: {path}: {msg}", file=sys.stderr)


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors, which matches the config-error code
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        _report_config_error(exc)
        return EXIT_CONFIG

    if args.command == "validate":
        print(json.dumps(cfg.to_dict(), sort_keys=True, indent=2))
        return EXIT_OK

    if args.jobs < 1:
        print("config error: --jobs: must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    from .experiment import run_experiment

    try:
        out = run_experiment(cfg, args.out, args.jobs)
    except ConfigError as exc:
        _report_config_error(exc)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - report any failure as a runtime error
        logging.getLogger(__name__).debug("run failed", exc_info=True)
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    print(out)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
