"""Command-line entry point.

Exit codes: 0 success, 1 a verify check failed, 2 invalid configuration or
usage, 3 a stage raised an error (nonconvergence, missing dependency, ...).
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import __version__
from .config import ConfigError, emit_config, parse_config
from .demos import DEMOS, demo
from .pipeline import OUT_ENV, STAGES, StageError, run_pipeline

EXIT_OK, EXIT_CHECKS, EXIT_CONFIG, EXIT_STAGE = 0, 1, 2, 3


def _set_threads(n):
    if n is None:
        return
    if n < 1:
        raise ValueError("--threads must be at least 1")
    try:
        import numba
        numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))
    except ImportError:  # pragma: no cover
        pass


def _parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help=f"output directory (overrides config and ${OUT_ENV})")
    common.add_argument("--threads", type=int, help="cap on worker threads")
    common.add_argument("--seed", type=int, help="override solver.seed")
    common.add_argument("--format", choices=("csv", "json"), dest="table_format",
                        help="format for tabular artifacts")
    common.add_argument("-v", "--verbose", action="count", default=0)

    p = argparse.ArgumentParser(prog="lrseg", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"lrseg {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name in STAGES:
        s = sub.add_parser(name, parents=[common], help=f"run the {name} stage")
        s.add_argument("config")
    r = sub.add_parser("run", parents=[common], help="run several stages in order")
    r.add_argument("config")
    r.add_argument("--stages", nargs="+", choices=STAGES, default=list(STAGES))
    d = sub.add_parser("demo", parents=[common], help="emit a canned configuration")
    d.add_argument("name")
    d.add_argument("--emit", help="write the YAML here instead of stdout")
    d.add_argument("--kernel", choices=("average", "sup"), default="average")
    return p


def main(argv=None):
    args = _parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        _set_threads(args.threads)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    if args.command == "demo":
        try:
            cfg = demo(args.name, kernel=args.kernel)
        except ValueError as exc:
            print(f"error: {exc}; known demos: {', '.join(DEMOS)}", file=sys.stderr)
            return EXIT_CONFIG
        text = emit_config(cfg)
        if args.emit:
            Path(args.emit).write_text(text)
        else:
            sys.stdout.write(text)
        return EXIT_OK

    try:
        cfg = parse_config(args.config)
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    stages = args.stages if args.command == "run" else [args.command]
    try:
        manifest = run_pipeline(cfg, stages, out=args.out, seed=args.seed,
                                table_format=args.table_format)
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_STAGE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if manifest.validation_passed is False:
        print("warning: boundary data failed validation (see validation.json)",
              file=sys.stderr)
    if manifest.checks_passed is False:
        print("verify: one or more checks failed (see checks.json)", file=sys.stderr)
    return manifest.exit_code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
