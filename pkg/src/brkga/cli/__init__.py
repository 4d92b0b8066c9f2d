"""Command line entry point.

::

    brkga solve  run.cfg [--seed S] [--out-dir DIR] [--quiet]
    brkga sweep  run.cfg --grid grid.cfg [--seed S] [--out-dir DIR]
    brkga pareto run.cfg [--seed S] [--out-dir DIR]

Exit status: 0 success, 1 usage or configuration error, 2 I/O error. The
``BRKGA_THREADS`` environment variable sets the default decode thread count.
"""

from __future__ import annotations

import argparse
import logging
import sys

from ..core import DecodeError, InvalidArgumentError, rank_key
from .io import ConfigError, ParseError, RunConfig, load_grid, load_run_config, parse_instance
from .run import EXIT_IO, EXIT_OK, EXIT_USAGE, solve, solve_pareto, write_report, write_sweep

__all__ = ["main", "parse_instance", "solve", "write_report", "RunConfig"]

log = logging.getLogger("brkga")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="brkga", description="Biased random-key genetic algorithm experiments")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, help_text in (
        ("solve", "run one single-objective search"),
        ("sweep", "run a cartesian parameter grid"),
        ("pareto", "run the multi-population Pareto search"),
    ):
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("config", help="key = value configuration file")
        cmd.add_argument("--seed", type=int, help="override the configured seed")
        cmd.add_argument("--out-dir", help="directory for report files")
        cmd.add_argument("--quiet", action="store_true", help="only report errors")
        if name == "sweep":
            cmd.add_argument("--grid", required=True, help="file of 'key = v1, v2, ...' lines")
    return parser


def _load(args) -> RunConfig:
    run = load_run_config(args.config)
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.out_dir is not None:
        overrides["out_dir"] = args.out_dir
    return run.with_overrides(overrides) if overrides else run


def _run(args) -> int:
    run = _load(args)
    if args.command == "solve":
        best, trace, status = solve(run)
        write_report(trace, best, run.out_dir)
        if not args.quiet:
            print(f"best {best.fitness[0]:.9g}")
        return status
    if args.command == "pareto":
        solver = solve_pareto(run)
        senses = solver.config_.base.senses
        best = min(solver.archive_.entries, key=rank_key(senses, 0))
        write_report(solver.trace_, best, run.out_dir, archive=solver.archive_)
        if not args.quiet:
            print(f"pareto points {len(solver.archive_)}")
        return EXIT_OK
    grid = load_grid(args.grid)
    keys = list(grid[0]) if grid else []
    rows = []
    for cell in grid:
        best, _, _ = solve(run.with_overrides(cell))
        rows.append((cell, best.fitness[0]))
        if not args.quiet:
            print(" ".join(f"{k}={cell[k]}" for k in keys) + f" best={best.fitness[0]:.9g}")
    write_sweep(rows, keys, run.out_dir)
    return EXIT_OK


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO, format="%(message)s")
    try:
        return _run(args)
    except (ConfigError, ParseError, InvalidArgumentError, DecodeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
