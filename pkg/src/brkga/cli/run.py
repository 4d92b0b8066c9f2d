"""Experiment harness: run a configuration and write its reports."""

from __future__ import annotations

import logging
from pathlib import Path

from ..decoders import decoder_for
from ..mo import format_pareto_front
from ..solver import BRKGA, MpBRKGA, RunTrace
from .io import RunConfig, parse_instance

log = logging.getLogger("brkga")

EXIT_OK, EXIT_USAGE, EXIT_IO = 0, 1, 2

TRACE_FILE = "trace.csv"
BEST_FILE = "best.txt"
PARETO_FILE = "pareto.tsv"
SWEEP_FILE = "sweep.csv"


def make_solver(run: RunConfig) -> BRKGA:
    return BRKGA(
        **run.params,
        schedule=run.schedule,
        max_generations=run.max_generations,
        max_stall=run.max_stall,
        time_limit=run.wall_clock_seconds,
        n_jobs=run.threads,
    )


def solve(run: RunConfig) -> tuple:
    """Run the single-objective search; return ``(best, trace, status)``."""
    instance = parse_instance(run.instance, run.problem)
    solver = make_solver(run).fit(decoder_for(instance))
    log.info("best %.9g after %d generations", solver.best_fitness_, solver.n_generations_)
    return solver.best_, solver.trace_, EXIT_OK


def solve_pareto(run: RunConfig) -> MpBRKGA:
    instance = parse_instance(run.instance, run.problem)
    if run.max_generations is None:
        raise ValueError("pareto runs need max_generations")
    params = {k: v for k, v in run.params.items() if k in MpBRKGA().get_params()}
    solver = MpBRKGA(**params, **run.pareto, max_generations=run.max_generations, n_jobs=run.threads)
    solver.fit(decoder_for(instance))
    log.info("archive holds %d points after %d generations", len(solver.archive_), solver.n_generations_)
    return solver


def _format_solution(solution) -> str:
    return " ".join(str(int(i)) for i in solution)


def write_report(trace: RunTrace, best, out_dir, archive=None) -> list:
    """Write ``trace.csv``, ``best.txt`` and, for Pareto runs, ``pareto.tsv``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    path = out_dir / TRACE_FILE
    path.write_text(trace.to_csv(), encoding="utf-8", newline="\n")
    written.append(path)
    path = out_dir / BEST_FILE
    fitness = "\t".join(f"{v:.9g}" for v in best.fitness)
    path.write_text(f"{fitness}\n{_format_solution(best.solution)}\n", encoding="utf-8", newline="\n")
    written.append(path)
    if archive is not None:
        path = out_dir / PARETO_FILE
        path.write_text(format_pareto_front(archive), encoding="utf-8", newline="\n")
        written.append(path)
    return written


def write_sweep(rows: list, keys: list, out_dir) -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    lines = [",".join(keys + ["best"])]
    for values, best in rows:
        lines.append(",".join([str(values[k]) for k in keys] + [f"{best:.9g}"]))
    path = out_dir / SWEEP_FILE
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")
    return path
