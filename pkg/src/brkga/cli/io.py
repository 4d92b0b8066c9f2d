"""Plain-text instance files and run configuration files.

Instance formats (whitespace separated, ``#`` starts a comment line)::

    TSP       n / MATRIX / n rows of n distances
              n / COORDS / n rows "x y"   (Euclidean, rounded half-up)
    KNAPSACK  "n capacity" / n rows "weight value [value ...]"
    SMTT      n / n rows "processing_time due_date"

Run configurations are ``key = value`` files with optional ``[section]``
headers; keys and enumeration values are case-insensitive and sections only
group keys.
"""

from __future__ import annotations

import configparser
import itertools
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from ..control import ScheduleBounds
from ..core import InvalidArgumentError
from ..decoders import KnapsackInstance, SmttInstance, TspInstance

PROBLEM_KINDS = ("tsp", "knapsack", "smtt")


class ParseError(ValueError):
    def __init__(self, message: str, path=None, lineno: Optional[int] = None):
        where = f"{path}:{lineno}: " if lineno is not None else (f"{path}: " if path else "")
        super().__init__(where + message)
        self.lineno = lineno


class ConfigError(ValueError):
    pass


def _content_lines(text: str):
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if line and not line.startswith("#"):
            yield lineno, line.split()


def _numbers(tokens, lineno, path, count=None, kind=float):
    if count is not None and len(tokens) != count:
        raise ParseError(f"expected {count} values, found {len(tokens)}", path, lineno)
    try:
        return [kind(t) for t in tokens]
    except ValueError:
        raise ParseError(f"malformed number in {' '.join(tokens)!r}", path, lineno) from None


def _rows(lines, n, path, last_lineno, width=None, min_width=None):
    rows = []
    for lineno, tokens in lines:
        if len(rows) == n:
            raise ParseError(f"more than the declared {n} rows", path, lineno)
        if min_width is not None and len(tokens) < min_width:
            raise ParseError(f"expected at least {min_width} values, found {len(tokens)}", path, lineno)
        rows.append((lineno, _numbers(tokens, lineno, path, width)))
        last_lineno = lineno
    if len(rows) != n:
        raise ParseError(f"expected {n} rows, found {len(rows)}", path, last_lineno)
    return rows


def parse_instance_text(text: str, kind: str, path=None):
    kind = kind.strip().lower()
    if kind not in PROBLEM_KINDS:
        raise ConfigError(f"unknown problem kind {kind!r}; expected one of {', '.join(PROBLEM_KINDS)}")
    lines = iter(list(_content_lines(text)))
    try:
        head_no, head = next(lines)
    except StopIteration:
        raise ParseError("empty instance file", path, 1) from None

    if kind == "tsp":
        (n,) = _numbers(head, head_no, path, 1, int)
        try:
            mode_no, mode = next(lines)
        except StopIteration:
            raise ParseError("missing MATRIX or COORDS line", path, head_no) from None
        mode_name = " ".join(mode).upper()
        if mode_name == "MATRIX":
            rows = _rows(lines, n, path, mode_no, width=n)
            try:
                return TspInstance(np.array([r for _, r in rows]))
            except InvalidArgumentError as exc:
                raise ParseError(str(exc), path) from None
        if mode_name == "COORDS":
            rows = _rows(lines, n, path, mode_no, width=2)
            return TspInstance.from_coords(np.array([r for _, r in rows]))
        raise ParseError(f"expected MATRIX or COORDS, found {mode_name!r}", path, mode_no)

    if kind == "knapsack":
        n, cap = _numbers(head, head_no, path, 2, int)
        rows = _rows(lines, n, path, head_no, min_width=2)
        for lineno, r in rows:
            if any(v != int(v) for v in r):
                raise ParseError("weights and values must be integers", path, lineno)
        widths = {len(r) for _, r in rows}
        if len(widths) > 1:
            raise ParseError("all item rows need the same number of values", path, rows[-1][0])
        data = np.array([r for _, r in rows], dtype=np.int64).reshape(n, -1)
        try:
            return KnapsackInstance(data[:, 0], data[:, 1:].T, cap)
        except InvalidArgumentError as exc:
            raise ParseError(str(exc), path) from None

    (n,) = _numbers(head, head_no, path, 1, int)
    rows = _rows(lines, n, path, head_no, width=2)
    data = np.array([r for _, r in rows]).reshape(n, 2)
    try:
        return SmttInstance(data[:, 0], data[:, 1])
    except InvalidArgumentError as exc:
        raise ParseError(str(exc), path) from None


def parse_instance(path, kind: str):
    """Read an instance file of the given problem kind."""
    path = Path(path)
    return parse_instance_text(path.read_text(encoding="utf-8"), kind, path)


# ---------------------------------------------------------------------------
# Run configuration

# Estimator parameters settable from a config file, with their value types.
ESTIMATOR_KEYS = {
    "population_size": int,
    "elite_size": int,
    "mutant_size": int,
    "rho": float,
    "pi_t": int,
    "pi_e": int,
    "bias_kind": str,
    "second_parent_pool": str,
    "num_islands": int,
    "migration_interval": int,
    "migration_count": int,
    "stall_shake": int,
    "stall_reset": int,
    "shake_intensity": float,
    "ipr_interval": int,
    "ipr_min_distance": float,
    "ipr_variant": str,
    "ipr_block_size": int,
    "ipr_depth": float,
    "self_adaptive": bool,
    "elite_min_distance": float,
    "q_learning": bool,
    "seed": int,
}
PARETO_KEYS = {"pi_count": int, "pool_mix_interval": int, "archive_max_size": int}
SCHEDULE_KEYS = {
    "schedule_p_max": int,
    "schedule_p_min": int,
    "schedule_pe_min": int,
    "schedule_pe_max": int,
    "schedule_pm_max": int,
    "schedule_pm_min": int,
    "schedule_alpha_max": float,
    "schedule_alpha_min": float,
    "schedule_g_max": int,
}
RUN_KEYS = {
    "problem": str,
    "instance": str,
    "max_generations": int,
    "max_stall": int,
    "wall_clock_seconds": float,
    "out_dir": str,
    "threads": int,
}
ALL_KEYS = {**ESTIMATOR_KEYS, **PARETO_KEYS, **SCHEDULE_KEYS, **RUN_KEYS}


def convert(key: str, raw: str):
    kind = ALL_KEYS[key]
    text = raw.strip()
    if kind is bool:
        low = text.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"{key}: expected a boolean, got {raw!r}")
    if kind is str:
        return text
    try:
        return kind(text)
    except ValueError:
        raise ConfigError(f"{key}: expected {kind.__name__}, got {raw!r}") from None


@dataclass
class RunConfig:
    """Everything one CLI run needs."""

    problem: str
    instance: Path
    params: dict = field(default_factory=dict)
    max_generations: Optional[int] = None
    max_stall: Optional[int] = None
    wall_clock_seconds: Optional[float] = None
    schedule: Optional[ScheduleBounds] = None
    pareto: dict = field(default_factory=dict)
    out_dir: Path = Path(".")
    threads: Optional[int] = None

    def __post_init__(self):
        self.problem = self.problem.strip().lower()
        if self.problem not in PROBLEM_KINDS:
            raise ConfigError(f"unknown problem {self.problem!r}")
        if self.max_generations is None and self.max_stall is None and self.wall_clock_seconds is None:
            raise ConfigError("set at least one stopping rule (max_generations, max_stall, wall_clock_seconds)")

    def with_overrides(self, values: dict) -> "RunConfig":
        return build_run_config({**self.as_flat(), **values}, Path("."))

    def as_flat(self) -> dict:
        flat = dict(self.params)
        flat.update(self.pareto)
        flat.update(problem=self.problem, instance=str(self.instance), out_dir=str(self.out_dir))
        for key in ("max_generations", "max_stall", "wall_clock_seconds", "threads"):
            if getattr(self, key) is not None:
                flat[key] = getattr(self, key)
        if self.schedule is not None:
            for key in SCHEDULE_KEYS:
                flat[key] = getattr(self.schedule, key[len("schedule_"):])
        return flat


def read_key_values(text: str, path=None) -> dict:
    """Flatten a sectioned ``key = value`` file into a lower-case dict."""
    parser = configparser.ConfigParser(interpolation=None, comment_prefixes=("#", ";"))
    body = text if text.lstrip().startswith("[") else "[run]\n" + text
    try:
        parser.read_string(body, source=str(path or "<config>"))
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    flat = {}
    for section in parser.sections():
        for key, value in parser.items(section):
            if key in flat:
                raise ConfigError(f"key {key!r} appears in more than one section")
            flat[key] = value
    return flat


def build_run_config(values: dict, base_dir: Path) -> RunConfig:
    unknown = sorted(set(values) - set(ALL_KEYS))
    if unknown:
        raise ConfigError(f"unknown configuration keys: {', '.join(unknown)}")
    typed = {k: v if not isinstance(v, str) else convert(k, v) for k, v in values.items()}
    if "problem" not in typed or "instance" not in typed:
        raise ConfigError("configuration needs 'problem' and 'instance'")
    schedule = None
    sched = {k[len("schedule_"):]: v for k, v in typed.items() if k in SCHEDULE_KEYS}
    if sched:
        try:
            schedule = ScheduleBounds(**sched)
        except TypeError as exc:
            raise ConfigError(f"incomplete schedule: {exc}") from None
    instance = Path(typed["instance"])
    if not instance.is_absolute():
        instance = base_dir / instance
    out_dir = Path(typed.get("out_dir", "."))
    if not out_dir.is_absolute():
        out_dir = base_dir / out_dir
    return RunConfig(
        problem=typed["problem"],
        instance=instance,
        params={k: v for k, v in typed.items() if k in ESTIMATOR_KEYS},
        max_generations=typed.get("max_generations"),
        max_stall=typed.get("max_stall"),
        wall_clock_seconds=typed.get("wall_clock_seconds"),
        schedule=schedule,
        pareto={k: v for k, v in typed.items() if k in PARETO_KEYS},
        out_dir=out_dir,
        threads=typed.get("threads"),
    )


def load_run_config(path) -> RunConfig:
    path = Path(path)
    return build_run_config(read_key_values(path.read_text(encoding="utf-8"), path), path.parent)


def load_grid(path) -> list:
    """Cartesian product of ``key = v1, v2, ...`` lines, as override dicts."""
    path = Path(path)
    axes = read_key_values(path.read_text(encoding="utf-8"), path)
    unknown = sorted(set(axes) - set(ALL_KEYS))
    if unknown:
        raise ConfigError(f"unknown grid keys: {', '.join(unknown)}")
    keys = list(axes)
    levels = [[convert(k, v) for v in axes[k].split(",") if v.strip()] for k in keys]
    return [dict(zip(keys, combo)) for combo in itertools.product(*levels)]
