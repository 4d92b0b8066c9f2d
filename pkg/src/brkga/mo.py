"""Multi-objective machinery and the multi-population Pareto BRKGA.

Fitness vectors handled here are raw objective values; every function takes
the per-objective ``senses`` and compares in minimization form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .core import (
    BrkgaConfig,
    Individual,
    InvalidArgumentError,
    Phase,
    Sense,
    init_population,
    minimized,
    stream_for,
)
from .evolve import evolve_generation


def _senses(senses, m: int) -> tuple:
    if senses is None:
        return (Sense.MINIMIZE,) * m
    senses = tuple(Sense.parse(s) for s in senses)
    if len(senses) != m:
        raise InvalidArgumentError(f"{len(senses)} senses for {m} objectives")
    return senses


def _as_min_matrix(fitnesses, senses) -> np.ndarray:
    f = np.asarray([tuple(x) for x in fitnesses], dtype=np.float64)
    if f.size == 0:
        return f.reshape(0, 0)
    if f.ndim != 2:
        raise InvalidArgumentError("fitness vectors must share one dimension")
    return f * np.asarray(_senses(senses, f.shape[1]), dtype=np.float64)


def dominates(f, g, senses=None) -> bool:
    """True iff ``f`` is no worse than ``g`` everywhere and better somewhere."""
    if len(f) != len(g):
        raise InvalidArgumentError(f"dimension mismatch: {len(f)} vs {len(g)}")
    s = _senses(senses, len(f))
    a, b = minimized(f, s), minimized(g, s)
    return all(x <= y for x, y in zip(a, b)) and any(x < y for x, y in zip(a, b))


def non_dominated_sort(fitnesses, senses=None) -> list:
    """Fast non-dominated sort; returns fronts as lists of indices."""
    f = _as_min_matrix(fitnesses, senses)
    n = f.shape[0]
    if n == 0:
        return []
    le = np.all(f[:, None, :] <= f[None, :, :], axis=2)
    lt = np.any(f[:, None, :] < f[None, :, :], axis=2)
    dom = le & lt  # dom[i, j]: i dominates j
    counts = dom.sum(axis=0)
    fronts = []
    current = np.flatnonzero(counts == 0)
    while current.size:
        fronts.append(current.tolist())
        counts = counts - dom[current].sum(axis=0)
        counts[current] = -1
        current = np.flatnonzero(counts == 0)
    return fronts


def crowding_distance(front, senses=None) -> list:
    """NSGA-II crowding distance of each member of one front."""
    f = _as_min_matrix(front, senses)
    n = f.shape[0]
    if n == 0:
        raise InvalidArgumentError("front must be non-empty")
    dist = np.zeros(n)
    if n <= 2:
        return [math.inf] * n
    for j in range(f.shape[1]):
        order = np.argsort(f[:, j], kind="stable")
        col = f[order, j]
        dist[order[0]] = dist[order[-1]] = math.inf
        span = col[-1] - col[0]
        if span > 0:
            dist[order[1:-1]] += (col[2:] - col[:-2]) / span
    return dist.tolist()


def pareto_order(fitnesses, senses=None) -> list:
    """Indices ranked by front, then by decreasing crowding distance (stable)."""
    fitnesses = list(fitnesses)
    order = []
    for front in non_dominated_sort(fitnesses, senses):
        cd = crowding_distance([fitnesses[i] for i in front], senses)
        order += [front[k] for k in sorted(range(len(front)), key=lambda k: -cd[k])]
    return order


def weighted_aggregate(f, weights, senses=None) -> float:
    """Weighted sum of the minimization-form objectives."""
    if len(f) != len(weights):
        raise InvalidArgumentError("weights and fitness differ in dimension")
    w = np.asarray(weights, dtype=np.float64)
    if np.any(w < 0) or w.sum() <= 0:
        raise InvalidArgumentError("weights must be non-negative with positive sum")
    return float(np.dot(w, minimized(f, _senses(senses, len(f)))))


def hypervolume_2d(front, ref_point) -> float:
    """Area dominated by a bi-objective minimization front, bounded by ``ref_point``."""
    pts = [tuple(map(float, p)) for p in front]
    if len(ref_point) != 2 or any(len(p) != 2 for p in pts):
        raise InvalidArgumentError("hypervolume_2d supports exactly two objectives")
    r1, r2 = map(float, ref_point)
    for p in pts:
        if not (p[0] <= r1 and p[1] <= r2) or p == (r1, r2):
            raise InvalidArgumentError(f"point {p} does not dominate the reference point")
    area, prev_y = 0.0, r2
    for x, y in sorted(pts):
        if y < prev_y:
            area += (r1 - x) * (prev_y - y)
            prev_y = y
    return area


# ---------------------------------------------------------------------------
# Pareto archive


def _weakly_le(a: tuple, b: tuple) -> bool:
    # a dominates b in minimization form, given a != b
    return all(x <= y for x, y in zip(a, b))


class ParetoArchive:
    """Mutually non-dominated individuals with distinct chromosomes.

    A candidate whose objective vector equals an entry's is rejected too, so
    the archive holds one representative per Pareto point. ``max_size``
    evicts the most crowded entry when exceeded.
    """

    def __init__(self, senses=(Sense.MINIMIZE,), max_size: Optional[int] = None):
        self.senses = tuple(Sense.parse(s) for s in senses)
        self.max_size = max_size
        self.entries: list = []
        self._min: list = []
        self._keys: set = set()

    def insert(self, candidate: Individual) -> bool:
        fit = candidate.fitness
        if len(fit) != len(self.senses):
            raise InvalidArgumentError("candidate dimension does not match archive")
        c = minimized(fit, self.senses)
        if candidate.keys.tobytes() in self._keys:
            return False
        keep = []
        for e, em in zip(self.entries, self._min):
            if em == c or _weakly_le(em, c):
                return False
            if not _weakly_le(c, em):
                keep.append((e, em))
        keep.append((candidate, c))
        self.entries = [e for e, _ in keep]
        self._min = [em for _, em in keep]
        self._keys = {e.keys.tobytes() for e in self.entries}
        if self.max_size is not None and len(self.entries) > self.max_size:
            cd = crowding_distance(self._min)
            drop = int(np.argmin(cd))
            self._keys.discard(self.entries[drop].keys.tobytes())
            del self.entries[drop]
            del self._min[drop]
        return True

    def fitnesses(self) -> list:
        return [e.fitness for e in self.entries]

    def sorted_entries(self) -> list:
        return sorted(self.entries, key=lambda e: e.fitness)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)


def archive_insert(archive: ParetoArchive, candidate: Individual) -> tuple:
    accepted = archive.insert(candidate)
    return archive, accepted


def format_pareto_front(archive: ParetoArchive) -> str:
    """Tab-separated objective values, one entry per line, lexicographic order."""
    return "".join("\t".join(f"{v:.9g}" for v in e.fitness) + "\n" for e in archive.sorted_entries())


# ---------------------------------------------------------------------------
# Multi-population Pareto BRKGA


@dataclass(frozen=True)
class MpBrkgaConfig:
    """One single-objective island per objective plus ``pi_count`` Pareto islands."""

    base: BrkgaConfig
    pi_count: int = 1
    pool_mix_interval: int = 10
    archive_max_size: Optional[int] = None

    def __post_init__(self):
        if self.pi_count < 0:
            raise InvalidArgumentError("pi_count must be non-negative")
        if self.pool_mix_interval < 1:
            raise InvalidArgumentError("pool_mix_interval must be >= 1")

    @property
    def omega_count(self) -> int:
        return self.base.n_objectives


@dataclass
class MpState:
    omega: list
    pi: list
    archive: ParetoArchive
    contributions: list = field(default_factory=list)
    generation: int = 0

    @property
    def islands(self) -> list:
        return self.omega + self.pi


def _dedup(members: Sequence[Individual]) -> list:
    out, seen = [], set()
    for m in members:
        key = m.keys.tobytes()
        if key not in seen:
            seen.add(key)
            out.append(m)
    return out


def _archive_all(archive: ParetoArchive, pops, previous=()) -> None:
    seen = {id(m) for pop in previous for m in pop.members}
    for pop in pops:
        for m in pop.members:
            if id(m) not in seen:
                archive.insert(m)


def mp_brkga_init(config: MpBrkgaConfig, decoder, *, n_jobs: int = 1) -> MpState:
    base = config.base
    if decoder.n_objectives != base.n_objectives:
        raise InvalidArgumentError("decoder and configuration disagree on objective count")
    omega = [
        init_population(base, decoder, (), stream_for(base.seed, j, 0, Phase.INIT), objective=j, n_jobs=n_jobs)
        for j in range(config.omega_count)
    ]
    pi = [
        init_population(
            base, decoder, (), stream_for(base.seed, config.omega_count + i, 0, Phase.INIT),
            objective=None, n_jobs=n_jobs,
        )
        for i in range(config.pi_count)
    ]
    archive = ParetoArchive(base.senses, config.archive_max_size)
    state = MpState(omega, pi, archive, [[] for _ in pi])
    _archive_all(archive, omega + pi)
    return state


def pi_island_elite(state: MpState, i: int) -> list:
    """Elite set for Pareto island ``i``, drawn from its pool.

    The pool holds the best member of every single-objective island, the
    island's own elite set and the elites other Pareto islands contributed at
    the last mixing event, deduplicated by chromosome and ranked by front and
    crowding distance. A pool smaller than ``p_e`` is topped up from the
    island's own ranking.
    """
    own = state.pi[i]
    pool = [isl.best for isl in state.omega] + list(own.elite) + list(state.contributions[i])
    pool = _dedup(pool)
    order = pareto_order([m.fitness for m in pool], own.senses)
    elite = [pool[k] for k in order[: own.elite_size]]
    if len(elite) < own.elite_size:
        # Duplicates collapsed the pool; top up from the island's own ranking.
        taken = {id(m) for m in elite}
        elite += [m for m in own.members if id(m) not in taken][: own.elite_size - len(elite)]
    return elite


def mp_brkga_generation(state: MpState, config: MpBrkgaConfig, decoder, *, n_jobs: int = 1) -> MpState:
    """Advance every island by one generation and update the archive."""
    base = config.base
    g = state.generation + 1
    m = config.omega_count
    omega = [
        evolve_generation(pop, base, decoder, stream_for(base.seed, j, g, Phase.EVOLVE), n_jobs=n_jobs)
        for j, pop in enumerate(state.omega)
    ]
    pi = []
    for i, pop in enumerate(state.pi):
        elite = pi_island_elite(state, i)
        pi.append(
            evolve_generation(pop, base, decoder, stream_for(base.seed, m + i, g, Phase.EVOLVE), elite=elite, n_jobs=n_jobs)
        )
    contributions = [[] for _ in pi]
    if len(pi) > 1 and g % config.pool_mix_interval == 0:
        for i in range(len(pi)):
            contributions[i] = _dedup([e for k, other in enumerate(pi) if k != i for e in other.elite])
    _archive_all(state.archive, omega + pi, state.islands)
    return MpState(omega, pi, state.archive, contributions, g)


def pool_mixed(state: MpState) -> bool:
    return any(state.contributions)
