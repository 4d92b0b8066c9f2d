"""Estimator-style front ends for the single- and multi-objective engines.

Both follow the scikit-learn conventions: hyper-parameters are plain
``__init__`` arguments (so ``get_params``/``set_params``/``clone`` work),
``fit`` runs the search and learned state lands in trailing-underscore
attributes::

    >>> solver = BRKGA(population_size=50, elite_size=8, mutant_size=5,
    ...                max_generations=100, seed=1).fit(TspDecoder(instance))
    >>> solver.best_fitness_, solver.best_solution_
"""

from __future__ import annotations

import io
import os
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .control import ScheduleBounds, QLearningController, abrkga_tick, apply_population_resize
from .core import (
    BrkgaConfig,
    InvalidArgumentError,
    Phase,
    StallCounter,
    check_keys,
    evaluate,
    init_population,
    is_better,
    rank_key,
    stream_for,
)
from .diversity import migrate, population_diversity, replace_worst_elite, reset_population, shake
from .evolve import evolve_generation
from .ipr import default_metric, ipr, pick_ipr_pair
from .mo import MpBrkgaConfig, hypervolume_2d, mp_brkga_generation, mp_brkga_init, pool_mixed

THREADS_ENV = "BRKGA_THREADS"
EVENTS = ("none", "shake", "reset", "migrate", "ipr")
# Only one tag fits in a trace row; the strongest event of the generation wins.
_EVENT_PRIORITY = {"reset": 4, "shake": 3, "ipr": 2, "migrate": 1, "none": 0}


def default_n_jobs() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


@dataclass(frozen=True)
class TraceRecord:
    generation: int
    best: float
    mean: float
    diversity: float
    event: str = "none"


@dataclass
class RunTrace:
    records: list = field(default_factory=list)

    HEADER = "generation,best,mean,diversity,event"

    def append(self, record: TraceRecord) -> None:
        if self.records and record.generation <= self.records[-1].generation:
            raise InvalidArgumentError("trace generations must be strictly increasing")
        if record.event not in EVENTS:
            raise InvalidArgumentError(f"unknown event tag {record.event!r}")
        self.records.append(record)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(self.HEADER + "\n")
        for r in self.records:
            buf.write(f"{r.generation},{r.best:.9g},{r.mean:.9g},{r.diversity:.9g},{r.event}\n")
        return buf.getvalue()

    @property
    def best(self) -> np.ndarray:
        return np.array([r.best for r in self.records])

    @property
    def events(self) -> list:
        return [r.event for r in self.records]

    def __len__(self) -> int:
        return len(self.records)


def _record(generation: int, islands, senses, event: str = "none") -> TraceRecord:
    key = rank_key(senses, 0)
    best = min((isl.best for isl in islands), key=key)
    values = np.concatenate([isl.fitness_values(0) for isl in islands])
    diversity = float(np.mean([population_diversity(isl) for isl in islands]))
    return TraceRecord(generation, best.fitness[0], float(values.mean()), diversity, event)


class _SearchMixin:
    def _check_fitted(self):
        if not hasattr(self, "decoder_"):
            raise NotFittedError(f"{type(self).__name__} is not fitted yet; call fit first")

    def transform(self, X) -> np.ndarray:
        """Decode rows of ``X`` (chromosomes) with the fitted decoder."""
        self._check_fitted()
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        return np.array([evaluate(self.decoder_, check_keys(x, self.decoder_.n)).fitness for x in X])

    def _n_jobs(self) -> int:
        return default_n_jobs() if self.n_jobs is None else max(1, int(self.n_jobs))

    def _base_config(self, decoder, **extra) -> BrkgaConfig:
        return BrkgaConfig(
            n=decoder.n,
            p=self.population_size,
            p_e=self.elite_size,
            p_m=self.mutant_size,
            rho=self.rho,
            pi_t=self.pi_t,
            pi_e=self.pi_e,
            bias_kind=self.bias_kind,
            second_parent_pool=self.second_parent_pool,
            senses=decoder.senses,
            seed=self.seed,
            elite_min_distance=self.elite_min_distance,
            **extra,
        )


class BRKGA(_SearchMixin, BaseEstimator):
    """Single-objective BRKGA with islands, path-relinking, shake/reset and control.

    Parameters
    ----------
    population_size, elite_size, mutant_size : int
        ``p``, ``p_e`` and ``p_m`` per island.
    rho : float
        Probability of inheriting the elite parent's key (two-parent mating).
    pi_t, pi_e : int
        Total and elite parents per mating; anything other than ``(2, 1)``
        switches to multi-parent crossover weighted by ``bias_kind``.
    num_islands, migration_interval, migration_count : int
        Ring island model; ``migration_interval=0`` disables migration.
    stall_shake, stall_reset : int
        Fire shake/reset whenever the stall count is a positive multiple of
        the threshold (0 disables). Reset wins when both fire.
    ipr_interval : int
        Path-relinking period in generations (0 disables, needs >= 2 islands).
    ipr_block_size : int
        Keys per relinking block. The permutation walk only reorders keys
        inside a block, so it needs blocks of at least two keys.
    schedule : ScheduleBounds or None
        Linear online schedules for ``p``, ``p_e``, ``p_m`` and the elite
        mating fraction.
    q_learning : bool
        Let a Q-learning controller pick ``rho``, ``p_e`` and ``p_m``.
    max_generations, max_stall, time_limit :
        Stopping rules; the first one met ends the run.
    """

    def __init__(
        self,
        population_size: int = 100,
        elite_size: int = 15,
        mutant_size: int = 10,
        rho: float = 0.7,
        pi_t: int = 2,
        pi_e: int = 1,
        bias_kind: str = "loginverse",
        second_parent_pool: str = "non_elite",
        num_islands: int = 1,
        migration_interval: int = 0,
        migration_count: int = 1,
        stall_shake: int = 100,
        stall_reset: int = 500,
        shake_intensity: float = 0.1,
        ipr_interval: int = 0,
        ipr_min_distance: float = 0.0,
        ipr_variant: str = "permutation",
        ipr_block_size: int = 2,
        ipr_depth: float = 1.0,
        self_adaptive: bool = False,
        elite_min_distance: float = 0.0,
        schedule: Optional[ScheduleBounds] = None,
        q_learning: bool = False,
        max_generations: Optional[int] = 1000,
        max_stall: Optional[int] = None,
        time_limit: Optional[float] = None,
        seed: int = 0,
        n_jobs: Optional[int] = None,
    ):
        self.population_size = population_size
        self.elite_size = elite_size
        self.mutant_size = mutant_size
        self.rho = rho
        self.pi_t = pi_t
        self.pi_e = pi_e
        self.bias_kind = bias_kind
        self.second_parent_pool = second_parent_pool
        self.num_islands = num_islands
        self.migration_interval = migration_interval
        self.migration_count = migration_count
        self.stall_shake = stall_shake
        self.stall_reset = stall_reset
        self.shake_intensity = shake_intensity
        self.ipr_interval = ipr_interval
        self.ipr_min_distance = ipr_min_distance
        self.ipr_variant = ipr_variant
        self.ipr_block_size = ipr_block_size
        self.ipr_depth = ipr_depth
        self.self_adaptive = self_adaptive
        self.elite_min_distance = elite_min_distance
        self.schedule = schedule
        self.q_learning = q_learning
        self.max_generations = max_generations
        self.max_stall = max_stall
        self.time_limit = time_limit
        self.seed = seed
        self.n_jobs = n_jobs

    def _make_config(self, decoder) -> BrkgaConfig:
        if decoder.n_objectives != 1:
            raise InvalidArgumentError("BRKGA is single-objective; use MpBRKGA for several objectives")
        if self.max_generations is None and self.max_stall is None and self.time_limit is None:
            raise InvalidArgumentError("at least one stopping rule must be set")
        config = self._base_config(
            decoder,
            num_islands=self.num_islands,
            migration_interval=self.migration_interval,
            migration_count=self.migration_count,
            stall_shake=self.stall_shake,
            stall_reset=self.stall_reset,
            ipr_interval=self.ipr_interval,
            ipr_min_distance=self.ipr_min_distance,
            ipr_variant=self.ipr_variant,
            ipr_block_size=min(self.ipr_block_size, decoder.n),
            ipr_depth=self.ipr_depth,
            shake_intensity=self.shake_intensity,
            self_adaptive=self.self_adaptive,
        )
        floor = max(config.pi_e, config.migration_count)
        if self.schedule is not None and self.schedule.pe_min < floor:
            raise InvalidArgumentError(f"schedule pe_min must be >= {floor} (pi_e and migration_count)")
        return config

    def fit(self, decoder, warm_starts: Sequence = ()) -> "BRKGA":
        """Run the search on ``decoder``; warm starts seed island 0."""
        config = self._make_config(decoder)
        n_jobs = self._n_jobs()
        seed, senses, K = config.seed, config.senses, config.num_islands
        islands = [
            init_population(
                config, decoder, warm_starts if k == 0 else (), stream_for(seed, k, 0, Phase.INIT), n_jobs=n_jobs
            )
            for k in range(K)
        ]
        stall = StallCounter(senses)
        best = min((isl.best for isl in islands), key=rank_key(senses))
        stall.update(best)
        controller = QLearningController() if self.q_learning else None
        trace = RunTrace()
        trace.append(_record(0, islands, senses))
        events = []
        started = time.monotonic()
        g = 0

        def consider(pops):
            nonlocal best
            for isl in pops:
                if is_better(isl.best, best, senses):
                    best = isl.best

        while True:
            if self.max_generations is not None and g >= self.max_generations:
                break
            if self.max_stall is not None and stall.generations_since_improvement >= self.max_stall:
                break
            if self.time_limit is not None and time.monotonic() - started >= self.time_limit:
                break
            g += 1
            gen_config = config
            if self.schedule is not None:
                snap = abrkga_tick(g, self.schedule)
                islands = [
                    apply_population_resize(
                        isl, snap.p, decoder, stream_for(seed, k, g, Phase.RESIZE),
                        elite_size=snap.p_e, mutant_size=snap.p_m,
                    )
                    for k, isl in enumerate(islands)
                ]
                gen_config = gen_config.replace(elite_mating_fraction=snap.alpha)
            if controller is not None:
                action = controller.choose(stall.generations_since_improvement, g, stream_for(seed, 0, g, Phase.CONTROL))
                floor = max(config.pi_e, config.migration_count)
                resized = []
                for isl in islands:
                    p_e, p_m = controller.sizes(action, isl.size, floor)
                    resized.append(isl.resorted(isl.members, elite_size=p_e, mutant_size=p_m))
                islands = resized
                gen_config = gen_config.replace(rho=action.rho)
            prev_best = best

            islands = [
                evolve_generation(isl, gen_config, decoder, stream_for(seed, k, g, Phase.EVOLVE), n_jobs=n_jobs)
                for k, isl in enumerate(islands)
            ]
            fired = []
            if K > 1 and config.migration_interval and g % config.migration_interval == 0:
                islands = migrate(islands, min(config.migration_count, min(i.elite_size for i in islands)))
                fired.append("migrate")
            if K > 1 and config.ipr_interval and g % config.ipr_interval == 0:
                if self._path_relink(islands, config, decoder, stream_for(seed, 0, g, Phase.IPR)):
                    fired.append("ipr")
            consider(islands)
            stall.update(best)
            s = stall.generations_since_improvement
            if config.stall_reset and s > 0 and s % config.stall_reset == 0:
                islands = [
                    self._reset_island(isl, config, decoder, stream_for(seed, k, g, Phase.RESET), n_jobs)
                    for k, isl in enumerate(islands)
                ]
                fired.append("reset")
            elif config.stall_shake and s > 0 and s % config.stall_shake == 0:
                beta = self._shake_beta(islands, config)
                islands = [
                    shake(isl, beta, config, decoder, stream_for(seed, k, g, Phase.SHAKE), n_jobs=n_jobs)
                    for k, isl in enumerate(islands)
                ]
                fired.append("shake")
            consider(islands)
            if controller is not None:
                sign = int(senses[0])
                controller.feedback(prev_best.fitness[0] * sign, best.fitness[0] * sign, s)
            events += [(g, e) for e in fired]
            tag = max(fired, key=_EVENT_PRIORITY.get, default="none")
            trace.append(_record(g, islands, senses, tag))

        self.config_ = config
        self.decoder_ = decoder
        self.populations_ = islands
        self.best_ = best
        self.best_fitness_ = best.fitness[0]
        self.best_solution_ = best.solution
        self.trace_ = trace
        self.events_ = events
        self.n_generations_ = g
        self.stall_ = stall.generations_since_improvement
        self.controller_ = controller
        return self

    @staticmethod
    def _reset_island(isl, config, decoder, rng, n_jobs):
        # Fresh members with the island's current partition sizes.
        cfg = config.replace(p=isl.size, p_e=isl.elite_size, p_m=isl.mutant_size,
                             pi_e=min(config.pi_e, isl.elite_size),
                             migration_count=min(config.migration_count, isl.elite_size),
                             pi_t=min(config.pi_t, isl.size))
        return reset_population(cfg, decoder, rng, n_jobs=n_jobs)

    @staticmethod
    def _shake_beta(islands, config) -> float:
        if not config.self_adaptive:
            return config.shake_intensity
        # The best individual's second control gene sets the intensity.
        best = min((isl.best for isl in islands), key=rank_key(config.senses))
        return float(best.keys[config.n + 1])

    @staticmethod
    def _path_relink(islands: list, config: BrkgaConfig, decoder, rng) -> bool:
        metric = default_metric(config.ipr_variant)
        pair = pick_ipr_pair(islands, config.ipr_min_distance, metric, rng)
        if pair is None:
            return False
        base, guide = pair
        result = ipr(base, guide, config.ipr_variant, config.ipr_block_size, config.ipr_depth, decoder)
        for k, isl in enumerate(islands):
            if any(m is base for m in isl.members):
                islands[k], _ = replace_worst_elite(isl, result)
                break
        return True


class MpBRKGA(_SearchMixin, BaseEstimator):
    """Multi-population Pareto BRKGA.

    One island evolves per objective; ``pi_count`` further islands rank by
    non-dominated front and crowding distance and take their elite sets from
    a shared pool. Every decoded individual is offered to ``archive_``.
    """

    def __init__(
        self,
        population_size: int = 100,
        elite_size: int = 15,
        mutant_size: int = 10,
        rho: float = 0.7,
        pi_t: int = 2,
        pi_e: int = 1,
        bias_kind: str = "loginverse",
        second_parent_pool: str = "non_elite",
        elite_min_distance: float = 0.0,
        pi_count: int = 1,
        pool_mix_interval: int = 10,
        archive_max_size: Optional[int] = None,
        max_generations: int = 200,
        seed: int = 0,
        n_jobs: Optional[int] = None,
    ):
        self.population_size = population_size
        self.elite_size = elite_size
        self.mutant_size = mutant_size
        self.rho = rho
        self.pi_t = pi_t
        self.pi_e = pi_e
        self.bias_kind = bias_kind
        self.second_parent_pool = second_parent_pool
        self.elite_min_distance = elite_min_distance
        self.pi_count = pi_count
        self.pool_mix_interval = pool_mix_interval
        self.archive_max_size = archive_max_size
        self.max_generations = max_generations
        self.seed = seed
        self.n_jobs = n_jobs

    def fit(self, decoder) -> "MpBRKGA":
        base = self._base_config(decoder, stall_shake=0, stall_reset=0)
        config = MpBrkgaConfig(base, self.pi_count, self.pool_mix_interval, self.archive_max_size)
        n_jobs = self._n_jobs()
        state = mp_brkga_init(config, decoder, n_jobs=n_jobs)
        trace = RunTrace()
        trace.append(_record(0, state.islands, base.senses))
        for _ in range(self.max_generations):
            state = mp_brkga_generation(state, config, decoder, n_jobs=n_jobs)
            event = "migrate" if pool_mixed(state) else "none"
            trace.append(_record(state.generation, state.islands, base.senses, event))
        self.config_ = config
        self.decoder_ = decoder
        self.state_ = state
        self.archive_ = state.archive
        self.trace_ = trace
        self.n_generations_ = state.generation
        return self

    @property
    def pareto_front_(self) -> list:
        self._check_fitted()
        return [e.fitness for e in self.archive_.sorted_entries()]

    def hypervolume(self, ref_point) -> float:
        """2-D hypervolume of the archive in minimization form."""
        self._check_fitted()
        signs = [int(s) for s in self.config_.base.senses]
        pts = [tuple(v * s for v, s in zip(f, signs)) for f in self.pareto_front_]
        return hypervolume_2d(pts, ref_point)
