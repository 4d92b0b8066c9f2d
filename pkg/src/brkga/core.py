"""Genotype, population and configuration primitives.

Chromosomes are plain ``numpy`` float64 vectors with keys in ``[0, 1)``.
Every random draw in the framework goes through an :class:`RngStream`, a
``numpy.random.Generator`` whose state is derived from ``(seed, stream_id)``
so that runs replay bit-for-bit.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Iterable, Optional, Sequence

import numpy as np

MASK64 = (1 << 64) - 1


class InvalidArgumentError(ValueError):
    """Raised when an operation receives arguments violating its preconditions."""


class NotApplicableError(RuntimeError):
    """Raised when an operation is called in a mode where it has no meaning."""


class DecodeError(RuntimeError):
    """Raised when a decoder fails or returns a non-finite fitness."""


class Sense(enum.IntEnum):
    """Optimization direction of one objective.

    The integer value is the sign that maps a raw value to minimization form.
    """

    MINIMIZE = 1
    MAXIMIZE = -1

    @classmethod
    def parse(cls, value: "Sense | str") -> "Sense":
        if isinstance(value, Sense):
            return value
        text = str(value).strip().upper()
        if text in ("MIN", "MINIMIZE"):
            return cls.MINIMIZE
        if text in ("MAX", "MAXIMIZE"):
            return cls.MAXIMIZE
        raise InvalidArgumentError(f"unknown sense {value!r}")


class BiasKind(enum.Enum):
    CONSTANT = "constant"
    LINEAR = "linear"
    LOGINVERSE = "loginverse"
    QUADRATIC = "quadratic"
    EXPONENTIAL = "exponential"


class ParentPool(enum.Enum):
    NON_ELITE = "non_elite"
    ENTIRE = "entire"


def _parse_enum(enum_cls, value):
    if isinstance(value, enum_cls):
        return value
    try:
        return enum_cls(str(value).strip().lower())
    except ValueError:
        try:
            return enum_cls[str(value).strip().upper()]
        except KeyError:
            raise InvalidArgumentError(f"unknown {enum_cls.__name__} {value!r}") from None


# ---------------------------------------------------------------------------
# Deterministic randomness


def splitmix64(x: int) -> int:
    """One round of the SplitMix64 finalizer, on unsigned 64-bit integers."""
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def mix64(*parts: int) -> int:
    """Fold integers into one 64-bit value with SplitMix64.

    ``mix64(a, b, c) == splitmix64(splitmix64(splitmix64(a) ^ b) ^ c)``; used
    to derive substream ids from ``(island, generation, phase)`` tuples.
    """
    h = 0
    for part in parts:
        h = splitmix64(h ^ (int(part) & MASK64))
    return h


class RngStream(np.random.Generator):
    """A ``numpy`` PCG64 generator keyed by ``(seed, stream_id)``.

    The PCG64 seed is ``mix64(seed, stream_id)``; identical pairs give
    identical sequences on every platform, distinct ids give independent
    streams.
    """

    def __init__(self, seed: int, stream_id: int = 0):
        self.seed = int(seed) & MASK64
        self.stream_id = int(stream_id) & MASK64
        super().__init__(np.random.PCG64(mix64(self.seed, self.stream_id)))

    def child(self, *path: int) -> "RngStream":
        """Substream whose id extends this one's with ``path``."""
        return RngStream(self.seed, mix64(self.stream_id, *path))

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id})"


class Phase(enum.IntEnum):
    """Tags that separate the substreams used inside one generation."""

    INIT = 1
    EVOLVE = 2
    MIGRATE = 3
    IPR = 4
    SHAKE = 5
    RESET = 6
    CONTROL = 7
    RESIZE = 8


def stream_for(seed: int, island: int, generation: int, phase: Phase) -> RngStream:
    return RngStream(seed, mix64(island, generation, int(phase)))


# ---------------------------------------------------------------------------
# Individuals and populations


def new_random_chromosome(n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``n`` independent keys uniformly from ``[0, 1)``."""
    if n < 1:
        raise InvalidArgumentError(f"chromosome length must be >= 1, got {n}")
    return rng.random(n)


def check_keys(keys, n: Optional[int] = None) -> np.ndarray:
    """Validate a chromosome and return it as a 1-D float64 array."""
    arr = np.asarray(keys, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise InvalidArgumentError("chromosome must be a non-empty 1-D vector")
    if n is not None and arr.size != n:
        raise InvalidArgumentError(f"chromosome has length {arr.size}, expected {n}")
    if not np.all((arr >= 0.0) & (arr < 1.0)):
        raise InvalidArgumentError("chromosome keys must lie in [0, 1)")
    return arr


@dataclass(frozen=True, eq=False)
class Individual:
    """A chromosome with its cached decode result.

    ``keys`` is stored read-only; an individual never changes after decode.
    """

    keys: np.ndarray
    fitness: Optional[tuple] = None
    solution: Any = None

    def __post_init__(self):
        keys = np.array(self.keys, dtype=np.float64)
        keys.setflags(write=False)
        object.__setattr__(self, "keys", keys)

    @property
    def decoded(self) -> bool:
        return self.fitness is not None

    def same_keys(self, other: "Individual") -> bool:
        return self.keys.shape == other.keys.shape and bool(np.array_equal(self.keys, other.keys))

    def __repr__(self) -> str:
        return f"Individual(fitness={self.fitness}, n={self.keys.size})"


def minimized(fitness: Sequence[float], senses: Sequence[Sense]) -> tuple:
    """Map raw objective values to all-minimization form."""
    return tuple(float(f) * int(s) for f, s in zip(fitness, senses))


def rank_key(senses: Sequence[Sense], objective: int = 0) -> Callable[[Individual], float]:
    sign = int(senses[objective])
    return lambda ind: ind.fitness[objective] * sign


def is_better(a: Individual, b: Individual, senses: Sequence[Sense], objective: int = 0) -> bool:
    """Strict improvement of ``a`` over ``b`` on one objective."""
    sign = int(senses[objective])
    return a.fitness[objective] * sign < b.fitness[objective] * sign


def sort_members(
    members: Sequence[Individual], senses: Sequence[Sense], objective: Optional[int] = 0
) -> list:
    """Stable best-first sort.

    ``objective=None`` ranks by non-dominated front, then crowding distance.
    """
    if objective is None:
        from .mo import pareto_order

        order = pareto_order([m.fitness for m in members], senses)
        return [members[i] for i in order]
    return sorted(members, key=rank_key(senses, objective))


@dataclass(frozen=True)
class Population:
    """Best-first sorted members plus the elite/mutant partition sizes."""

    members: tuple
    elite_size: int
    mutant_size: int
    senses: tuple = (Sense.MINIMIZE,)
    objective: Optional[int] = 0
    generation: int = 0

    def __post_init__(self):
        object.__setattr__(self, "members", tuple(self.members))
        object.__setattr__(self, "senses", tuple(Sense.parse(s) for s in self.senses))
        p = len(self.members)
        if not (1 <= self.elite_size and 2 * self.elite_size < p):
            raise InvalidArgumentError(
                f"elite size {self.elite_size} must satisfy 1 <= p_e < p/2 for p={p}"
            )
        if self.mutant_size < 0 or self.elite_size + self.mutant_size >= p:
            raise InvalidArgumentError(
                f"p_e + p_m = {self.elite_size + self.mutant_size} must be < p = {p}"
            )

    @classmethod
    def from_members(
        cls,
        members: Iterable[Individual],
        elite_size: int,
        mutant_size: int,
        senses: Sequence[Sense] = (Sense.MINIMIZE,),
        objective: Optional[int] = 0,
        generation: int = 0,
    ) -> "Population":
        """Build a population, sorting ``members`` best-first."""
        ordered = sort_members(list(members), senses, objective)
        return cls(tuple(ordered), elite_size, mutant_size, tuple(senses), objective, generation)

    def resorted(self, members: Iterable[Individual], **changes) -> "Population":
        fields = dict(
            elite_size=self.elite_size,
            mutant_size=self.mutant_size,
            senses=self.senses,
            objective=self.objective,
            generation=self.generation,
        )
        fields.update(changes)
        return Population.from_members(members, **fields)

    @property
    def size(self) -> int:
        return len(self.members)

    @property
    def best(self) -> Individual:
        return self.members[0]

    @property
    def elite(self) -> tuple:
        return self.members[: self.elite_size]

    @property
    def non_elite(self) -> tuple:
        return self.members[self.elite_size :]

    def fitness_values(self, objective: int = 0) -> np.ndarray:
        return np.array([m.fitness[objective] for m in self.members], dtype=np.float64)

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self):
        return iter(self.members)


def partition(pop: Population) -> tuple:
    """Split a sorted population into ``(elite, non_elite)`` lists."""
    return list(pop.elite), list(pop.non_elite)


# ---------------------------------------------------------------------------
# Configuration


@dataclass(frozen=True)
class BrkgaConfig:
    """All evolution parameters of one BRKGA run.

    ``n`` counts decision keys only; with ``self_adaptive`` on, chromosomes
    carry two extra control genes (see :attr:`chromosome_length`). Trigger
    thresholds of 0 disable the trigger.
    """

    n: int
    p: int = 100
    p_e: int = 15
    p_m: int = 10
    rho: float = 0.7
    pi_t: int = 2
    pi_e: int = 1
    bias_kind: BiasKind = BiasKind.LOGINVERSE
    num_islands: int = 1
    migration_interval: int = 0
    migration_count: int = 1
    second_parent_pool: ParentPool = ParentPool.NON_ELITE
    senses: tuple = (Sense.MINIMIZE,)
    seed: int = 0
    stall_shake: int = 100
    stall_reset: int = 500
    ipr_interval: int = 0
    ipr_min_distance: float = 0.0
    ipr_variant: str = "permutation"
    ipr_block_size: int = 1
    ipr_depth: float = 1.0
    shake_intensity: float = 0.1
    self_adaptive: bool = False
    elite_min_distance: float = 0.0
    elite_mating_fraction: float = 1.0

    def __post_init__(self):
        set_ = lambda k, v: object.__setattr__(self, k, v)  # noqa: E731
        set_("bias_kind", _parse_enum(BiasKind, self.bias_kind))
        set_("second_parent_pool", _parse_enum(ParentPool, self.second_parent_pool))
        if isinstance(self.senses, (str, Sense)):
            set_("senses", (self.senses,))
        set_("senses", tuple(Sense.parse(s) for s in self.senses))
        set_("ipr_variant", str(self.ipr_variant).strip().lower())
        self.validate()

    def validate(self) -> None:
        err = InvalidArgumentError
        if self.n < 1:
            raise err(f"n must be >= 1, got {self.n}")
        if not (1 <= self.p_e and 2 * self.p_e < self.p):
            raise err(f"need 1 <= p_e < p/2, got p_e={self.p_e}, p={self.p}")
        if self.p_m < 0 or self.p_e + self.p_m >= self.p:
            raise err(f"need p_e + p_m < p, got {self.p_e} + {self.p_m} >= {self.p}")
        if not (0.5 < self.rho <= 1.0):
            raise err(f"rho must lie in (0.5, 1], got {self.rho}")
        if not (1 <= self.pi_e < self.pi_t <= self.p):
            raise err(f"need 1 <= pi_e < pi_t <= p, got pi_e={self.pi_e}, pi_t={self.pi_t}")
        if self.pi_e > self.p_e:
            raise err(f"pi_e={self.pi_e} exceeds p_e={self.p_e}")
        if self.second_parent_pool is ParentPool.NON_ELITE and self.pi_t - self.pi_e > self.p - self.p_e:
            raise err("not enough non-elite members for pi_t - pi_e parents")
        if self.num_islands < 1:
            raise err("num_islands must be >= 1")
        if self.migration_interval < 0 or self.migration_count < 0:
            raise err("migration settings must be non-negative")
        if self.migration_count > self.p_e:
            raise err(f"migration_count={self.migration_count} exceeds p_e={self.p_e}")
        if not (0.0 <= self.shake_intensity <= 1.0):
            raise err("shake_intensity must lie in [0, 1]")
        if min(self.stall_shake, self.stall_reset, self.ipr_interval) < 0:
            raise err("trigger thresholds must be non-negative")
        if self.ipr_variant not in ("permutation", "indicator"):
            raise err(f"unknown ipr_variant {self.ipr_variant!r}")
        if not (1 <= self.ipr_block_size <= self.n):
            raise err("ipr_block_size must lie in [1, n]")
        if not (0.0 <= self.ipr_depth <= 1.0):
            raise err("ipr_depth must lie in [0, 1]")
        if self.ipr_min_distance < 0 or self.elite_min_distance < 0:
            raise err("distances must be non-negative")
        if not (0.0 < self.elite_mating_fraction <= 1.0):
            raise err("elite_mating_fraction must lie in (0, 1]")
        if len(self.senses) < 1:
            raise err("at least one objective sense is required")

    @property
    def chromosome_length(self) -> int:
        return self.n + 2 if self.self_adaptive else self.n

    @property
    def n_objectives(self) -> int:
        return len(self.senses)

    def replace(self, **changes) -> "BrkgaConfig":
        return replace(self, **changes)


# ---------------------------------------------------------------------------
# Decoding and population construction


def evaluate(decoder, keys: np.ndarray) -> Individual:
    """Decode one chromosome into an :class:`Individual`.

    The decoder sees only the first ``decoder.n`` keys; any trailing control
    genes ride along untouched.
    """
    fitness, solution = decoder.decode(keys[: decoder.n])
    improve = getattr(decoder, "improve", None)
    if improve is not None:
        fitness, solution = improve(keys[: decoder.n], fitness, solution)
    values = tuple(float(v) for v in np.atleast_1d(fitness))
    if len(values) != decoder.n_objectives:
        raise DecodeError(
            f"decoder returned {len(values)} objective values, declared {decoder.n_objectives}"
        )
    if not all(math.isfinite(v) for v in values):
        raise DecodeError(f"decoder returned non-finite fitness {values}")
    return Individual(keys, values, solution)


def evaluate_many(decoder, chromosomes: Sequence[np.ndarray], n_jobs: int = 1) -> list:
    """Decode a batch; ``n_jobs > 1`` uses a thread pool with ordered results."""
    if n_jobs > 1 and len(chromosomes) > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            return list(pool.map(lambda k: evaluate(decoder, k), chromosomes))
    return [evaluate(decoder, k) for k in chromosomes]


def _complete_warm_start(keys, config: BrkgaConfig, rng) -> np.ndarray:
    arr = np.asarray(keys, dtype=np.float64)
    if config.self_adaptive and arr.size == config.n:
        arr = np.concatenate([arr, rng.random(2)])
    return check_keys(arr, config.chromosome_length)


def init_population(
    config: BrkgaConfig,
    decoder,
    warm_starts: Sequence = (),
    rng: Optional[np.random.Generator] = None,
    *,
    objective: Optional[int] = 0,
    n_jobs: int = 1,
) -> Population:
    """Build and decode the initial population.

    Warm-start chromosomes are kept verbatim; the remaining ``p - len(warm)``
    members are random.
    """
    rng = RngStream(config.seed) if rng is None else rng
    warm_starts = list(warm_starts)
    if len(warm_starts) > config.p:
        raise InvalidArgumentError(f"{len(warm_starts)} warm starts exceed p={config.p}")
    chromosomes = [_complete_warm_start(w, config, rng) for w in warm_starts]
    length = config.chromosome_length
    chromosomes += [new_random_chromosome(length, rng) for _ in range(config.p - len(chromosomes))]
    members = evaluate_many(decoder, chromosomes, n_jobs)
    return Population.from_members(
        members, config.p_e, config.p_m, config.senses, objective, generation=0
    )


@dataclass
class StallCounter:
    """Generations since the incumbent last strictly improved."""

    senses: tuple = (Sense.MINIMIZE,)
    objective: int = 0
    generations_since_improvement: int = 0
    best_ever: Optional[Individual] = field(default=None, repr=False)

    def update(self, candidate: Individual) -> bool:
        """Feed this generation's best; return True on strict improvement."""
        if self.best_ever is None or is_better(candidate, self.best_ever, self.senses, self.objective):
            self.best_ever = candidate
            self.generations_since_improvement = 0
            return True
        self.generations_since_improvement += 1
        return False
