"""Crossover operators and the classical generation step."""

from __future__ import annotations

import math
from typing import Optional, Sequence

import numpy as np

from .core import (
    BiasKind,
    BrkgaConfig,
    DecodeError,
    Individual,
    InvalidArgumentError,
    ParentPool,
    Population,
    evaluate_many,
    new_random_chromosome,
)


def biased_uniform_crossover(elite_parent, other_parent, rho: float, rng: np.random.Generator) -> np.ndarray:
    """Take each gene from ``elite_parent`` with probability ``rho``."""
    a = np.asarray(elite_parent, dtype=np.float64)
    b = np.asarray(other_parent, dtype=np.float64)
    if a.shape != b.shape:
        raise InvalidArgumentError(f"parent lengths differ: {a.size} vs {b.size}")
    if not (0.5 < rho <= 1.0):
        raise InvalidArgumentError(f"rho must lie in (0.5, 1], got {rho}")
    return np.where(rng.random(a.size) < rho, a, b)


def rank_bias_weight(rank: int, kind: BiasKind) -> float:
    """Weight of the parent at 1-based ``rank`` under a rank bias function."""
    if rank < 1:
        raise InvalidArgumentError(f"rank must be >= 1, got {rank}")
    kind = BiasKind(kind) if not isinstance(kind, BiasKind) else kind
    if kind is BiasKind.CONSTANT:
        return 1.0
    if kind is BiasKind.LINEAR:
        return 1.0 / rank
    if kind is BiasKind.LOGINVERSE:
        return 1.0 / math.log(rank + 1)
    if kind is BiasKind.QUADRATIC:
        return rank**-2.0
    if kind is BiasKind.EXPONENTIAL:
        return math.exp(-rank)
    raise InvalidArgumentError(f"unknown bias kind {kind!r}")


def _sample(rng: np.random.Generator, pool_size: int, k: int) -> np.ndarray:
    if k == 1:
        return np.array([rng.integers(pool_size)])
    return rng.choice(pool_size, size=k, replace=False)


def select_parents(
    pop: Population,
    pi_t: int,
    pi_e: int,
    pool: ParentPool,
    rng: np.random.Generator,
    *,
    elite: Optional[Sequence[Individual]] = None,
    non_elite: Optional[Sequence[Individual]] = None,
) -> list:
    """Sample ``pi_e`` elite and ``pi_t - pi_e`` other parents, best-first.

    ``elite``/``non_elite`` override the population's own partition (used by
    elite filtering and the multi-population Pareto islands). Returned parents
    keep population order, so equal-fitness ties follow rank.
    """
    elite = list(pop.elite) if elite is None else list(elite)
    non_elite = list(pop.non_elite) if non_elite is None else list(non_elite)
    pool = ParentPool(pool) if not isinstance(pool, ParentPool) else pool
    n_other = pi_t - pi_e
    if pi_e < 1 or n_other < 0:
        raise InvalidArgumentError(f"need 1 <= pi_e <= pi_t, got pi_e={pi_e}, pi_t={pi_t}")
    if pi_e > len(elite):
        raise InvalidArgumentError(f"pi_e={pi_e} exceeds elite size {len(elite)}")
    chosen_elite = _sample(rng, len(elite), pi_e)
    picks = [(int(i), elite[i]) for i in chosen_elite]
    if pool is ParentPool.NON_ELITE:
        if n_other > len(non_elite):
            raise InvalidArgumentError(f"{n_other} non-elite parents requested, {len(non_elite)} available")
        if n_other:
            offset = len(elite)
            picks += [(offset + int(i), non_elite[i]) for i in _sample(rng, len(non_elite), n_other)]
    else:
        everyone = elite + non_elite
        taken = {int(i) for i in chosen_elite}
        rest = [i for i in range(len(everyone)) if i not in taken]
        if n_other > len(rest):
            raise InvalidArgumentError(f"{n_other} further parents requested, {len(rest)} available")
        if n_other:
            picks += [(rest[i], everyone[rest[i]]) for i in _sample(rng, len(rest), n_other)]
    picks.sort(key=lambda t: t[0])
    return [ind for _, ind in picks]


def multi_parent_crossover(
    parents: Sequence,
    bias_kind: BiasKind,
    rng: np.random.Generator,
    *,
    weights: Optional[Sequence[float]] = None,
) -> np.ndarray:
    """Each gene comes from parent ``j`` with probability ``w(j+1) / sum(w)``.

    ``parents`` are chromosomes (or individuals) ordered best-first;
    ``weights`` replaces the rank bias function when given.
    """
    if len(parents) == 0:
        raise InvalidArgumentError("multi-parent crossover needs at least one parent")
    keys = np.stack([np.asarray(getattr(p, "keys", p), dtype=np.float64) for p in parents])
    if weights is None:
        weights = [rank_bias_weight(r, bias_kind) for r in range(1, len(parents) + 1)]
    w = np.asarray(weights, dtype=np.float64)
    if w.size != len(parents) or np.any(w < 0) or w.sum() <= 0:
        raise InvalidArgumentError("weights must be non-negative, one per parent, with positive sum")
    if len(parents) == 1:
        return keys[0].copy()
    cdf = np.cumsum(w / w.sum())
    source = np.searchsorted(cdf, rng.random(keys.shape[1]), side="right")
    source = np.minimum(source, len(parents) - 1)
    return keys[source, np.arange(keys.shape[1])]


def _mating_rho(parents: Sequence[Individual], config: BrkgaConfig, rho: float) -> float:
    if config.self_adaptive:
        from .control import rho_from_control_gene

        return float(rho_from_control_gene(parents[-1].keys[config.n]))
    return rho


def make_offspring(
    parents: Sequence[Individual], config: BrkgaConfig, rng: np.random.Generator, rho: Optional[float] = None
) -> np.ndarray:
    """Mate parents: two-parent biased crossover when ``pi_t=2, pi_e=1``, else multi-parent."""
    rho = config.rho if rho is None else rho
    if len(parents) == 2 and config.pi_e == 1:
        return biased_uniform_crossover(parents[0].keys, parents[1].keys, _mating_rho(parents, config, rho), rng)
    return multi_parent_crossover(parents, config.bias_kind, rng)


def _classic_offspring(elite, non_elite, count, config, rng) -> np.ndarray:
    # Batched form of select_parents + biased_uniform_crossover for one elite
    # and one non-elite parent.
    a = np.stack([m.keys for m in elite])[rng.integers(len(elite), size=count)]
    b = np.stack([m.keys for m in non_elite])[rng.integers(len(non_elite), size=count)]
    if config.self_adaptive:
        from .control import rho_from_control_gene

        rho = rho_from_control_gene(b[:, config.n])[:, None]
    else:
        rho = config.rho
    return np.where(rng.random(a.shape) < rho, a, b)


def evolve_generation(
    pop: Population,
    config: BrkgaConfig,
    decoder,
    rng: np.random.Generator,
    *,
    elite: Optional[Sequence[Individual]] = None,
    n_jobs: int = 1,
) -> Population:
    """Produce the next population: elite copies, mutants, then offspring.

    Partition sizes come from ``pop`` (so schedules may change them between
    generations); ``elite`` overrides the elite set. All random draws are made
    serially before decoding, so ``n_jobs`` never changes the result.
    """
    p, p_e, p_m = pop.size, pop.elite_size, pop.mutant_size
    if elite is None and config.elite_min_distance > 0:
        from .diversity import elite_diversity_filter

        elite = elite_diversity_filter(pop.members, config.elite_min_distance, elite_size=p_e)
    elite = list(pop.elite) if elite is None else list(elite)[:p_e]
    if len(elite) != p_e:
        raise InvalidArgumentError(f"elite set has {len(elite)} members, expected {p_e}")
    elite_ids = {id(m) for m in elite}
    non_elite = [m for m in pop.members if id(m) not in elite_ids][: p - p_e]

    # A fraction of the elite set is eligible for mating; never fewer than pi_e.
    n_mating = max(config.pi_e, math.ceil(config.elite_mating_fraction * p_e))
    mating_elite = elite[: min(n_mating, p_e)]
    others = non_elite
    if config.second_parent_pool is ParentPool.ENTIRE:
        others = elite[len(mating_elite):] + non_elite

    length = elite[0].keys.size
    mutants = [new_random_chromosome(length, rng) for _ in range(p_m)]
    n_children = p - p_e - p_m
    if config.pi_t == 2 and config.pi_e == 1 and config.second_parent_pool is ParentPool.NON_ELITE:
        offspring = list(_classic_offspring(mating_elite, others, n_children, config, rng))
    else:
        offspring = []
        for _ in range(n_children):
            parents = select_parents(
                pop, config.pi_t, config.pi_e, config.second_parent_pool, rng,
                elite=mating_elite, non_elite=others,
            )
            offspring.append(make_offspring(parents, config, rng))
    try:
        fresh = evaluate_many(decoder, mutants + offspring, n_jobs)
    except Exception as exc:
        raise DecodeError(f"decoding failed in generation {pop.generation + 1}: {exc}") from exc
    return pop.resorted(elite + fresh, generation=pop.generation + 1)
