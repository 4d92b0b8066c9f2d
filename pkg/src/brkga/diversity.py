"""Anti-convergence operators: reset, shake, migration, elite filtering, metrics."""

from __future__ import annotations

import math
from typing import Callable, Optional, Sequence

import numpy as np

from .core import (
    BrkgaConfig,
    Individual,
    InvalidArgumentError,
    Population,
    evaluate_many,
    is_better,
    init_population,
    new_random_chromosome,
)


def mean_abs_distance(a, b) -> float:
    """Mean absolute key difference between two chromosomes."""
    a = np.asarray(getattr(a, "keys", a))
    b = np.asarray(getattr(b, "keys", b))
    if a.shape != b.shape:
        raise InvalidArgumentError("chromosome lengths differ")
    return float(np.abs(a - b).mean())


def reset_population(config: BrkgaConfig, decoder, rng, *, objective: Optional[int] = 0, n_jobs: int = 1) -> Population:
    """A fresh random population. Keeping the incumbent is the caller's job."""
    return init_population(config, decoder, (), rng, objective=objective, n_jobs=n_jobs)


def shake_keys(keys: np.ndarray, moves: int, n: int, rng: np.random.Generator) -> tuple:
    """Apply ``moves`` random moves to the first ``n`` keys.

    Each move resamples one key or swaps two keys, with equal probability.
    Returns the new keys and the set of touched positions.
    """
    out = np.array(keys, dtype=np.float64)
    touched = set()
    for _ in range(moves):
        if n >= 2 and rng.random() < 0.5:
            i, j = rng.choice(n, size=2, replace=False)
            out[i], out[j] = out[j], out[i]
            touched.update((int(i), int(j)))
        else:
            i = int(rng.integers(n))
            out[i] = rng.random()
            touched.add(i)
    return out, touched


def shake(pop: Population, beta: float, config: BrkgaConfig, decoder, rng, *, n_jobs: int = 1) -> Population:
    """Perturb elites with ``ceil(beta * n)`` moves each; renew all non-elites."""
    if not (0.0 <= beta <= 1.0):
        raise InvalidArgumentError(f"beta must lie in [0, 1], got {beta}")
    moves = math.ceil(beta * config.n)
    kept, to_decode = [], []
    for ind in pop.elite:
        if moves == 0:
            kept.append(ind)
        else:
            to_decode.append(shake_keys(ind.keys, moves, config.n, rng)[0])
    length = pop.members[0].keys.size
    to_decode += [new_random_chromosome(length, rng) for _ in pop.non_elite]
    return pop.resorted(kept + evaluate_many(decoder, to_decode, n_jobs))


def migrate(islands: Sequence[Population], count: int) -> list:
    """Ring migration: island ``k``'s best ``count`` replace the worst of ``k+1``.

    All emigrants are taken before any replacement happens.
    """
    islands = list(islands)
    if count < 0:
        raise InvalidArgumentError("migration count must be non-negative")
    for isl in islands:
        if count > isl.elite_size:
            raise InvalidArgumentError(f"migration count {count} exceeds p_e={isl.elite_size}")
    if len(islands) <= 1 or count == 0:
        return islands
    sizes = {isl.members[0].keys.size for isl in islands}
    if len(sizes) != 1 or len({isl.senses for isl in islands}) != 1:
        raise InvalidArgumentError("islands must share chromosome length and senses")
    emigrants = [isl.members[:count] for isl in islands]
    out = []
    for k, isl in enumerate(islands):
        incoming = emigrants[k - 1]
        out.append(isl.resorted(isl.members[: isl.size - count] + tuple(incoming)))
    return out


def elite_diversity_filter(
    sorted_members: Sequence[Individual],
    min_dist: float,
    metric: Callable = mean_abs_distance,
    *,
    elite_size: int,
) -> list:
    """Greedy best-first elite selection keeping members ``min_dist`` apart.

    A shortfall is filled with the best skipped members. The returned list is
    in population order.
    """
    if min_dist < 0:
        raise InvalidArgumentError("min_dist must be non-negative")
    if min_dist == 0:
        return list(sorted_members[:elite_size])
    chosen, skipped = [], []
    for idx, ind in enumerate(sorted_members):
        if len(chosen) == elite_size:
            break
        if all(metric(ind.keys, sorted_members[j].keys) >= min_dist for j in chosen):
            chosen.append(idx)
        else:
            skipped.append(idx)
    if len(chosen) < elite_size:
        chosen += skipped[: elite_size - len(chosen)]
    return [sorted_members[i] for i in sorted(chosen)]


def population_diversity(pop) -> float:
    """Mean over member pairs of the mean absolute key difference."""
    members = getattr(pop, "members", pop)
    if len(members) < 2:
        raise InvalidArgumentError("diversity needs at least two members")
    x = np.stack([np.asarray(getattr(m, "keys", m)) for m in members])
    p, n = x.shape
    pairs = p * (p - 1) / 2
    if p * p * n <= 4_000_000:
        return float(np.abs(x[:, None, :] - x[None, :, :]).sum() / (2 * n * pairs))
    # Row by row keeps the p x p x n intermediate out of memory.
    total = sum(np.abs(x[i + 1 :] - x[i]).sum() for i in range(p - 1))
    return float(total / (n * pairs))


def replace_worst_elite(pop: Population, candidate: Individual) -> tuple:
    """Swap ``candidate`` for the worst elite member if strictly better."""
    worst = pop.elite[-1]
    if pop.objective is None or not is_better(candidate, worst, pop.senses, pop.objective):
        return pop, False
    members = list(pop.members)
    members[pop.elite_size - 1] = candidate
    return pop.resorted(members), True

