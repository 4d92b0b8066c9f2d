"""Implicit path-relinking between chromosomes in key space.

Two walk variants share one greedy skeleton. Positions are grouped in
contiguous blocks; each step tries moving every remaining block toward the
guide, decodes the candidates and keeps the best move.

* ``indicator`` copies the guide's keys into the block (threshold decoders).
* ``permutation`` reorders the current block's own keys so their relative
  order matches the guide (sort-based decoders); the key multiset of the base
  is preserved along the whole path.
"""

from __future__ import annotations

import enum
import math
from typing import Callable, Optional, Sequence

import numpy as np

from .core import Individual, InvalidArgumentError, NotApplicableError, Population, evaluate, is_better


class IprVariant(enum.Enum):
    PERMUTATION = "permutation"
    INDICATOR = "indicator"


def _pair(a, b) -> tuple:
    a = np.asarray(getattr(a, "keys", a), dtype=np.float64)
    b = np.asarray(getattr(b, "keys", b), dtype=np.float64)
    if a.shape != b.shape:
        raise InvalidArgumentError(f"chromosome lengths differ: {a.size} vs {b.size}")
    return a, b


def hamming_theta_distance(a, b, theta: float = 0.5) -> int:
    """Positions where ``a`` and ``b`` fall on different sides of ``theta``."""
    if not (0.0 < theta < 1.0):
        raise InvalidArgumentError("theta must lie in (0, 1)")
    a, b = _pair(a, b)
    return int(np.count_nonzero((a >= theta) != (b >= theta)))


def _ranks(x: np.ndarray) -> np.ndarray:
    r = np.empty(x.size, dtype=np.int64)
    r[np.argsort(x, kind="stable")] = np.arange(x.size)
    return r


def kendall_tau_distance(a, b) -> int:
    """Number of index pairs ordered differently by ``a`` and ``b``."""
    a, b = _pair(a, b)
    ra, rb = _ranks(a), _ranks(b)
    count = 0
    for i in range(a.size - 1):
        count += int(np.count_nonzero((ra[i + 1 :] > ra[i]) != (rb[i + 1 :] > rb[i])))
    return count


def default_metric(variant) -> Callable:
    variant = IprVariant(variant)
    return kendall_tau_distance if variant is IprVariant.PERMUTATION else hamming_theta_distance


def pick_ipr_pair(
    islands: Sequence[Population],
    min_dist: float,
    metric: Callable,
    rng: np.random.Generator,
    *,
    attempts: Optional[int] = None,
) -> Optional[tuple]:
    """Sample ``(base, guide)`` elites from two different islands.

    Tries up to ``K * p_e`` random pairs and returns the first whose distance
    is at least ``min_dist`` and positive, or ``None``.
    """
    k = len(islands)
    if k < 2:
        raise NotApplicableError("path-relinking pairs need at least two islands")
    if attempts is None:
        attempts = k * max(isl.elite_size for isl in islands)
    for _ in range(attempts):
        i, j = rng.choice(k, size=2, replace=False)
        base = islands[i].elite[int(rng.integers(islands[i].elite_size))]
        guide = islands[j].elite[int(rng.integers(islands[j].elite_size))]
        d = metric(base.keys, guide.keys)
        if d > 0 and d >= min_dist:
            return base, guide
    return None


def _blocks(n: int, block_size: int) -> list:
    return [slice(s, min(s + block_size, n)) for s in range(0, n, block_size)]


def _move_block(current: np.ndarray, guide: np.ndarray, blk: slice, variant: IprVariant) -> np.ndarray:
    out = current.copy()
    if variant is IprVariant.INDICATOR:
        out[blk] = guide[blk]
    else:
        # The smallest own key goes where the guide has its smallest key, etc.
        own = np.sort(current[blk], kind="stable")
        out[blk][np.argsort(guide[blk], kind="stable")] = own
    return out


def ipr(
    base: Individual,
    guide: Individual,
    variant,
    block_size: int,
    depth: float,
    decoder,
    *,
    objective: int = 0,
    on_step: Optional[Callable[[np.ndarray], None]] = None,
) -> Individual:
    """Greedy block walk from ``base`` toward ``guide``; return the best point seen.

    Only the first ``decoder.n`` keys are walked. ``on_step`` is called with
    the current chromosome after each adopted block.
    """
    variant = IprVariant(variant)
    x, g = _pair(base, guide)
    n = decoder.n
    if not (1 <= block_size <= n):
        raise InvalidArgumentError(f"block size must lie in [1, {n}], got {block_size}")
    if not (0.0 <= depth <= 1.0):
        raise InvalidArgumentError("depth must lie in [0, 1]")
    senses = decoder.senses
    blocks = _blocks(n, block_size)
    steps = math.ceil(depth * len(blocks))
    best = base if base.decoded else evaluate(decoder, x)
    current = x.copy()
    pending = list(range(len(blocks)))
    for _ in range(steps):
        step_best = None
        for b in pending:
            cand = _move_block(current, g, blocks[b], variant)
            if np.array_equal(cand[blocks[b]], current[blocks[b]]):
                continue
            ind = evaluate(decoder, cand)
            if step_best is None or is_better(ind, step_best[1], senses, objective):
                step_best = (b, ind)
        if step_best is None:
            break
        b, ind = step_best
        pending.remove(b)
        current = np.array(ind.keys)
        if is_better(ind, best, senses, objective):
            best = ind
        if on_step is not None:
            on_step(current)
    return best
