"""Online parameter control.

* :func:`abrkga_tick` -- deterministic linear schedules for population size,
  elite/mutant counts and the elite mating fraction ``alpha``.
* :func:`self_adaptive_rho` -- crossover probability carried as a control gene.
* :class:`QTable` / :class:`QLearningController` -- epsilon-greedy Q-learning
  with exponentially decaying exploration.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Hashable, Optional, Sequence

import numpy as np

from .core import (
    InvalidArgumentError,
    NotApplicableError,
    Population,
    evaluate_many,
    new_random_chromosome,
)

RHO_LOW, RHO_HIGH = 0.65, 0.80


@dataclass(frozen=True)
class ScheduleBounds:
    """Endpoints of the linear schedules; ``g_max`` is the generation budget.

    Bounds are checked so every interpolated snapshot is a valid
    configuration: ``pe_max < p_min / 2`` and ``pe_max + pm_max < p_min``.
    """

    p_max: int
    p_min: int
    pe_min: int
    pe_max: int
    pm_max: int
    pm_min: int
    alpha_max: float = 1.0
    alpha_min: float = 0.5
    g_max: int = 1000

    def __post_init__(self):
        err = InvalidArgumentError
        for lo, hi, name in (
            (self.p_min, self.p_max, "p"),
            (self.pe_min, self.pe_max, "p_e"),
            (self.pm_min, self.pm_max, "p_m"),
            (self.alpha_min, self.alpha_max, "alpha"),
        ):
            if lo > hi:
                raise err(f"{name}: min {lo} exceeds max {hi}")
        if self.g_max < 1:
            raise err("g_max must be >= 1")
        if self.pe_min < 1 or 2 * self.pe_max >= self.p_min:
            raise err("need 1 <= pe_min and pe_max < p_min / 2")
        if self.pm_min < 0 or self.pe_max + self.pm_max >= self.p_min:
            raise err("need pm_min >= 0 and pe_max + pm_max < p_min")
        if not (0.0 < self.alpha_min and self.alpha_max <= 1.0):
            raise err("alpha bounds must lie in (0, 1]")


@dataclass(frozen=True)
class ScheduleSnapshot:
    p: int
    p_e: int
    p_m: int
    alpha: float


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def abrkga_tick(gen: int, bounds: ScheduleBounds) -> ScheduleSnapshot:
    """Parameters for generation ``gen``; past ``g_max`` the end values hold."""
    if gen < 0:
        raise InvalidArgumentError(f"generation must be >= 0, got {gen}")
    t = min(gen, bounds.g_max) / bounds.g_max
    lerp = lambda hi, lo: hi + (lo - hi) * t  # noqa: E731
    p = _round_half_up(lerp(bounds.p_max, bounds.p_min))
    p_e = _round_half_up(lerp(bounds.pe_min, bounds.pe_max))
    p_m = _round_half_up(lerp(bounds.pm_max, bounds.pm_min))
    alpha = lerp(bounds.alpha_max, bounds.alpha_min)
    # No-ops for valid bounds; kept as a guard against float round-off.
    p_e = max(1, min(p_e, (p - 1) // 2))
    p_m = max(0, min(p_m, p - p_e - 1))
    return ScheduleSnapshot(p, p_e, p_m, alpha)


def apply_population_resize(
    pop: Population,
    new_p: int,
    decoder,
    rng: np.random.Generator,
    *,
    elite_size: Optional[int] = None,
    mutant_size: Optional[int] = None,
) -> Population:
    """Truncate the worst members or append fresh random ones."""
    p_e = pop.elite_size if elite_size is None else elite_size
    p_m = pop.mutant_size if mutant_size is None else mutant_size
    if new_p < 2 or new_p < p_e + p_m + 1:
        raise InvalidArgumentError(f"new size {new_p} too small for p_e={p_e}, p_m={p_m}")
    members = list(pop.members)
    if new_p < len(members):
        members = members[:new_p]
    elif new_p > len(members):
        length = members[0].keys.size
        extra = [new_random_chromosome(length, rng) for _ in range(new_p - len(members))]
        members += evaluate_many(decoder, extra)
    return pop.resorted(members, elite_size=p_e, mutant_size=p_m)


def rho_from_control_gene(g):
    """Map a control gene (scalar or array) in [0, 1) to [0.65, 0.80)."""
    return RHO_LOW + (RHO_HIGH - RHO_LOW) * g


def self_adaptive_rho(child, non_elite_parent, *, self_adaptive: bool = True) -> float:
    """Crossover probability read from the non-elite parent's first control gene.

    Self-adaptive chromosomes end with two control genes ``[rho_gene, beta_gene]``;
    ``rho = 0.65 + 0.15 * rho_gene``.
    """
    child = np.asarray(getattr(child, "keys", child))
    parent = np.asarray(getattr(non_elite_parent, "keys", non_elite_parent))
    if not self_adaptive:
        raise NotApplicableError("self-adaptive mode is off")
    if parent.size < 3 or child.size != parent.size:
        raise NotApplicableError("chromosomes do not carry control genes")
    return float(rho_from_control_gene(parent[-2]))


# ---------------------------------------------------------------------------
# Q-learning


@dataclass
class QTable:
    actions: Sequence[Hashable]
    lr: float = 0.1
    discount: float = 0.9
    eta0: float = 1.0
    decay: float = 0.01
    values: dict = field(default_factory=dict)

    def __post_init__(self):
        if not (0.0 < self.lr <= 1.0):
            raise InvalidArgumentError("learning rate must lie in (0, 1]")
        if not (0.0 <= self.discount <= 1.0):
            raise InvalidArgumentError("discount must lie in [0, 1]")
        if not (0.0 < self.eta0 <= 1.0):
            raise InvalidArgumentError("eta0 must lie in (0, 1]")
        if self.decay <= 0:
            raise InvalidArgumentError("decay must be positive")
        self.actions = list(self.actions)

    def __getitem__(self, key) -> float:
        return self.values.get(key, 0.0)

    def eta(self, t: int) -> float:
        return self.eta0 * math.exp(-self.decay * t)


def q_update(q: QTable, s, a, reward: float, s_next) -> QTable:
    """One Watkins Q-learning backup, applied in place."""
    target = reward + q.discount * max((q[s_next, b] for b in q.actions), default=0.0)
    q.values[s, a] = q[s, a] + q.lr * (target - q[s, a])
    return q


def q_select_action(q: QTable, s, t: int, rng: np.random.Generator):
    """Random action with probability ``eta(t)``, else the greedy one."""
    if not q.actions:
        raise InvalidArgumentError("action set is empty")
    if rng.random() < q.eta(t):
        return q.actions[int(rng.integers(len(q.actions)))]
    scores = [q[s, a] for a in q.actions]
    return q.actions[int(np.argmax(scores))]


def stall_state(stall: int) -> int:
    """Bucket a stall count into {0, 1-5, 6-20, >20} -> 0..3."""
    if stall <= 0:
        return 0
    if stall <= 5:
        return 1
    if stall <= 20:
        return 2
    return 3


def improvement_reward(prev_best: float, new_best: float) -> float:
    """Relative improvement of minimized best fitness, clamped to [0, 1]."""
    if prev_best == 0:
        return 1.0 if new_best < prev_best else 0.0
    return min(1.0, max(0.0, (prev_best - new_best) / abs(prev_best)))


@dataclass(frozen=True)
class ControlAction:
    rho: float
    elite_fraction: float
    mutant_fraction: float


class QLearningController:
    """Chooses ``(rho, p_e, p_m)`` each generation from stall-bucket states."""

    def __init__(
        self,
        rho_levels=(0.6, 0.7, 0.8),
        elite_levels=(0.10, 0.15, 0.20),
        mutant_levels=(0.05, 0.10, 0.15),
        lr: float = 0.1,
        discount: float = 0.9,
        eta0: float = 1.0,
        decay: float = 0.01,
    ):
        actions = [ControlAction(*combo) for combo in itertools.product(rho_levels, elite_levels, mutant_levels)]
        self.q = QTable(actions, lr=lr, discount=discount, eta0=eta0, decay=decay)
        self._pending = None

    def choose(self, stall: int, t: int, rng: np.random.Generator) -> ControlAction:
        state = stall_state(stall)
        action = q_select_action(self.q, state, t, rng)
        self._pending = (state, action)
        return action

    def feedback(self, prev_best: float, new_best: float, stall_after: int) -> None:
        if self._pending is None:
            return
        state, action = self._pending
        q_update(self.q, state, action, improvement_reward(prev_best, new_best), stall_state(stall_after))
        self._pending = None

    @staticmethod
    def sizes(action: ControlAction, p: int, min_elite: int = 1) -> tuple:
        """Integer ``(p_e, p_m)`` for population size ``p`` under ``action``."""
        p_e = max(min_elite, _round_half_up(action.elite_fraction * p))
        p_e = min(p_e, (p - 1) // 2)
        p_m = min(_round_half_up(action.mutant_fraction * p), p - p_e - 1)
        return p_e, max(0, p_m)
