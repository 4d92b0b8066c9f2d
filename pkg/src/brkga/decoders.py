"""Decoder contract, reference decoders and warm-start encoders."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Optional, Sequence

import numpy as np

from .core import InvalidArgumentError, Sense


class Decoder:
    """Base class for decoders.

    Subclasses set ``n`` (number of keys read) and ``senses`` and implement
    :meth:`decode`, returning ``(fitness, solution)``. Decoders must be
    deterministic and free of side effects so batches can be decoded
    concurrently. ``improve`` is an optional post-decode hook
    ``improve(keys, fitness, solution) -> (fitness, solution)``.
    """

    n: int = 0
    senses: tuple = (Sense.MINIMIZE,)
    improve: Optional[Callable] = None

    @property
    def n_objectives(self) -> int:
        return len(self.senses)

    def decode(self, keys: np.ndarray):
        raise NotImplementedError

    def __call__(self, keys):
        return self.decode(np.asarray(keys, dtype=np.float64))


class FunctionDecoder(Decoder):
    """Wrap a plain callable ``keys -> fitness`` or ``keys -> (fitness, solution)``."""

    def __init__(self, func: Callable, n: int, senses=(Sense.MINIMIZE,), returns_solution: bool = False):
        self.func = func
        self.n = int(n)
        self.senses = tuple(Sense.parse(s) for s in senses)
        self.returns_solution = returns_solution

    def decode(self, keys):
        out = self.func(keys)
        if self.returns_solution:
            return out
        return out, None


def _check_length(x, n: int) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.size != n:
        raise InvalidArgumentError(f"chromosome has length {x.size}, instance expects {n}")
    return x


# ---------------------------------------------------------------------------
# Instances


@dataclass(frozen=True)
class TspInstance:
    distances: np.ndarray

    def __post_init__(self):
        d = np.array(self.distances, dtype=np.float64)
        if d.ndim != 2 or d.shape[0] != d.shape[1] or d.shape[0] < 1:
            raise InvalidArgumentError("distance matrix must be square and non-empty")
        if not np.all(np.diag(d) == 0):
            raise InvalidArgumentError("distance matrix must have a zero diagonal")
        if not np.array_equal(d, d.T):
            raise InvalidArgumentError("distance matrix must be symmetric")
        if np.any(d < 0) or not np.all(np.isfinite(d)):
            raise InvalidArgumentError("distances must be finite and non-negative")
        d.setflags(write=False)
        object.__setattr__(self, "distances", d)

    @property
    def n(self) -> int:
        return self.distances.shape[0]

    @classmethod
    def from_coords(cls, coords) -> "TspInstance":
        """Euclidean distances rounded half-up to the nearest integer."""
        xy = np.asarray(coords, dtype=np.float64)
        diff = xy[:, None, :] - xy[None, :, :]
        return cls(np.floor(np.sqrt((diff**2).sum(axis=-1)) + 0.5))

    def tour_length(self, tour: Sequence[int]) -> float:
        t = np.asarray(tour)
        return float(self.distances[t, np.roll(t, -1)].sum())


@dataclass(frozen=True)
class KnapsackInstance:
    """0/1 knapsack; ``values`` may be 2-D (one row per objective)."""

    weights: np.ndarray
    values: np.ndarray
    capacity: int

    def __post_init__(self):
        w = np.array(self.weights, dtype=np.int64)
        v = np.array(self.values, dtype=np.int64)
        if v.ndim == 1:
            v = v[None, :]
        if w.ndim != 1 or v.shape[1] != w.size:
            raise InvalidArgumentError("weights and values must have equal lengths")
        if np.any(w <= 0) or np.any(v <= 0):
            raise InvalidArgumentError("weights and values must be positive integers")
        if self.capacity <= 0:
            raise InvalidArgumentError("capacity must be positive")
        w.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return self.weights.size

    @property
    def n_objectives(self) -> int:
        return self.values.shape[0]

    @cached_property
    def _weight_list(self) -> list:
        return self.weights.tolist()

    @cached_property
    def _value_lists(self) -> list:
        return self.values.tolist()


@dataclass(frozen=True)
class SmttInstance:
    """Single-machine total tardiness."""

    processing_times: np.ndarray
    due_dates: np.ndarray

    def __post_init__(self):
        p = np.array(self.processing_times, dtype=np.float64)
        d = np.array(self.due_dates, dtype=np.float64)
        if p.ndim != 1 or p.shape != d.shape or p.size == 0:
            raise InvalidArgumentError("processing times and due dates must have equal lengths")
        if np.any(p <= 0):
            raise InvalidArgumentError("processing times must be positive")
        if np.any(d < 0):
            raise InvalidArgumentError("due dates must be non-negative")
        object.__setattr__(self, "processing_times", p)
        object.__setattr__(self, "due_dates", d)

    @property
    def n(self) -> int:
        return self.processing_times.size


# ---------------------------------------------------------------------------
# Decode functions


def tsp_decode(x, inst: TspInstance) -> tuple:
    """Visit cities in ascending key order; return ``(tour, cyclic length)``."""
    x = _check_length(x, inst.n)
    tour = np.argsort(x, kind="stable")
    nxt = np.concatenate((tour[1:], tour[:1]))
    return tour, float(inst.distances[tour, nxt].sum())


def knapsack_decode(x, inst: KnapsackInstance) -> tuple:
    """Greedy fill by descending key; return ``(sorted selected items, values)``.

    ``values`` is a float for single-objective instances and a tuple otherwise.
    """
    x = _check_length(x, inst.n)
    order = np.argsort(-x, kind="stable")
    weights = inst._weight_list
    remaining = int(inst.capacity)
    selected = []
    for i in order.tolist():
        if weights[i] <= remaining:
            selected.append(i)
            remaining -= weights[i]
    selected.sort()
    totals = [float(sum(row[i] for i in selected)) for row in inst._value_lists]
    if len(totals) == 1:
        return selected, totals[0]
    return selected, tuple(totals)


def smtt_decode(x, inst: SmttInstance) -> tuple:
    """Sequence jobs by ascending key; return ``(sequence, total tardiness)``."""
    x = _check_length(x, inst.n)
    seq = np.argsort(x, kind="stable")
    completion = np.cumsum(inst.processing_times[seq])
    tardiness = np.maximum(0.0, completion - inst.due_dates[seq]).sum()
    return seq, float(tardiness)


class TspDecoder(Decoder):
    def __init__(self, instance: TspInstance):
        self.instance = instance
        self.n = instance.n
        self.senses = (Sense.MINIMIZE,)

    def decode(self, keys):
        tour, length = tsp_decode(keys, self.instance)
        return length, tour


class KnapsackDecoder(Decoder):
    def __init__(self, instance: KnapsackInstance):
        self.instance = instance
        self.n = instance.n
        self.senses = (Sense.MAXIMIZE,) * instance.n_objectives

    def decode(self, keys):
        selected, value = knapsack_decode(keys, self.instance)
        return value, selected


class SmttDecoder(Decoder):
    def __init__(self, instance: SmttInstance):
        self.instance = instance
        self.n = instance.n
        self.senses = (Sense.MINIMIZE,)

    def decode(self, keys):
        seq, tardiness = smtt_decode(keys, self.instance)
        return tardiness, seq


def decoder_for(instance) -> Decoder:
    if isinstance(instance, TspInstance):
        return TspDecoder(instance)
    if isinstance(instance, KnapsackInstance):
        return KnapsackDecoder(instance)
    if isinstance(instance, SmttInstance):
        return SmttDecoder(instance)
    raise InvalidArgumentError(f"no reference decoder for {type(instance).__name__}")


# ---------------------------------------------------------------------------
# Warm-start encoders


def encode_permutation(seq: Sequence[int], n: int) -> np.ndarray:
    """Keys whose ascending argsort reproduces ``seq``: ``key[seq[j]] = (j+1)/(n+1)``."""
    seq = [int(s) for s in seq]
    if sorted(seq) != list(range(n)):
        raise InvalidArgumentError(f"{seq} is not a permutation of 0..{n - 1}")
    keys = np.empty(n, dtype=np.float64)
    keys[seq] = np.arange(1, n + 1) / (n + 1)
    return keys


def encode_subset(selected, n: int) -> np.ndarray:
    """0.75 for selected items, 0.25 for the rest."""
    keys = np.full(n, 0.25)
    for i in selected:
        if not (0 <= int(i) < n):
            raise InvalidArgumentError(f"item index {i} out of range 0..{n - 1}")
        keys[int(i)] = 0.75
    return keys
