"""The cyclic urn Markov chain.

State after n draws is the composition vector of ball counts per type; one
ball of the initial type at n = 0, and each draw of a type-i ball adds one
ball of type (i+1) mod m.  Total count is therefore always n + 1.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np

from . import _kernels
from .errors import ParameterError
from .rng import SplitMix64
from .spectral import shift_action


@dataclass(frozen=True)
class UrnParams:
    """Number of types and the type of the single initial ball."""

    m: int
    initial_type: int = 0

    def __post_init__(self):
        if self.m < 2:
            raise ParameterError(f"m must be >= 2, got {self.m}")
        if not 0 <= self.initial_type < self.m:
            raise ParameterError(
                f"initial_type must be in 0..{self.m - 1}, got {self.initial_type}")


@dataclass(frozen=True)
class Composition:
    """Ball counts per type after ``n`` draws; sums to ``n + 1``."""

    counts: tuple[int, ...]
    n: int

    @property
    def m(self) -> int:
        return len(self.counts)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.counts, dtype=np.int64)


def new_urn(params: UrnParams) -> Composition:
    """Initial composition: the unit vector at the initial type."""
    counts = [0] * params.m
    counts[params.initial_type] = 1
    return Composition(counts=tuple(counts), n=0)


def step(state: Composition, rng: SplitMix64) -> Composition:
    """One draw: pick a uniform ball, add one ball of the successor type.

    The draw maps a uniform integer in ``{0, ..., n}`` onto the cumulative
    counts, i.e. type i is picked with probability counts[i] / (n + 1).
    """
    idx = rng.next_below(state.n + 1)
    acc = 0
    for i, c in enumerate(state.counts):
        acc += c
        if idx < acc:
            break
    j = (i + 1) % state.m
    counts = list(state.counts)
    counts[j] += 1
    return Composition(counts=tuple(counts), n=state.n + 1)


@dataclass(frozen=True)
class Trajectory:
    """A lazily evaluated trajectory: a deterministic function of its seed.

    Iterating yields the compositions for n = 0..n_max in order; iteration can
    be repeated and always reproduces the same states.  ``final()`` skips the
    python loop and uses the simulation kernel (identical stream).
    """

    params: UrnParams
    n_max: int
    seed: int

    def __iter__(self) -> Iterator[Composition]:
        state = new_urn(self.params)
        rng = SplitMix64(self.seed)
        yield state
        for _ in range(self.n_max):
            state = step(state, rng)
            yield state

    def final(self) -> Composition:
        if self.n_max == 0:
            return new_urn(self.params)
        _, counts = _kernels.sim_u_many(
            self.params.m, self.params.initial_type, [self.n_max], [self.seed])
        return Composition(counts=tuple(int(c) for c in counts[0, 0]), n=self.n_max)


def simulate(params: UrnParams, n_max: int, seed: int) -> Trajectory:
    """Trajectory of the urn; reproducible bit-exactly from (params, n_max, seed)."""
    if n_max < 0:
        raise ParameterError(f"n_max must be >= 0, got {n_max}")
    return Trajectory(params=params, n_max=n_max, seed=seed)


def simulate_final_many(params: UrnParams, n_max: int, seeds) -> np.ndarray:
    """Final compositions of many independent trajectories, shape (R, m)."""
    if n_max == 0:
        base = new_urn(params).as_array()
        return np.tile(base, (len(seeds), 1))
    _, counts = _kernels.sim_u_many(params.m, params.initial_type, [n_max], seeds)
    return counts[:, 0, :]


def replacement_matrix(m: int) -> np.ndarray:
    """0/1 matrix with entry (i, j) = 1 iff j = (i+1) mod m."""
    if m < 2:
        raise ParameterError(f"m must be >= 2, got {m}")
    mat = np.zeros((m, m), dtype=np.int64)
    mat[np.arange(m), (np.arange(m) + 1) % m] = 1
    return mat


def conditional_mean(state: Composition) -> np.ndarray:
    """Expected next composition: ``(Id + R^t/(n+1)) counts``."""
    x = state.as_array().astype(np.float64)
    return x + shift_action(x) / (state.n + 1)
