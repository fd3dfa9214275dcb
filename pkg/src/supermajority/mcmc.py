"""Markov chain samplers for the Ising prior on an arbitrary graph.

A sweep is one pass over the free spins in index order (Metropolis, with a
uniformly drawn proposed spin value) or a fixed number of
Wolff cluster moves that touches about as many sites as there are free spins,
calibrated during burn-in. Frozen (clamped) spins
never change; a Wolff cluster that tries to bond into a frozen spin is
rejected as a whole, which keeps detailed balance.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numba
import numpy as np

from .engine import MagnetizationPmf, ModelParams
from .graphs import GraphFamily, GraphInstance
from .rng import derive_rng

DEFAULT_BURN_IN = 1000
DEFAULT_THIN = 10


class Sampler(str, Enum):
    METROPOLIS = "metropolis"
    WOLFF = "wolff"
    EXACT = "exact-iid"


class SamplerError(ValueError):
    pass


@dataclass(frozen=True)
class SampleBatch:
    plus_counts: np.ndarray
    n: int
    seed: int
    sampler: Sampler
    burn_in: int = 0
    thin: int = 1
    extra: dict = field(default_factory=dict)

    @property
    def magnetizations(self) -> np.ndarray:
        return (2 * self.plus_counts - self.n) / self.n

    def __len__(self) -> int:
        return int(self.plus_counts.size)

    def mean(self) -> float:
        return float(self.magnetizations.mean())

    @property
    def correlated(self) -> bool:
        return self.sampler is not Sampler.EXACT

    def stderr(self) -> float:
        return series_stderr(self.magnetizations, self.correlated)


BATCH_COUNT = 50


def series_stderr(values: np.ndarray, correlated: bool = True) -> float:
    """Standard error of a sample mean; batch means for a Markov chain."""
    values = np.asarray(values, dtype=float)
    size = values.size
    if size < 2:
        return 0.0
    if not correlated or size < 2 * BATCH_COUNT:
        return float(values.std(ddof=1) / math.sqrt(size))
    m = size // BATCH_COUNT
    means = values[: m * BATCH_COUNT].reshape(BATCH_COUNT, m).mean(axis=1)
    return float(means.std(ddof=1) / math.sqrt(BATCH_COUNT))


@numba.njit(cache=True)
def _metropolis_sweeps(x, indptr, indices, free, beta, h, complete, sweeps, rng):
    n = x.size
    s = 0
    for i in range(n):
        s += x[i]
    for _ in range(sweeps):
        for idx in range(free.size):
            i = free[idx]
            xi = x[i]
            # proposal: a uniformly drawn spin value (keeps the scan aperiodic)
            if rng.random() < 0.5:
                continue
            if complete:
                s_new = s - 2 * xi
                delta = beta * (s_new * s_new - s * s) / (2.0 * n) - 2.0 * h * xi
            else:
                local = 0
                for q in range(indptr[i], indptr[i + 1]):
                    local += x[indices[q]]
                delta = -2.0 * xi * (beta * local + h)
            if delta >= 0.0 or rng.random() < math.exp(delta):
                x[i] = -xi
                s -= 2 * xi
    return s


@numba.njit(cache=True)
def _wolff_moves(x, indptr, indices, free, clamp, p_add, moves, rng, stamp, stack, gen):
    """Run ``moves`` single-cluster updates; returns (generation, sites touched)."""
    n_free = free.size
    touched = 0
    for _ in range(moves):
        gen += 1
        seed = free[int(rng.random() * n_free)]
        spin = x[seed]
        stamp[seed] = gen
        stack[0] = seed
        size = 1
        rejected = False
        pos = 0
        while pos < size and not rejected:
            i = stack[pos]
            pos += 1
            for q in range(indptr[i], indptr[i + 1]):
                j = indices[q]
                if x[j] != spin or stamp[j] == gen:
                    continue
                if rng.random() < p_add:
                    if clamp[j] != 0:
                        rejected = True
                        break
                    stamp[j] = gen
                    stack[size] = j
                    size += 1
        touched += size
        if not rejected:
            for q in range(size):
                x[stack[q]] = -spin
    return gen, touched


def _initial_state(g: GraphInstance, rng: np.random.Generator) -> np.ndarray:
    x = np.where(rng.random(g.n) < 0.5, 1, -1).astype(np.int64)
    frozen = g.clamp != 0
    x[frozen] = g.clamp[frozen]
    return x


def mcmc_sample(g: GraphInstance, params: ModelParams, sampler="metropolis", count: int = 10_000,
                burn_in: int = DEFAULT_BURN_IN, thin: int = DEFAULT_THIN, seed: int = 0) -> SampleBatch:
    """Record ``count`` +1 counts, one every ``thin`` sweeps after ``burn_in`` sweeps."""
    sampler = Sampler(sampler)
    if count <= 0 or burn_in < 0 or thin <= 0:
        raise SamplerError("count and thin must be positive, burn_in non-negative")
    if sampler is Sampler.WOLFF and params.h != 0:
        raise SamplerError("the Wolff sampler only supports h = 0")
    if sampler is Sampler.EXACT:
        raise SamplerError("use sample_from_pmf for exact i.i.d. draws")

    rng = derive_rng(seed, 0)
    x = _initial_state(g, rng)
    free = np.flatnonzero(g.clamp == 0).astype(np.int64)
    indptr, indices = g.adjacency_csr()
    complete = g.family is GraphFamily.COMPLETE
    counts = np.empty(count, dtype=np.int64)
    if free.size == 0:
        counts[:] = int((x > 0).sum())
        return SampleBatch(counts, g.n, seed, sampler, burn_in, thin)

    if sampler is Sampler.METROPOLIS:
        def run(k):
            _metropolis_sweeps(x, indptr, indices, free, float(params.beta), float(params.h),
                               complete, k, rng)
    else:
        coupling = params.beta / g.n if complete else params.beta
        p_add = -math.expm1(-2.0 * coupling)
        stamp = np.zeros(g.n, dtype=np.int64)
        stack = np.empty(g.n, dtype=np.int64)
        clamp = g.clamp.astype(np.int64)
        state = {"gen": 0, "moves": 1}

        def moves(k):
            state["gen"], touched = _wolff_moves(x, indptr, indices, free, clamp, p_add, k, rng,
                                                 stamp, stack, state["gen"])
            return touched

        # A sweep is a fixed number of cluster moves, sized from the mean
        # cluster during burn-in. A state-dependent stopping rule would bias
        # the recorded configurations.
        done = total = 0
        while done < max(burn_in, 1):
            total += moves(1)
            done = total // free.size
        calls = max(1, state["gen"])
        state["moves"] = max(1, round(free.size * calls / total))

        def run(k):
            # one extra move on a coin flip breaks the parity lock at small beta
            moves(k * state["moves"] + int(rng.integers(0, 2)))

    if sampler is Sampler.METROPOLIS and burn_in:
        run(burn_in)
    for t in range(count):
        run(thin)
        counts[t] = int((x > 0).sum())
    return SampleBatch(counts, g.n, seed, sampler, burn_in, thin)


def sample_from_pmf(pmf: MagnetizationPmf, count: int, seed: int = 0) -> SampleBatch:
    """Independent draws of the +1 count from an exact law."""
    rng = derive_rng(seed, 1)
    p = pmf.probs
    counts = rng.choice(pmf.n + 1, size=count, p=p / p.sum())
    return SampleBatch(counts.astype(np.int64), pmf.n, seed, Sampler.EXACT)
