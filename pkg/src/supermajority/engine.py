"""Exact partition functions and magnetization laws for the Ising prior.

Every solver returns the law of the +1 count ``k`` (equivalently the spin sum
``s = 2k - n``) as log-probabilities, together with ``log Z``. Arithmetic stays
in the log domain until the final normalisation.

Coupling convention: each edge contributes ``beta * x_i * x_j`` exactly once.
The complete graph instead uses the mean-field weight ``beta * s**2 / (2n)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np
from scipy.special import gammaln, logsumexp

from .graphs import GraphFamily, GraphInstance, build_graph

MAX_ENUMERATION_FREE_SPINS = 24
MAX_LATTICE_TRANSFER_SIDE = 8
_CHUNK_BITS = 18


class EngineError(ValueError):
    pass


@dataclass(frozen=True)
class ModelParams:
    beta: float
    h: float = 0.0

    def __post_init__(self):
        if not (self.beta >= 0 and math.isfinite(self.beta)):
            raise EngineError(f"beta must be finite and >= 0, got {self.beta}")
        if not math.isfinite(self.h):
            raise EngineError(f"h must be finite, got {self.h}")


@dataclass(frozen=True)
class MagnetizationPmf:
    """Law of the +1 count k in 0..n; the spin sum is 2k - n."""

    n: int
    log_probs: np.ndarray
    log_partition: float

    @property
    def counts(self) -> np.ndarray:
        return np.arange(self.n + 1)

    @property
    def support(self) -> np.ndarray:
        return 2 * self.counts - self.n

    @property
    def xbar(self) -> np.ndarray:
        return self.support / self.n

    @property
    def probs(self) -> np.ndarray:
        return np.exp(self.log_probs)

    def mean(self) -> float:
        return float(np.dot(self.probs, self.xbar))

    def var(self) -> float:
        p = self.probs
        m = np.dot(p, self.xbar)
        return float(np.dot(p, (self.xbar - m) ** 2))

    def cdf(self) -> np.ndarray:
        return np.minimum(np.cumsum(self.probs), 1.0)

    def reflect(self) -> "MagnetizationPmf":
        return MagnetizationPmf(self.n, self.log_probs[::-1].copy(), self.log_partition)

    def total_variation(self, other: "MagnetizationPmf") -> float:
        return 0.5 * float(np.abs(self.probs - other.probs).sum())


def _from_log_weights(n: int, log_w: np.ndarray) -> MagnetizationPmf:
    log_z = float(logsumexp(log_w))
    return MagnetizationPmf(n, log_w - log_z, log_z)


def hamiltonian_weight(g: GraphInstance, params: ModelParams, x) -> float:
    """Log of the unnormalised prior weight of configuration ``x``."""
    x = np.asarray(x, dtype=np.int64)
    if x.shape != (g.n,):
        raise EngineError(f"configuration length {x.size} does not match n={g.n}")
    s = int(x.sum())
    if g.family is GraphFamily.COMPLETE:
        return params.beta * s * s / (2 * g.n) + params.h * s
    bonds = int(np.sum(x[g.edges[:, 0]] * x[g.edges[:, 1]])) if g.num_edges else 0
    return params.beta * bonds + params.h * s


# ---------------------------------------------------------------- enumeration

def exact_enumeration(g: GraphInstance, params: ModelParams) -> MagnetizationPmf:
    """Brute-force sum over all configurations of the unclamped spins."""
    free = np.flatnonzero(g.clamp == 0)
    nf = free.size
    if nf > MAX_ENUMERATION_FREE_SPINS:
        raise EngineError(f"{nf} free spins is too many to enumerate")
    fixed = g.clamp.astype(np.int64)
    complete = g.family is GraphFamily.COMPLETE
    e0, e1 = g.edges[:, 0], g.edges[:, 1]

    acc = np.full(g.n + 1, -np.inf)
    total = 1 << nf
    chunk = 1 << _CHUNK_BITS
    for start in range(0, total, chunk):
        states = np.arange(start, min(total, start + chunk), dtype=np.int64)
        x = np.broadcast_to(fixed, (states.size, g.n)).copy()
        bits = (states[:, None] >> np.arange(nf)) & 1
        x[:, free] = 2 * bits - 1
        s = x.sum(axis=1)
        if complete:
            lw = params.beta * s * s / (2.0 * g.n) + params.h * s
        else:
            bonds = (x[:, e0] * x[:, e1]).sum(axis=1) if g.num_edges else 0
            lw = params.beta * bonds + params.h * s
        k = (s + g.n) // 2
        top = lw.max()
        part = np.bincount(k, weights=np.exp(lw - top), minlength=g.n + 1)
        with np.errstate(divide="ignore"):
            acc = np.logaddexp(acc, np.log(part) + top)
    return _from_log_weights(g.n, acc)


# ------------------------------------------------------------ transfer matrix

def _scaled_transfer(beta: float, h: float):
    """Eigen-decomposition of exp(-(beta+|h|)) * T, T(x,x') = exp(beta x x' + h (x+x')/2)."""
    shift = beta + abs(h)
    t = np.array([[math.exp(beta + h - shift), math.exp(-beta - shift)],
                  [math.exp(-beta - shift), math.exp(beta - h - shift)]])
    vals, vecs = np.linalg.eigh(t)
    return shift, vals, vecs


def _signed_pow(r: float, m: int) -> float:
    mag = abs(r) ** m
    return -mag if (r < 0 and m % 2) else mag


def chain_ring_log_partition(params: ModelParams, n: int, kind) -> float:
    """Exact finite-n log Z of the chain or ring from the 2x2 transfer matrix.

    Only eigenvalue ratios are raised to the power n, so this stays finite
    for n in the millions.
    """
    kind = GraphFamily(kind)
    shift, vals, vecs = _scaled_transfer(params.beta, params.h)
    lam = vals[1]
    if kind is GraphFamily.RING:
        if n < 3:
            raise EngineError("ring needs n >= 3")
        return n * (shift + math.log(lam)) + math.log1p(_signed_pow(vals[0] / lam, n))
    if kind is GraphFamily.CHAIN:
        if n < 2:
            raise EngineError("chain needs n >= 2")
        b = np.array([math.exp(params.h / 2), math.exp(-params.h / 2)])
        coef = (vecs.T @ b) ** 2
        total = coef[1] + coef[0] * _signed_pow(vals[0] / lam, n - 1)
        return (n - 1) * (shift + math.log(lam)) + math.log(total)
    raise EngineError(f"transfer matrix covers chain and ring only, got {kind.value}")


def star_log_partition(params: ModelParams, n: int) -> float:
    """Hub conditioning: leaves are independent given the hub spin."""
    beta, h = params.beta, params.h
    terms = [c * h + (n - 1) * _log2cosh(h + c * beta) for c in (1, -1)]
    return float(np.logaddexp(*terms))


def wheel_log_partition(params: ModelParams, n: int) -> float:
    """Hub conditioning: the rim is a ring in field h + c*beta."""
    beta, h = params.beta, params.h
    terms = [c * h + chain_ring_log_partition(ModelParams(beta, h + c * beta), n - 1, GraphFamily.RING)
             for c in (1, -1)]
    return float(np.logaddexp(*terms))


def _log2cosh(x: float) -> float:
    a = abs(x)
    return a + math.log1p(math.exp(-2 * a))


# ------------------------------------------------------------ dynamic programs

@numba.njit(cache=True)
def _lae(a, b):
    if a == -np.inf:
        return b
    if b == -np.inf:
        return a
    if a > b:
        return a + math.log1p(math.exp(b - a))
    return b + math.log1p(math.exp(a - b))


@numba.njit(cache=True)
def _path_dp(n, beta, h, first, close):
    """Log weights of the +1 count along a path of n spins.

    ``first`` pins spin 0 (+1/-1) or leaves it free (0); ``close`` adds the
    bond between the last spin and the pinned first spin.
    """
    lp = np.full(n + 1, -np.inf)
    lm = np.full(n + 1, -np.inf)
    if first >= 0:
        lp[1] = h
    if first <= 0:
        lm[0] = -h
    for i in range(1, n):
        for k in range(i + 1, -1, -1):
            if k >= 1:
                new_p = _lae(lp[k - 1] + beta, lm[k - 1] - beta) + h
            else:
                new_p = -np.inf
            new_m = _lae(lp[k] - beta, lm[k] + beta) - h
            lp[k] = new_p
            lm[k] = new_m
    out = np.empty(n + 1)
    for k in range(n + 1):
        if close:
            out[k] = _lae(lp[k] + beta * first, lm[k] - beta * first)
        else:
            out[k] = _lae(lp[k], lm[k])
    return out


def _ring_log_weights(n: int, beta: float, h: float) -> np.ndarray:
    return np.logaddexp(_path_dp(n, beta, h, 1, True), _path_dp(n, beta, h, -1, True))


def _binomial_log_weights(m: int, field: float) -> np.ndarray:
    k = np.arange(m + 1)
    return gammaln(m + 1) - gammaln(k + 1) - gammaln(m - k + 1) + field * (2 * k - m)


def _hub_combine(n: int, h: float, rim_plus: np.ndarray, rim_minus: np.ndarray) -> np.ndarray:
    # hub=+1 shifts the count by one
    out = np.full(n + 1, -np.inf)
    out[1:] = rim_plus + h
    out[:-1] = np.logaddexp(out[:-1], rim_minus - h)
    return out


MIN_DP_SIZE = {GraphFamily.CHAIN: 2, GraphFamily.RING: 3, GraphFamily.STAR: 2,
               GraphFamily.WHEEL: 4, GraphFamily.EMPTY: 1}


def magnetization_pmf_dp(family, params: ModelParams, n: int) -> MagnetizationPmf:
    """Exact law of the +1 count for the chain, ring, star and wheel.

    O(n^2) time, O(n) memory. The empty graph is accepted as the binomial case.
    """
    family = GraphFamily(family)
    if family not in MIN_DP_SIZE:
        raise EngineError(f"no dynamic program for {family.value}")
    if n < MIN_DP_SIZE[family]:
        raise EngineError(f"{family.value} needs n >= {MIN_DP_SIZE[family]}")
    beta, h = float(params.beta), float(params.h)
    if family is GraphFamily.EMPTY:
        log_w = _binomial_log_weights(n, h)
    elif family is GraphFamily.CHAIN:
        log_w = _path_dp(n, beta, h, 0, False)
    elif family is GraphFamily.RING:
        log_w = _ring_log_weights(n, beta, h)
    elif family is GraphFamily.STAR:
        log_w = _hub_combine(n, h, _binomial_log_weights(n - 1, h + beta),
                             _binomial_log_weights(n - 1, h - beta))
    else:
        log_w = _hub_combine(n, h, _ring_log_weights(n - 1, beta, h + beta),
                             _ring_log_weights(n - 1, beta, h - beta))
    return _from_log_weights(n, log_w)


def magnetization_pmf_curie_weiss(params: ModelParams, n: int) -> MagnetizationPmf:
    """Mean-field prior exp(beta s^2 / (2n) + h s) on the complete graph."""
    if n < 1:
        raise EngineError("n must be >= 1")
    k = np.arange(n + 1)
    s = 2 * k - n
    log_w = (gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1)
             + params.beta * s.astype(float) ** 2 / (2 * n) + params.h * s)
    return _from_log_weights(n, log_w)


def magnetization_pmf_lattice(side: int, params: ModelParams, clamp: np.ndarray | None = None) -> MagnetizationPmf:
    """Row-to-row transfer over 2^side row states; exact for small lattices."""
    if side > MAX_LATTICE_TRANSFER_SIDE:
        raise EngineError(f"lattice side {side} too large for the row transfer solver")
    n = side * side
    clamp = np.zeros(n, dtype=np.int8) if clamp is None else np.asarray(clamp).reshape(side, side)
    clamp = clamp.reshape(side, side)
    states = np.arange(1 << side)
    rows = 2 * ((states[:, None] >> np.arange(side)) & 1) - 1  # (R, side)
    pops = ((rows + 1) // 2).sum(axis=1)
    intra = params.beta * (rows[:, :-1] * rows[:, 1:]).sum(axis=1) + params.h * rows.sum(axis=1)
    inter = params.beta * (rows @ rows.T)

    def allowed(r):
        fixed = clamp[r]
        ok = np.all((fixed == 0) | (rows == fixed), axis=1)
        return np.flatnonzero(ok)

    idx = allowed(0)
    # W[state, k]
    w = np.full((idx.size, n + 1), -np.inf)
    w[np.arange(idx.size), pops[idx]] = intra[idx]
    for r in range(1, side):
        nxt = allowed(r)
        new = np.full((nxt.size, n + 1), -np.inf)
        for j, t in enumerate(nxt):
            shifted = logsumexp(w + inter[idx, t][:, None], axis=0)
            p = pops[t]
            new[j, p:] = shifted[: n + 1 - p] + intra[t]
        w, idx = new, nxt
    return _from_log_weights(n, logsumexp(w, axis=0))


def magnetization_pmf(g: GraphInstance, params: ModelParams) -> MagnetizationPmf:
    """Pick the specialised exact solver for ``g``."""
    if g.family is GraphFamily.COMPLETE:
        return magnetization_pmf_curie_weiss(params, g.n)
    if g.family is GraphFamily.LATTICE:
        return magnetization_pmf_lattice(g.side, params, g.clamp)
    return magnetization_pmf_dp(g.family, params, g.n)


def exact_log_partition(g: GraphInstance, params: ModelParams) -> float:
    """Closed-form or transfer-matrix log Z, without building the pmf."""
    fam, n = g.family, g.n
    if fam is GraphFamily.EMPTY:
        return n * _log2cosh(params.h)
    if fam in (GraphFamily.CHAIN, GraphFamily.RING):
        return chain_ring_log_partition(params, n, fam)
    if fam is GraphFamily.STAR:
        return star_log_partition(params, n)
    if fam is GraphFamily.WHEEL:
        return wheel_log_partition(params, n)
    return magnetization_pmf(g, params).log_partition


def finite_n_free_entropy(source, n: int | None = None) -> float:
    """(1/n) log Z_n from a pmf or a raw log-partition value."""
    if isinstance(source, MagnetizationPmf):
        return source.log_partition / source.n
    if n is None:
        raise EngineError("n is required with a raw log-partition value")
    return float(source) / n


def free_entropy_at(family, n: int, beta: float, h: float) -> float:
    g = build_graph(family, n)
    return exact_log_partition(g, ModelParams(beta, h)) / n
