"""Closed-form large-n behaviour: free entropy, mean or modes, variance, and
the limiting detection error of the naive detector."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from enum import Enum

import numpy as np
from scipy.optimize import brentq

from .graphs import GraphFamily

LATTICE_BETA_C = 0.5 * math.log1p(math.sqrt(2.0))
EQUALITY_TOL = 1e-9


class MeanKind(str, Enum):
    UNIQUE = "unique-mean"
    SYMMETRIC = "symmetric-modes"


class LimitKind(str, Enum):
    ZERO = "zero"
    ARCCOT = "arccot"
    HALF_ARCCOT = "half-arccot"
    BOUNDED_POSITIVE = "bounded-positive-unknown"


@dataclass(frozen=True)
class AsymptoticSummary:
    family: GraphFamily
    beta: float
    h: float
    psi: float
    mean_kind: MeanKind
    mu: float
    sigma2: float
    regime: str = ""

    def to_dict(self) -> dict:
        d = asdict(self)
        d["family"] = self.family.value
        d["mean_kind"] = self.mean_kind.value
        return {k: (None if isinstance(v, float) and not math.isfinite(v) else v) for k, v in d.items()}


@dataclass(frozen=True)
class PeLimit:
    kind: LimitKind
    value: float | None = None

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "value": self.value}


def detector_constants(p: float) -> tuple[float, float]:
    """Hoeffding exponent constant and Gaussian-limit slope for crossover p."""
    if not 0 < p < 0.5:
        raise ValueError(f"crossover must lie in (0, 1/2), got {p}")
    gap = 1 - 2 * p
    return 0.5 * gap * gap, gap / math.sqrt(4 * p * (1 - p))


def effective_crossover(p: float, delta: float) -> float:
    """Crossover of a full poll that is no better than polling a fraction delta."""
    if not 0 < p < 0.5:
        raise ValueError(f"crossover must lie in (0, 1/2), got {p}")
    if not 0 < delta <= 1:
        raise ValueError(f"observation fraction must lie in (0, 1], got {delta}")
    a = (1 - delta) * (1 - 2 * p)
    return (a + p) / (a + 1)


def _log2cosh(x: float) -> float:
    a = abs(x)
    return a + math.log1p(math.exp(-2 * a))


def _chain_terms(beta: float, field: float) -> tuple[float, float, float]:
    e4 = math.exp(-4 * beta)
    sh = math.sinh(field)
    root = math.sqrt(sh * sh + e4)
    psi = beta + math.log(math.cosh(field) + root)
    mu = sh / root
    sigma2 = e4 * math.cosh(field) / root ** 3
    return psi, mu, sigma2


def table1_summary(family, beta: float, h: float) -> AsymptoticSummary:
    """Table of limits for the empty, star, chain, ring and wheel graphs.

    At h = 0 the star and wheel split onto modes +-mu; the variance reported
    there is conditioned on a positive hub.
    """
    family = GraphFamily(family)
    if beta < 0:
        raise ValueError("beta must be >= 0")
    sign = 1.0 if h >= 0 else -1.0
    if family is GraphFamily.EMPTY:
        psi, mu, s2 = _log2cosh(h), math.tanh(h), 1 / math.cosh(h) ** 2
    elif family is GraphFamily.STAR:
        a = beta + abs(h)
        psi, mu, s2 = _log2cosh(a), math.tanh(a) * sign, 1 / math.cosh(a) ** 2
    elif family in (GraphFamily.CHAIN, GraphFamily.RING):
        psi, mu, s2 = _chain_terms(beta, h)
    elif family is GraphFamily.WHEEL:
        psi, mu, s2 = _chain_terms(beta, beta + abs(h))
        mu *= sign
    else:
        raise ValueError(f"no closed-form row for {family.value}")

    hub = family in (GraphFamily.STAR, GraphFamily.WHEEL)
    if hub and h == 0 and beta > 0:
        return AsymptoticSummary(family, beta, h, psi, MeanKind.SYMMETRIC, abs(mu), s2, "hub-split")
    return AsymptoticSummary(family, beta, h, psi, MeanKind.UNIQUE, mu, s2, "")


def _binary_entropy(q: float) -> float:
    if q <= 0 or q >= 1:
        return 0.0
    return -q * math.log(q) - (1 - q) * math.log1p(-q)


def curie_weiss_objective(mu: float, beta: float, h: float) -> float:
    return h * mu + 0.5 * beta * mu * mu + _binary_entropy((1 + mu) / 2)


def _stationary_points(beta: float, h: float, grid: int = 4001) -> list[float]:
    f = lambda m: m - math.tanh(beta * m + h)
    xs = np.linspace(-1.0, 1.0, grid)
    vals = xs - np.tanh(beta * xs + h)
    roots = [float(x) for x, v in zip(xs, vals) if v == 0.0]
    sg = np.sign(vals)
    for a, b, sa, sb in zip(xs[:-1], xs[1:], sg[:-1], sg[1:]):
        # compare signs, a product of tiny values underflows to zero
        if sa * sb < 0:
            roots.append(brentq(f, a, b, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500))
    return roots


def curie_weiss_fixed_point(beta: float, h: float) -> float:
    """Global maximiser of the mean-field free entropy (positive one at h=0)."""
    if h == 0 and beta > 1:
        # the nonzero branch can sit arbitrarily close to 0 near beta = 1
        f = lambda m: m - math.tanh(beta * m)
        return brentq(f, 1e-15, 1.0, xtol=1e-16, rtol=4 * np.finfo(float).eps, maxiter=1000)
    roots = _stationary_points(beta, h)
    return max(roots, key=lambda m: (curie_weiss_objective(m, beta, h), m))


def curie_weiss_summary(beta: float, h: float) -> AsymptoticSummary:
    if beta < 0:
        raise ValueError("beta must be >= 0")
    mu = curie_weiss_fixed_point(beta, h)
    psi = curie_weiss_objective(mu, beta, h)
    denom = 1 - beta + beta * mu * mu
    sigma2 = (1 - mu * mu) / denom if denom > 0 else math.inf
    if h == 0 and beta > 1:
        return AsymptoticSummary(GraphFamily.COMPLETE, beta, h, psi, MeanKind.SYMMETRIC, mu, sigma2,
                                 "supercritical")
    regime = "critical" if (h == 0 and beta == 1) else ("subcritical" if h == 0 else "field")
    return AsymptoticSummary(GraphFamily.COMPLETE, beta, h, psi, MeanKind.UNIQUE, mu, sigma2, regime)


def onsager_magnetization(beta: float) -> float:
    """Spontaneous magnetisation of the square lattice (zero below beta_c)."""
    if beta <= LATTICE_BETA_C:
        return 0.0
    return (1 - math.sinh(2 * beta) ** -4) ** 0.125


def lattice_summary(beta: float, h: float) -> AsymptoticSummary:
    """Only the phase and the h = 0 mean/mode are known in closed form here."""
    if beta < 0:
        raise ValueError("beta must be >= 0")
    nan = math.nan
    if h != 0:
        return AsymptoticSummary(GraphFamily.LATTICE, beta, h, nan, MeanKind.UNIQUE, nan, nan, "field")
    if beta > LATTICE_BETA_C:
        return AsymptoticSummary(GraphFamily.LATTICE, beta, h, nan, MeanKind.SYMMETRIC,
                                 onsager_magnetization(beta), nan, "supercritical")
    regime = "critical" if beta == LATTICE_BETA_C else "subcritical"
    return AsymptoticSummary(GraphFamily.LATTICE, beta, h, nan, MeanKind.UNIQUE, 0.0, nan, regime)


def asymptotic_summary(family, beta: float, h: float) -> AsymptoticSummary:
    family = GraphFamily(family)
    if family is GraphFamily.COMPLETE:
        return curie_weiss_summary(beta, h)
    if family is GraphFamily.LATTICE:
        return lattice_summary(beta, h)
    return table1_summary(family, beta, h)


def arccot(x: float) -> float:
    return math.pi / 2 - math.atan(x)


def pe_limit(summary: AsymptoticSummary, S: float, p: float, tol: float = EQUALITY_TOL) -> PeLimit:
    """Limit of the naive detector's error as n grows.

    Raises ValueError when the summary carries no usable mean (lattice with h != 0).
    """
    if not -1 < S < 1:
        raise ValueError("S must lie in (-1, 1)")
    _, d_p = detector_constants(p)
    if math.isnan(summary.mu):
        raise ValueError(f"no asymptotic mean available for {summary.family.value} at h={summary.h}")
    if summary.mean_kind is MeanKind.SYMMETRIC:
        critical = abs(abs(S) - summary.mu) <= tol
        half = True
    else:
        critical = abs(S - summary.mu) <= tol
        half = False
    if not critical:
        return PeLimit(LimitKind.ZERO, 0.0)
    if summary.family is GraphFamily.LATTICE or not math.isfinite(summary.sigma2):
        return PeLimit(LimitKind.BOUNDED_POSITIVE)
    value = arccot(d_p * math.sqrt(summary.sigma2)) / math.pi
    if half:
        return PeLimit(LimitKind.HALF_ARCCOT, value / 2)
    return PeLimit(LimitKind.ARCCOT, value)
