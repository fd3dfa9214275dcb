"""Noisy polling channel, the naive supermajority detector, and estimators
of its error probability over an exact law or a sample batch.

Sources are either a :class:`MagnetizationPmf` (deterministic estimators) or a
:class:`SampleBatch` (Monte Carlo estimators with a standard error).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.special import log_ndtr, logsumexp
from scipy.stats import binom

from .analytics import detector_constants
from .engine import MagnetizationPmf
from .mcmc import SampleBatch, series_stderr
from .rng import derive_rng

EXACT_SMALL_N_MAX = 2000
RB_EXACT_MAX_N = 50_000
MC_CHUNK = 4096
_INT_TOL = 1e-9


class DetectionError(ValueError):
    pass


class InfeasibleEstimator(DetectionError):
    pass


class ThresholdMode(str, Enum):
    DELTA_SCALED = "delta-scaled"
    PAPER_LITERAL = "paper-literal"


class Estimator(str, Enum):
    EXACT = "exact"
    RB_EXACT = "rb-exact"
    RB_GAUSS = "rb-gauss"
    MC = "mc"


@dataclass(frozen=True)
class ChannelParams:
    p: float
    delta: float = 1.0

    def __post_init__(self):
        if not 0 <= self.p < 0.5:
            raise DetectionError(f"crossover must lie in [0, 1/2), got {self.p}")
        if not 0 < self.delta <= 1:
            raise DetectionError(f"observation fraction must lie in (0, 1], got {self.delta}")


@dataclass(frozen=True)
class DetectionTask:
    S: float
    channel: ChannelParams
    threshold_mode: ThresholdMode = ThresholdMode.DELTA_SCALED

    def __post_init__(self):
        if not -1 < self.S < 1:
            raise DetectionError(f"S must lie in (-1, 1), got {self.S}")

    @property
    def threshold(self) -> float:
        t = (1 - 2 * self.channel.p) * self.S
        if self.threshold_mode is ThresholdMode.DELTA_SCALED:
            t *= self.channel.delta
        return t

    def level_count(self, n: int) -> float:
        return n * (1 + self.S) / 2

    def check_level(self, n: int) -> None:
        """The truth label is undefined when n(1+S)/2 is an integer."""
        c = self.level_count(n)
        if abs(c - round(c)) < _INT_TOL:
            raise DetectionError(f"n(1+S)/2 = {c:.6g} is an integer for n={n}, S={self.S}")

    def truth_positive(self, k, n: int):
        """Boolean (array) of k > n(1+S)/2."""
        return np.asarray(k) > self.level_count(n)

    def plus_threshold(self, n: int) -> int:
        """Smallest +1 count B of a full poll with (2B - n)/n >= threshold."""
        return math.ceil(n * (1 + self.threshold) / 2 - _INT_TOL)


@dataclass(frozen=True)
class ErrorEstimate:
    pe: float
    stderr: float
    method: Estimator
    n: int
    hoeffding_bound: float | None = None
    hoeffding_stderr: float = 0.0
    q_limit_value: float | None = None
    log_pe: float | None = None

    def to_dict(self) -> dict:
        return {"pe": self.pe, "stderr": self.stderr, "method": self.method.value, "n": self.n,
                "hoeffding_bound": self.hoeffding_bound, "hoeffding_stderr": self.hoeffding_stderr,
                "q_limit_value": self.q_limit_value, "log_pe": self.log_pe}


# ------------------------------------------------------------------- channel

def measure(x, channel: ChannelParams, rng: np.random.Generator) -> np.ndarray:
    """Poll each member with probability delta through a binary symmetric channel."""
    x = np.asarray(x, dtype=np.int64)
    flip = rng.random(x.size) < channel.p
    seen = rng.random(x.size) < channel.delta
    return np.where(seen, np.where(flip, -x, x), 0)


def supermajority(xbar: float, S: float) -> int:
    if xbar == S:
        raise DetectionError("average sentiment equals the supermajority level")
    return 1 if xbar > S else -1


def detect(ybar: float, task: DetectionTask) -> int:
    """Naive detector; a measured average exactly on the threshold reads as +1."""
    return 1 if ybar >= task.threshold else -1


# ------------------------------------------------------ conditional errors

def _require_full_poll(task: DetectionTask):
    if task.channel.delta != 1:
        raise InfeasibleEstimator("exact and Gaussian conditional errors need delta = 1")


def conditional_error_exact(k: int, n: int, task: DetectionTask) -> float:
    """P(detector disagrees with the truth | k members are +1), by convolving
    the two binomial +1 counts of the poll."""
    _require_full_poll(task)
    if n > EXACT_SMALL_N_MAX:
        raise InfeasibleEstimator(f"n={n} exceeds the convolution limit {EXACT_SMALL_N_MAX}")
    p = task.channel.p
    b1 = binom.pmf(np.arange(k + 1), k, 1 - p)
    b2 = binom.pmf(np.arange(n - k + 1), n - k, p)
    law = np.convolve(b1, b2)
    t = task.plus_threshold(n)
    t = min(max(t, 0), n + 1)
    if task.truth_positive(k, n):
        return float(law[:t].sum())
    return float(law[t:].sum())


def conditional_errors_fast(ks: np.ndarray, n: int, task: DetectionTask, width: float = 40.0) -> np.ndarray:
    """Vectorised exact conditional errors via windowed tail sums.

    Sums P(B2 = j) * P(B1 <= t-1-j) over a +-``width`` sd window of B2.
    """
    _require_full_poll(task)
    p = task.channel.p
    t = task.plus_threshold(n)
    out = np.empty(len(ks))
    for i, k in enumerate(ks):
        k = int(k)
        m = n - k
        sd = math.sqrt(m * p * (1 - p))
        lo = max(0, int(math.floor(m * p - width * sd - 1)))
        hi = min(m, int(math.ceil(m * p + width * sd + 1)))
        j = np.arange(lo, hi + 1)
        w = binom.pmf(j, m, p)
        if task.truth_positive(k, n):
            out[i] = np.dot(w, binom.cdf(t - 1 - j, k, 1 - p))
        else:
            out[i] = np.dot(w, binom.sf(t - 1 - j, k, 1 - p))
    return np.clip(out, 0.0, 1.0)


def log_conditional_error_gauss(k, n: int, task: DetectionTask):
    _require_full_poll(task)
    _, d_p = detector_constants(task.channel.p)
    xbar = (2 * np.asarray(k, dtype=float) - n) / n
    return log_ndtr(-d_p * math.sqrt(n) * np.abs(xbar - task.S))


def conditional_error_gauss(k, n: int, task: DetectionTask):
    """Q(D_p sqrt(n) |xbar - S|), the Gaussian approximation of the conditional error."""
    return np.exp(log_conditional_error_gauss(k, n, task))


# ---------------------------------------------------------------- estimators

def _expect(source, log_f):
    """Mean of exp(log_f(k)) over the source, with its standard error."""
    if isinstance(source, MagnetizationPmf):
        keep = np.isfinite(source.log_probs)
        log_mean = float(logsumexp(source.log_probs[keep] + log_f(source.counts[keep])))
        return math.exp(log_mean), 0.0, log_mean
    if isinstance(source, SampleBatch):
        ks, inverse = np.unique(source.plus_counts, return_inverse=True)
        lf = log_f(ks)
        log_mean = float(logsumexp(lf[inverse]) - math.log(len(source)))
        se = series_stderr(np.exp(lf)[inverse], source.correlated)
        return math.exp(log_mean), se, log_mean
    raise DetectionError(f"unsupported source type {type(source).__name__}")


def hoeffding_bound(source, task: DetectionTask) -> tuple[float, float]:
    """E[exp(-c n (xbar - S)^2)] with c = delta^2 C_p; returns (value, stderr)."""
    c_p, _ = detector_constants(task.channel.p) if task.channel.p > 0 else (0.5, None)
    c = task.channel.delta ** 2 * c_p
    n = source.n

    def log_f(ks):
        xbar = (2 * ks - n) / n
        return -c * n * (xbar - task.S) ** 2

    mean, se, _ = _expect(source, log_f)
    return mean, se


def q_limit_value(source, task: DetectionTask) -> float | None:
    """E[Q(D_p sqrt(n) |xbar - S|)] over the source (full polls only)."""
    if task.channel.delta != 1 or task.channel.p == 0:
        return None
    return _expect(source, lambda ks: log_conditional_error_gauss(ks, source.n, task))[0]


def _log_exact_errors(ks, n, task, method):
    if task.channel.p == 0:
        return np.full(len(ks), -np.inf)
    if method is Estimator.EXACT:
        g = np.array([conditional_error_exact(int(k), n, task) for k in ks])
    else:
        g = conditional_errors_fast(ks, n, task)
    with np.errstate(divide="ignore"):
        return np.log(g)


def _plain_mc(batch: SampleBatch, task: DetectionTask, seed: int) -> tuple[float, float]:
    n = batch.n
    p, delta = task.channel.p, task.channel.delta
    truth = task.truth_positive(batch.plus_counts, n)
    wrong = np.empty(len(batch), dtype=bool)
    for c, start in enumerate(range(0, len(batch), MC_CHUNK)):
        rng = derive_rng(seed, 2, c)
        k = batch.plus_counts[start:start + MC_CHUNK]
        from_plus = rng.multinomial(k, [delta * (1 - p), delta * p, 1 - delta])
        from_minus = rng.multinomial(n - k, [delta * p, delta * (1 - p), 1 - delta])
        net = (from_plus[:, 0] + from_minus[:, 0]) - (from_plus[:, 1] + from_minus[:, 1])
        decided_plus = net >= n * task.threshold - _INT_TOL
        wrong[start:start + MC_CHUNK] = decided_plus != truth[start:start + MC_CHUNK]
    pe = float(wrong.mean())
    if batch.correlated:
        return pe, series_stderr(wrong, True)
    return pe, math.sqrt(pe * (1 - pe) / len(batch))


def estimate_pe(source, task: DetectionTask, method=Estimator.RB_EXACT, seed: int = 0) -> ErrorEstimate:
    """Error probability of the naive detector with bound and limit companions.

    exact     sum over the exact law of the convolution conditional error
    rb-exact  same sum, tail-sum conditional error (larger n)
    rb-gauss  expectation of the Gaussian conditional error (law or batch)
    mc        channel simulation over a sample batch
    """
    method = Estimator(method)
    n = source.n
    task.check_level(n)
    is_pmf = isinstance(source, MagnetizationPmf)
    if method in (Estimator.EXACT, Estimator.RB_EXACT):
        if not is_pmf:
            raise DetectionError(f"{method.value} needs an exact law, not a sample batch")
        _require_full_poll(task)
        limit = EXACT_SMALL_N_MAX if method is Estimator.EXACT else RB_EXACT_MAX_N
        if n > limit:
            raise InfeasibleEstimator(f"n={n} exceeds the {method.value} limit {limit}")
        pe, se, log_pe = _expect(source, lambda ks: _log_exact_errors(ks, n, task, method))
    elif method is Estimator.RB_GAUSS:
        _require_full_poll(task)
        pe, se, log_pe = _expect(source, lambda ks: log_conditional_error_gauss(ks, n, task))
    else:
        if is_pmf:
            raise DetectionError("mc needs a sample batch; draw one with sample_from_pmf")
        pe, se = _plain_mc(source, task, seed)
        log_pe = math.log(pe) if pe > 0 else None
    bound, bound_se = hoeffding_bound(source, task)
    return ErrorEstimate(pe, se, method, n, bound, bound_se, q_limit_value(source, task),
                         log_pe if log_pe is None or math.isfinite(log_pe) else None)


# --------------------------------------------------------- concentration probe

class WindowMode(str, Enum):
    SCALED = "scaled"
    FIXED = "fixed"


@dataclass(frozen=True)
class ProbeResult:
    n: int
    probability: float
    stderr: float
    log_probability: float


def concentration_probe(source, S: float, width: float, mode=WindowMode.SCALED) -> ProbeResult:
    """P(sqrt(n)|xbar - S| <= width) (scaled) or P(|xbar - S| <= width) (fixed)."""
    mode = WindowMode(mode)
    n = source.n
    half = width / math.sqrt(n) if mode is WindowMode.SCALED else width
    k_all = np.arange(n + 1)
    inside = np.abs((2 * k_all - n) / n - S) <= half + 1e-12
    if not inside.any():
        raise DetectionError("window contains no attainable value of the average")

    def log_f(ks):
        return np.where(inside[ks], 0.0, -np.inf)

    p, se, log_p = _expect(source, log_f)
    return ProbeResult(n, p, se, log_p)


def log_rate_fit(ns, log_probs) -> float:
    """Least-squares slope of log P against n: an empirical exponential rate."""
    ns = np.asarray(ns, dtype=float)
    lp = np.asarray(log_probs, dtype=float)
    if ns.size < 2 or not np.all(np.isfinite(lp)):
        raise DetectionError("need at least two finite log-probabilities")
    return float(np.polyfit(ns, lp, 1)[0])
