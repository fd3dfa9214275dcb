"""Sweep drivers behind the CLI subcommands.

Each command expands a :class:`RunConfig` into sweep points, evaluates every
point independently (optionally in worker processes) with its own derived
seed, and merges rows in sweep order. Output depends only on the config.
"""
from __future__ import annotations

import hashlib
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import __version__
from .analytics import LATTICE_BETA_C, LimitKind, asymptotic_summary, pe_limit
from .detection import (EXACT_SMALL_N_MAX, RB_EXACT_MAX_N, ChannelParams, DetectionError, DetectionTask,
                        Estimator, InfeasibleEstimator, ThresholdMode, WindowMode, concentration_probe,
                        estimate_pe, log_rate_fit)
from .engine import ModelParams, magnetization_pmf
from .graphs import Boundary, GraphFamily, build_graph
from .mcmc import DEFAULT_BURN_IN, DEFAULT_THIN, Sampler, mcmc_sample, sample_from_pmf
from .rng import derive_seed

log = logging.getLogger(__name__)

DEFAULT_MC_TRIALS = 100_000
DEFAULT_LATTICE_SAMPLES = 10_000


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    command: str
    graph: tuple = ("wheel",)
    n: tuple = (1001,)
    beta: tuple = (0.2,)
    h: tuple = (0.0,)
    S: tuple = (0.0,)  # floats or the string "mu"
    p: tuple = (0.3,)
    delta: float = 1.0
    estimator: str | None = None
    threshold_mode: str = "delta-scaled"
    sampler: str = "wolff"
    burn_in: int = DEFAULT_BURN_IN
    thin: int = DEFAULT_THIN
    trials: int | None = None
    seed: int = 0
    boundary: str = "free"
    width: float = 1.0
    window: str = "scaled"
    workers: int = 1

    def to_dict(self) -> dict:
        return asdict(self)

    def config_hash(self) -> str:
        d = self.to_dict()
        d.pop("workers")
        blob = json.dumps(d, sort_keys=True, default=str).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


@dataclass
class Table:
    columns: list
    rows: list = field(default_factory=list)
    manifest: dict = field(default_factory=dict)


# ----------------------------------------------------------------- helpers

def _families(cfg):
    try:
        return [GraphFamily(g) for g in cfg.graph]
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def validate(cfg: RunConfig) -> None:
    for name in ("n", "beta"):
        vals = getattr(cfg, name)
        if not vals:
            raise ConfigError(f"{name} list is empty")
        if any(b <= a for a, b in zip(vals, vals[1:])):
            raise ConfigError(f"{name} list must be strictly increasing")
    if any(b < 0 for b in cfg.beta):
        raise ConfigError("beta must be >= 0")
    if any(not 0 < p < 0.5 for p in cfg.p):
        raise ConfigError("p must lie in (0, 1/2)")
    if not 0 < cfg.delta <= 1:
        raise ConfigError("delta must lie in (0, 1]")
    if cfg.burn_in < 0 or cfg.thin <= 0 or (cfg.trials is not None and cfg.trials <= 0):
        raise ConfigError("burn-in must be >= 0, thin and trials positive")
    for s in cfg.S:
        if s != "mu" and not -1 < s < 1:
            raise ConfigError(f"S must lie in (-1, 1) or be 'mu', got {s}")
    try:
        Boundary(cfg.boundary)
        Sampler(cfg.sampler)
        ThresholdMode(cfg.threshold_mode)
        WindowMode(cfg.window)
        if cfg.estimator is not None:
            Estimator(cfg.estimator)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    fams = _families(cfg)
    if cfg.boundary != "free" and any(f is not GraphFamily.LATTICE for f in fams):
        raise ConfigError("boundary applies to the lattice only")
    if cfg.sampler == "wolff" and any(f is GraphFamily.LATTICE for f in fams) and any(h != 0 for h in cfg.h):
        raise ConfigError("the Wolff sampler needs h = 0; use --sampler metropolis")


def resolve_S(S, family: GraphFamily, beta: float, h: float) -> float:
    if S != "mu":
        return float(S)
    mu = asymptotic_summary(family, beta, h).mu
    if math.isnan(mu):
        raise ConfigError(f"S=mu has no closed form for {family.value} at h={h}")
    return mu


def _task(cfg, S, p):
    return DetectionTask(S, ChannelParams(p, cfg.delta), ThresholdMode(cfg.threshold_mode))


def _graph(family, n, cfg):
    boundary = cfg.boundary if family is GraphFamily.LATTICE else "free"
    try:
        return build_graph(family, n, boundary)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _sample_lattice(g, params, cfg, seed):
    count = cfg.trials or DEFAULT_LATTICE_SAMPLES
    return mcmc_sample(g, params, cfg.sampler, count, cfg.burn_in, cfg.thin, seed)


def _limit_value(family, beta, h, S, p):
    try:
        lim = pe_limit(asymptotic_summary(family, beta, h), S, p)
    except ValueError:
        return None
    return None if lim.kind is LimitKind.BOUNDED_POSITIVE else lim.value


def _pick_estimator(cfg, n, lattice):
    """Requested estimator, or a fallback with a note when it is infeasible."""
    if cfg.estimator is None:
        if cfg.delta < 1:
            return Estimator.MC, None
        return (Estimator.RB_GAUSS if lattice else Estimator.RB_EXACT), None
    est = Estimator(cfg.estimator)
    if cfg.delta < 1 and est is not Estimator.MC:
        raise InfeasibleEstimator(f"{est.value} needs delta = 1; use --estimator mc")
    if est in (Estimator.EXACT, Estimator.RB_EXACT):
        limit = EXACT_SMALL_N_MAX if est is Estimator.EXACT else RB_EXACT_MAX_N
        if lattice:
            return Estimator.RB_GAUSS, f"{est.value} unavailable for sampled lattice; used rb-gauss"
        if n > limit:
            return Estimator.RB_GAUSS, f"{est.value} infeasible at n={n}; used rb-gauss"
    return est, None


def _estimate(source, task, est, cfg, seed):
    if est is Estimator.MC and not hasattr(source, "plus_counts"):
        source = sample_from_pmf(source, cfg.trials or DEFAULT_MC_TRIALS, seed)
    return estimate_pe(source, task, est, seed)


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "pass" if v else "fail"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


# ------------------------------------------------------------ point workers

def _cdf_point(cfg: RunConfig, point):
    family, n, beta, seed = point
    h = cfg.h[0]
    g = _graph(family, n, cfg)
    params = ModelParams(beta, h)
    if family is GraphFamily.LATTICE:
        batch = _sample_lattice(g, params, cfg, seed)
        xs, mult = np.unique(batch.magnetizations, return_counts=True)
        cdf = np.cumsum(mult) / mult.sum()
        method = f"mcmc-{cfg.sampler}"
    else:
        pmf = magnetization_pmf(g, params)
        xs, cdf = pmf.xbar, pmf.cdf()
        method = "exact"
    rows = [(family.value, n, beta, h, g.boundary.value, float(x), float(c)) for x, c in zip(xs, cdf)]
    return rows, {"method": method}


def _pe_point(cfg: RunConfig, point):
    family, n, beta, seed = point
    h, p = cfg.h[0], cfg.p[0]
    S = resolve_S(cfg.S[0], family, beta, h)
    task = _task(cfg, S, p)
    task.check_level(n)
    lattice = family is GraphFamily.LATTICE
    est, note = _pick_estimator(cfg, n, lattice)
    g = _graph(family, n, cfg)
    params = ModelParams(beta, h)
    source = _sample_lattice(g, params, cfg, seed) if lattice else magnetization_pmf(g, params)
    r = _estimate(source, task, est, cfg, seed)
    row = (beta, S, n, r.pe, r.stderr, r.method.value, r.hoeffding_bound, r.q_limit_value,
           _limit_value(family, beta, h, S, p))
    return [row], {"method": r.method.value, "note": note}


def _pe_beta_point(cfg: RunConfig, point):
    family, n, beta, seed = point
    h, p = cfg.h[0], cfg.p[0]
    S = resolve_S(cfg.S[0], family, beta, h)
    task = _task(cfg, S, p)
    task.check_level(n)
    est, note = _pick_estimator(cfg, n, True)
    g = _graph(family, n, cfg)
    batch = _sample_lattice(g, ModelParams(beta, h), cfg, seed)
    r = _estimate(batch, task, est, cfg, seed)
    return [(beta, r.pe, r.stderr, len(batch), g.boundary.value)], {"method": r.method.value, "note": note}


def _bounds_point(cfg: RunConfig, point):
    family, n, beta, h, S, p, _ = point
    pmf = magnetization_pmf(_graph(family, n, cfg), ModelParams(beta, h))
    rows = []
    task = _task(replace(cfg, delta=1.0), S, p)
    try:
        task.check_level(n)
    except DetectionError:
        return [(family.value, n, beta, h, S, p, None, None, None, "skipped")], {"method": "skipped"}
    r = estimate_pe(pmf, task, Estimator.EXACT)
    ok = r.pe <= r.hoeffding_bound
    rows.append((family.value, n, beta, h, S, p, r.pe, r.hoeffding_bound, r.q_limit_value, ok))
    return rows, {"method": "exact"}


def _probe_point(cfg: RunConfig, point):
    family, n, beta, seed = point
    h = cfg.h[0]
    S = resolve_S(cfg.S[0], family, beta, h)
    g = _graph(family, n, cfg)
    params = ModelParams(beta, h)
    if family is GraphFamily.LATTICE:
        source = _sample_lattice(g, params, cfg, seed)
    else:
        source = magnetization_pmf(g, params)
    r = concentration_probe(source, S, cfg.width, cfg.window)
    return [(beta, n, r.probability, r.stderr, r.log_probability)], {"method": "probe"}


_WORKERS = {
    "cdf": _cdf_point,
    "pe-vs-n": _pe_point,
    "pe-vs-beta": _pe_beta_point,
    "bounds-check": _bounds_point,
    "probe-concentration": _probe_point,
}

COLUMNS = {
    "cdf": ["family", "n", "beta", "h", "boundary", "xbar", "cdf"],
    "pe-vs-n": ["beta", "S", "n", "pe", "stderr", "method", "hoeffding_bound", "q_limit_value", "pe_limit"],
    "pe-vs-beta": ["beta", "pe", "stderr", "n_samples", "boundary"],
    "bounds-check": ["family", "n", "beta", "h", "S", "p", "pe", "hoeffding_bound", "q_limit_value", "status"],
    "probe-concentration": ["beta", "n", "probability", "stderr", "log_probability"],
}


def _timed(args):
    command, cfg, point = args
    t0 = time.perf_counter()
    rows, info = _WORKERS[command](cfg, point)
    info["wall_seconds"] = time.perf_counter() - t0
    return rows, info


def _points(cfg: RunConfig):
    if cfg.command == "bounds-check":
        pts = [(f, n, b, h, float(S), p) for f in _families(cfg) for n in cfg.n for b in cfg.beta
               for h in cfg.h for S in cfg.S for p in cfg.p]
    else:
        family = _families(cfg)[0]
        if cfg.command == "pe-vs-beta" and family is not GraphFamily.LATTICE:
            raise ConfigError("pe-vs-beta scans the lattice only")
        pts = [(family, n, b) for b in cfg.beta for n in cfg.n]
    return [pt + (derive_seed(cfg.seed, i),) for i, pt in enumerate(pts)]


def _point_key(cfg, pt):
    if cfg.command == "bounds-check":
        f, n, b, h, S, p, _ = pt
        return {"family": f.value, "n": n, "beta": b, "h": h, "S": S, "p": p}
    f, n, b, seed = pt
    return {"family": f.value, "n": n, "beta": b, "seed": seed}


def run(cfg: RunConfig) -> Table:
    """Evaluate every sweep point and merge rows in sweep order."""
    if cfg.command not in _WORKERS:
        raise ConfigError(f"unknown command {cfg.command!r}")
    validate(cfg)
    if cfg.command == "cdf" and GraphFamily(cfg.graph[0]) is GraphFamily.LATTICE \
            and cfg.estimator in ("exact", "rb-exact"):
        raise ConfigError("the lattice CDF comes from sampling; exact estimators do not apply")
    if cfg.command == "bounds-check":
        for f in _families(cfg):
            if f is GraphFamily.LATTICE:
                raise ConfigError("bounds-check needs an exact-law family")
        if max(cfg.n) > EXACT_SMALL_N_MAX:
            raise ConfigError(f"bounds-check needs n <= {EXACT_SMALL_N_MAX}")
    if any(s == "mu" for s in cfg.S) and cfg.command == "bounds-check":
        raise ConfigError("bounds-check needs numeric S values")

    points = _points(cfg)
    jobs = [(cfg.command, cfg, pt) for pt in points]
    if cfg.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(_timed, jobs))
    else:
        results = [_timed(j) for j in jobs]

    chash = cfg.config_hash()
    table = Table(COLUMNS[cfg.command] + ["config_hash"])
    per_point = []
    for pt, (rows, info) in zip(points, results):
        table.rows.extend(tuple(r) + (chash,) for r in rows)
        per_point.append({**_point_key(cfg, pt), **info})

    manifest = {"tool": "supermajority", "version": __version__, "command": cfg.command,
                "config": cfg.to_dict(), "config_hash": chash, "seed": cfg.seed, "points": per_point}
    if cfg.command == "pe-vs-beta":
        manifest["beta_c"] = LATTICE_BETA_C
    if cfg.command == "bounds-check":
        status = [r[9] for r in table.rows]
        manifest["violations"] = sum(1 for s in status if s is False)
        manifest["skipped"] = sum(1 for s in status if s == "skipped")
        if manifest["skipped"] == len(status):
            raise ConfigError("every grid point has an integer n(1+S)/2")
    if cfg.command == "probe-concentration":
        manifest["log_rate_slope"] = _slopes(table)
    table.manifest = manifest
    return table


def _slopes(table):
    out = {}
    by_beta = {}
    for beta, n, _, _, lp, _ in table.rows:
        by_beta.setdefault(beta, []).append((n, lp))
    for beta, pairs in by_beta.items():
        ns, lps = zip(*pairs)
        try:
            out[repr(beta)] = log_rate_fit(ns, lps)
        except DetectionError:
            out[repr(beta)] = None
    return out


def asymptotics_record(family, beta, h, S, p) -> dict:
    summary = asymptotic_summary(family, beta, h)
    rec = {"summary": summary.to_dict()}
    if S is not None:
        S = resolve_S(S, GraphFamily(family), beta, h)
        try:
            rec["pe_limit"] = pe_limit(summary, S, p).to_dict()
        except ValueError as exc:
            rec["pe_limit"] = None
            rec["note"] = str(exc)
        rec["S"] = S
        rec["p"] = p
    return rec


def write_csv(table: Table, stream) -> None:
    import csv
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(table.columns)
    for row in table.rows:
        w.writerow([_fmt(v) for v in row])


def to_json(table: Table) -> dict:
    return {"manifest": table.manifest, "columns": table.columns,
            "rows": [[_json_value(v) for v in r] for r in table.rows]}


def _json_value(v):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return float(v) if math.isfinite(v) else None
    return v
