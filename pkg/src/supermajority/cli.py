"""Command-line entry point: ``supermajority <command> [flags]``.

Exit codes: 0 success, 2 invalid config, 3 infeasible estimator,
4 numeric failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import fields
from pathlib import Path

from .detection import DetectionError, InfeasibleEstimator
from .engine import EngineError
from .experiments import ConfigError, RunConfig, asymptotics_record, run, to_json, write_csv
from .graphs import GraphError
from .mcmc import SamplerError

EXIT_OK, EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_NUMERIC = 0, 2, 3, 4

COMMANDS = ["cdf", "pe-vs-n", "pe-vs-beta", "asymptotics", "bounds-check", "probe-concentration"]
LIST_KEYS = {"graph", "n", "beta", "h", "S", "p"}
_CASTS = {"n": int, "beta": float, "h": float, "p": float, "delta": float, "burn_in": int, "thin": int,
          "trials": int, "seed": int, "width": float, "workers": int}


def _s_value(v: str):
    return "mu" if v.strip().lower() == "mu" else float(v)


def _parse_value(key: str, raw: str):
    if key in LIST_KEYS:
        parts = [x for x in raw.split(",") if x.strip()]
        if key == "graph":
            return tuple(x.strip().lower() for x in parts)
        if key == "S":
            return tuple(_s_value(x) for x in parts)
        return tuple(_CASTS[key](x) for x in parts)
    if key in _CASTS:
        return _CASTS[key](raw)
    return raw.strip()


def read_config_file(path) -> dict:
    """Flat ``key = value`` lines; '#' starts a comment."""
    out = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="supermajority", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="flat key=value file; flags override it")
        sp.add_argument("--graph", help="empty,star,chain,ring,wheel,complete,lattice (comma list for bounds-check)")
        sp.add_argument("--n", help="member count(s), comma separated; lattice needs perfect squares")
        sp.add_argument("--beta", help="inverse temperature(s), comma separated")
        sp.add_argument("--h", help="external influence")
        sp.add_argument("--S", help="supermajority level, or 'mu' for the asymptotic mean")
        sp.add_argument("--p", help="crossover probability")
        sp.add_argument("--delta", help="observation fraction")
        sp.add_argument("--estimator", choices=["exact", "rb-exact", "rb-gauss", "mc"])
        sp.add_argument("--threshold-mode", choices=["delta-scaled", "paper-literal"])
        sp.add_argument("--sampler", choices=["metropolis", "wolff"])
        sp.add_argument("--burn-in")
        sp.add_argument("--thin")
        sp.add_argument("--trials")
        sp.add_argument("--seed")
        sp.add_argument("--boundary", choices=["free", "plus", "minus"])
        sp.add_argument("--width", help="probe window: B (scaled) or b (fixed)")
        sp.add_argument("--window", choices=["scaled", "fixed"])
        sp.add_argument("--workers", help="worker processes for sweep points")
        sp.add_argument("--out", help="output path (CSV, plus <out>.manifest.json)")
        sp.add_argument("--format", choices=["csv", "json"], default="csv")
    return parser


def resolve_config(args) -> RunConfig:
    raw = read_config_file(args.config) if args.config else {}
    for key in ("graph", "n", "beta", "h", "S", "p", "delta", "estimator", "threshold_mode", "sampler",
                "burn_in", "thin", "trials", "seed", "boundary", "width", "window", "workers"):
        val = getattr(args, key)
        if val is not None:
            raw[key] = val
    known = {f.name for f in fields(RunConfig)}
    unknown = set(raw) - known - {"out", "format"}
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    values = {}
    for key, val in raw.items():
        if key in ("out", "format"):
            continue
        try:
            values[key] = _parse_value(key, val) if isinstance(val, str) else val
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {exc}") from None
    return RunConfig(command=args.command, **values)


def _emit(table, args) -> None:
    if args.format == "json":
        text = json.dumps(to_json(table), indent=2)
        if args.out:
            Path(args.out).write_text(text + "\n")
        else:
            print(text)
        return
    if args.out:
        out = Path(args.out)
        with out.open("w", newline="") as fh:
            write_csv(table, fh)
        manifest = out.with_name(out.name + ".manifest.json")
        manifest.write_text(json.dumps(table.manifest, indent=2) + "\n")
    else:
        write_csv(table, sys.stdout)


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(message)s")
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
        if cfg.command == "asymptotics":
            rec = asymptotics_record(cfg.graph[0], cfg.beta[0], cfg.h[0], cfg.S[0], cfg.p[0])
            text = json.dumps(rec, indent=2)
            if args.out:
                Path(args.out).write_text(text + "\n")
            else:
                print(text)
            return EXIT_OK
        _emit(run(cfg), args)
    except InfeasibleEstimator as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (ConfigError, GraphError, DetectionError, SamplerError, EngineError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (FloatingPointError, ArithmeticError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
