"""
Command-line entry point.

Usage::

    steinfield <experiment> --config PATH [--seed N] [--out DIR] [--threads K]

Exit status: 0 on success, 1 when a checking experiment reports a failure,
2 for configuration errors, 3 for bound-regime violations and 4 for
numerical failures.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .config import EXPERIMENTS, load_config
from .errors import ConfigError, NumericalError, RegimeError
from .experiments import run_experiment
from .gaussian import NORMAL_TRANSFORM
from .io import write_csv, write_json, write_sample_batch_csv

__all__ = ["main", "build_parser", "THREADS_ENV"]

THREADS_ENV = "STEINFIELD_THREADS"

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_REGIME, EXIT_NUMERICAL = 0, 1, 2, 3, 4


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="steinfield",
                                description="Seeded experiments on random fields and wide networks.")
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("experiment", choices=EXPERIMENTS)
    p.add_argument("--config", required=True, help="YAML or JSON configuration file")
    p.add_argument("--seed", type=int, help="master seed (overrides the config)")
    p.add_argument("--out", help="output directory (overrides the config)")
    p.add_argument("--threads", type=int,
                   help=f"worker threads (default: ${THREADS_ENV} or 1)")
    return p


def _threads(arg: Optional[int]) -> int:
    if arg is not None:
        return max(1, arg)
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"{THREADS_ENV} must be an integer, got {env!r}") from None
    return 1


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    t0 = time.perf_counter()
    try:
        threads = _threads(args.threads)
        cfg = load_config(args.config, args.experiment)
        if args.seed is not None:
            cfg.values["seed"] = args.seed
        if args.out is not None:
            cfg.values["output"] = args.out
        out = Path(cfg["output"])
        out.mkdir(parents=True, exist_ok=True)
        result = run_experiment(cfg, threads)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except RegimeError as exc:
        print(f"regime violation: {exc}", file=sys.stderr)
        return EXIT_REGIME
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL

    for name, (header, rows) in result.tables.items():
        write_csv(out / f"{name}.csv", header, rows)
    for name, batch in result.batches.items():
        write_sample_batch_csv(out / f"{name}.csv", batch)
    for name, obj in result.reports.items():
        write_json(out / f"{name}.json", obj)
    meta = {
        "experiment": cfg.experiment,
        "config": cfg.echo(),
        "config_path": str(args.config),
        "version": __version__,
        "seed": cfg.seed,
        "threads": threads,
        "normal_transform": NORMAL_TRANSFORM,
        "wall_time_s": time.perf_counter() - t0,
        "summary": result.summary,
        "ok": result.ok,
    }
    write_json(out / "metadata.json", meta)
    if cfg.experiment == "bounds":
        json.dump(result.reports["bounds"], sys.stdout, indent=2, sort_keys=True, default=str)
        sys.stdout.write("\n")
    else:
        print(f"{cfg.experiment}: {'PASS' if result.ok else 'FAIL'} -> {out}")
        for k, v in result.summary.items():
            if not isinstance(v, (dict, list)) or len(v) <= 8:
                print(f"  {k}: {v}")
    return EXIT_OK if result.ok else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
