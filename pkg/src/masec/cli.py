"""Command-line entry point.

Example::

    masec solve --config run.toml --scheme ma --trials 50 --sweep A --grid 1,2,3,4,5 --out a.csv

Exit status is 0 on success, 2 for an invalid configuration or arguments
and 3 when more than 10% of the trials failed numerically.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import fields, replace

from .config import SystemConfig, load_config
from .driver import SolverOptions
from .errors import InvalidConfigError, InvalidInputError
from .experiments import SWEEPS, failure_fraction, format_csv, run_trials, summarize

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_FAILURES = 3
FAILURE_LIMIT = 0.10

_EXTRA_SOLVER_KEYS = {"screening_iters"}


def _grid(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad grid {text!r}") from exc


def build_parser():
    parser = argparse.ArgumentParser(prog="masec", description="Movable-antenna secrecy-rate solver")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    s = sub.add_parser("solve", help="run seeded Monte Carlo trials and write a CSV")
    s.add_argument("--config", help="TOML config with system.*, experiment.* and solver.* keys")
    s.add_argument("--scheme", default="ma", choices=["ma", "fpa", "rpa", "eas", "gas"])
    s.add_argument("--trials", type=int)
    s.add_argument("--seed", type=int, help="base seed; trial t uses seed + t")
    s.add_argument("--sweep", choices=list(SWEEPS))
    s.add_argument("--grid", type=_grid, help="comma-separated sweep values")
    s.add_argument("--out", help="CSV path (default: stdout)")
    s.add_argument("--parallel", type=int, default=1)
    s.add_argument("--trace-dir", help="write one iter,f_nats,sr_bits CSV per trial here")
    s.add_argument("--no-timing", action="store_true", help="write wall_seconds as 0 for reproducible output")
    return parser


def solver_options(overrides):
    """Split ``solver.*`` config keys into ``SolverOptions`` and extras."""
    known = {f.name for f in fields(SolverOptions)} - {"bisection"}
    opts, extra = {}, {}
    for key, val in overrides.items():
        if key in known:
            opts[key] = val
        elif key in _EXTRA_SOLVER_KEYS:
            extra[key] = val
        else:
            raise InvalidConfigError(f"unknown solver key {key!r}")
    try:
        return SolverOptions(**opts), extra
    except (TypeError, InvalidInputError) as exc:
        raise InvalidConfigError(str(exc)) from exc


def _solve(args):
    if args.config:
        config, overrides = load_config(args.config)
    else:
        config, overrides = SystemConfig(), {}
    changes = {}
    if args.trials is not None:
        changes["trials"] = args.trials
    if args.seed is not None:
        changes["base_seed"] = args.seed
    if changes:
        config = replace(config, **changes)
    options, extra = solver_options(overrides)
    if (args.sweep is None) != (args.grid is None):
        raise InvalidConfigError("--sweep and --grid must be given together")
    if args.parallel < 1:
        raise InvalidConfigError("--parallel must be at least 1")
    sweep = (args.sweep, args.grid) if args.sweep else None
    results = run_trials(
        config,
        args.scheme,
        sweep,
        parallelism=args.parallel,
        options=options,
        screening_iters=extra.get("screening_iters", 30),
        trace_dir=args.trace_dir,
    )
    text = format_csv(results, include_timing=not args.no_timing)
    if args.out:
        with open(args.out, "w", newline="", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    for row in summarize(results):
        point = f" {row['sweep_name']}={row['sweep_value']:g}" if row["sweep_name"] else ""
        print(
            f"{row['scheme']}{point}: mean SR {row['mean_sr_bits']:.4f} bits/s/Hz "
            f"(sem {row['sem_sr_bits']:.4f}, {row['failures']}/{row['trials']} failed)",
            file=sys.stderr,
        )
    frac = failure_fraction(results)
    if frac > FAILURE_LIMIT:
        print(f"error: {frac:.1%} of trials failed", file=sys.stderr)
        return EXIT_FAILURES
    return EXIT_OK


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        return _solve(args)
    except (InvalidConfigError, InvalidInputError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
