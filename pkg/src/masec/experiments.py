"""Seeded Monte Carlo harness and CSV output.

Trial ``t`` uses ``seed = base_seed + t`` for every random stream, so all
schemes and all sweep points at the same trial index see the same channel
realization.  Imperfect-FRI sweeps (``aod``, ``prm``) optimize against a
perturbed copy of the geometry and report the secrecy rate of the
resulting design on the true channel.
"""

from __future__ import annotations

import csv
import io
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .baselines import eas_select, fpa_positions, gas_select, rpa_positions, solve_fixed
from .channel import TransmitRegion, assemble_channel, perturb_geometry, sample_geometry
from .config import dbm_to_mw
from .driver import SolverOptions, run_bcd
from .errors import InfeasiblePackingError, InvalidInputError, NumericalFailure
from .randomness import FRI, GEOMETRY, INIT, RPA, stream
from .secrecy import objective_f, rate_difference, update_auxiliaries

__all__ = [
    "SCHEMES",
    "SWEEPS",
    "TrialResult",
    "apply_sweep",
    "run_trial",
    "run_trials",
    "run_fri_sweep",
    "summarize",
    "write_csv",
    "read_csv",
    "format_csv",
    "failure_fraction",
]

log = logging.getLogger(__name__)

SCHEMES = ("MA", "FPA", "RPA", "EAS", "GAS")
SWEEPS = ("A", "M", "L", "pmax", "aod", "prm")
FRI_SWEEPS = ("aod", "prm")
HEADER = ["scheme", "seed", "sweep_name", "sweep_value", "sr_bits", "f_final_nats", "iterations", "wall_seconds", "status"]


@dataclass(frozen=True)
class TrialResult:
    scheme: str
    seed: int
    sweep_name: str
    sweep_value: float | None
    sr_bits: float
    f_final_nats: float
    iterations: int
    wall_seconds: float
    status: str = "ok"
    sr_estimate_bits: float | None = None  # FRI sweeps: SR on the estimated channel

    @property
    def ok(self):
        return self.status == "ok"


def _scheme(name):
    key = str(name).upper()
    if key not in SCHEMES:
        raise InvalidInputError(f"unknown scheme {name!r}; choose from {', '.join(SCHEMES)}")
    return key


def apply_sweep(config, name, value):
    """Return ``(config, mu, epsilon)`` for one sweep point.

    ``A`` is given in wavelengths, ``pmax`` in dBm, ``aod`` in radians and
    ``prm`` as the normalized error variance.
    """
    if name is None:
        return config, 0.0, 0.0
    if name == "A":
        return config.with_(A=float(value) * config.wavelength), 0.0, 0.0
    if name in ("M", "L"):
        if float(value) != int(value):
            raise InvalidInputError(f"{name} sweep values must be integers")
        changes = {name: int(value)}
        if name == "M" and config.d is not None:
            changes["d"] = min(config.d, int(value), config.N_I)
        return config.with_(**changes), 0.0, 0.0
    if name == "pmax":
        return config.with_(p_max=dbm_to_mw(float(value))), 0.0, 0.0
    if name == "aod":
        return config, float(value), 0.0
    if name == "prm":
        return config, 0.0, float(value)
    raise InvalidInputError(f"unknown sweep {name!r}; choose from {', '.join(SWEEPS)}")


def _design(config, scheme, seed, gi, ge, options, screening_iters):
    """Optimize one scheme on ``(gi, ge)`` and return its ``BcdResult``."""
    if scheme == "MA":
        res = run_bcd(config, gi, ge, options, stream(seed, INIT))
    elif scheme == "FPA":
        res = solve_fixed(config, gi, ge, fpa_positions(config.M, config.wavelength), options, seed)
    elif scheme == "RPA":
        region = TransmitRegion(config.half_width)
        pos = rpa_positions(config.M, region, config.D, stream(seed, RPA))
        res = solve_fixed(config, gi, ge, pos, options, seed)
    elif scheme == "EAS":
        res = eas_select(config, gi, ge, options, seed).result
    else:
        res = gas_select(config, gi, ge, options, seed, screening_iters).result
    return res


def _write_trace(trace_dir, scheme, seed, sweep_name, sweep_value, trace):
    label = f"{sweep_name}{_fmt(sweep_value)}_" if sweep_name else ""
    path = Path(trace_dir) / f"{scheme.lower()}_{label}seed{seed}.csv"
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["iter", "f_nats", "sr_bits"])
        for i, (f, sr) in enumerate(zip(trace.f_values, trace.sr_values)):
            w.writerow([i, _fmt(f), _fmt(sr)])


def run_trial(config, scheme, seed, sweep_name=None, sweep_value=None, options=None,
              screening_iters=30, trace_dir=None):
    """One seeded trial; numerical failures become a ``failed`` result."""
    scheme = _scheme(scheme)
    options = options or SolverOptions()
    start = time.perf_counter()
    name = sweep_name or ""
    try:
        cfg, mu, eps = apply_sweep(config, sweep_name, sweep_value)
        gi, ge = sample_geometry(stream(seed, GEOMETRY), cfg)
        fri = stream(seed, FRI)
        gi_hat = perturb_geometry(gi, mu, eps, fri)
        ge_hat = perturb_geometry(ge, mu, eps, fri)
        res = _design(cfg, scheme, seed, gi_hat, ge_hat, options, screening_iters)
        trace = res.trace
        estimate = None
        f_final = float(trace.f_values[-1])
        sr = float(trace.sr_values[-1])
        if sweep_name in FRI_SWEEPS:
            estimate = sr
        if gi_hat is not gi or ge_hat is not ge:
            lam = cfg.wavelength
            h_i = assemble_channel(gi, res.positions, lam)
            h_e = assemble_channel(ge, res.positions, lam)
            sr = max(0.0, rate_difference(h_i, h_e, res.precoders, cfg.sigma2_i, cfg.sigma2_e))
            aux = update_auxiliaries(h_i, h_e, res.precoders, cfg.sigma2_i, cfg.sigma2_e)
            f_final = float(objective_f(aux, res.precoders, h_i, h_e, cfg.sigma2_i, cfg.sigma2_e))
        if trace_dir is not None:
            _write_trace(trace_dir, scheme, seed, name, sweep_value, trace)
        return TrialResult(scheme, seed, name, sweep_value, sr, f_final, trace.iterations,
                           time.perf_counter() - start, "ok", estimate)
    except (NumericalFailure, InfeasiblePackingError) as exc:
        log.warning("trial %s seed %d failed: %s", scheme, seed, exc)
        return TrialResult(scheme, seed, name, sweep_value, math.nan, math.nan, 0,
                           time.perf_counter() - start, f"failed: {type(exc).__name__}")


def _run_one(args):
    return run_trial(*args)


def _execute(jobs, parallelism):
    if parallelism <= 1 or len(jobs) <= 1:
        return [_run_one(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=parallelism) as pool:
        return list(pool.map(_run_one, jobs, chunksize=1))


def run_trials(config, scheme, sweep=None, parallelism=1, options=None, screening_iters=30,
               trace_dir=None, trials=None):
    """Run ``trials`` (default ``config.trials``) seeded trials of ``scheme``.

    ``sweep`` is ``None`` or ``(name, values)``.  Results come back ordered
    by sweep point then trial index, whatever the parallelism.
    """
    scheme = _scheme(scheme)
    n = config.trials if trials is None else int(trials)
    if parallelism < 1:
        raise InvalidInputError("parallelism must be at least 1")
    if sweep is None:
        points = [(None, None)]
    else:
        name, values = sweep
        if name not in SWEEPS:
            raise InvalidInputError(f"unknown sweep {name!r}")
        points = [(name, float(v)) for v in values]
        for nm, v in points:
            apply_sweep(config, nm, v)  # validate before spending compute
    if trace_dir is not None:
        os.makedirs(trace_dir, exist_ok=True)
    jobs = [
        (config, scheme, config.base_seed + t, nm, v, options, screening_iters, trace_dir)
        for nm, v in points
        for t in range(n)
    ]
    return _execute(jobs, parallelism)


def run_fri_sweep(config, mu_grid=(), epsilon_grid=(), scheme="MA", parallelism=1, options=None,
                  trials=None, screening_iters=30):
    """Imperfect-FRI sweeps: AoD errors ``mu_grid`` then PRM errors ``epsilon_grid``."""
    out = []
    if len(mu_grid):
        out += run_trials(config, scheme, ("aod", mu_grid), parallelism, options, screening_iters, trials=trials)
    if len(epsilon_grid):
        out += run_trials(config, scheme, ("prm", epsilon_grid), parallelism, options, screening_iters, trials=trials)
    return out


def failure_fraction(results):
    if not results:
        return 0.0
    return sum(not r.ok for r in results) / len(results)


def summarize(results):
    """Mean, standard error and counts per ``(scheme, sweep_name, sweep_value)``."""
    groups = {}
    for r in results:
        groups.setdefault((r.scheme, r.sweep_name, r.sweep_value), []).append(r)
    out = []
    for key in sorted(groups, key=lambda k: (k[0], k[1], _sort_value(k[2]))):
        rs = groups[key]
        sr = np.array([r.sr_bits for r in rs if r.ok])
        sem = float(np.std(sr, ddof=1) / np.sqrt(sr.size)) if sr.size > 1 else math.nan
        out.append({
            "scheme": key[0],
            "sweep_name": key[1],
            "sweep_value": key[2],
            "trials": len(rs),
            "failures": len(rs) - sr.size,
            "mean_sr_bits": float(np.mean(sr)) if sr.size else math.nan,
            "sem_sr_bits": sem,
        })
    return out


def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return format(float(x), ".12g")


def _sort_value(v):
    return -math.inf if v is None else v


def format_csv(results, include_timing=True):
    """CSV text for ``results``.

    ``include_timing=False`` writes ``wall_seconds`` as ``0`` so that the
    output depends only on the inputs.  An extra ``sr_estimate_bits``
    column is appended when any result carries one.
    """
    rows = sorted(results, key=lambda r: (r.scheme, r.sweep_name, _sort_value(r.sweep_value), r.seed))
    extra = any(r.sr_estimate_bits is not None for r in rows)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(HEADER + (["sr_estimate_bits"] if extra else []))
    for r in rows:
        row = [
            r.scheme,
            r.seed,
            r.sweep_name,
            _fmt(r.sweep_value),
            _fmt(r.sr_bits),
            _fmt(r.f_final_nats),
            r.iterations,
            _fmt(r.wall_seconds if include_timing else 0),
            r.status,
        ]
        if extra:
            row.append(_fmt(r.sr_estimate_bits))
        w.writerow(row)
    return buf.getvalue()


def write_csv(results, path, include_timing=True):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(format_csv(results, include_timing))


def read_csv(path):
    def num(s):
        return None if s == "" else float(s)

    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            r = TrialResult(
                scheme=row["scheme"],
                seed=int(row["seed"]),
                sweep_name=row["sweep_name"],
                sweep_value=num(row["sweep_value"]),
                sr_bits=float(row["sr_bits"]),
                f_final_nats=float(row["f_final_nats"]),
                iterations=int(row["iterations"]),
                wall_seconds=float(row["wall_seconds"]),
                status=row["status"],
            )
            if "sr_estimate_bits" in row:
                r = replace(r, sr_estimate_bits=num(row["sr_estimate_bits"]))
            out.append(r)
    return out
