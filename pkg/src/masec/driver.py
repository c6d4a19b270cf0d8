"""Block coordinate ascent over auxiliaries, precoders and antenna positions.

One outer iteration:

1. closed-form MMSE decoders and weights at the current point,
2. power-constrained precoder/AN update (``precoder``),
3. per-antenna MM position updates in ascending order (``positioner``),

after which the auxiliaries are refreshed at the new point and the
objective ``F`` (in nats) is recorded.  With the auxiliaries at their
optimum ``F`` equals ``(R_I - R_E) ln 2``, and every block can only raise
it, so the recorded trace is non-decreasing.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .channel import TransmitRegion, assemble_channel, upa_grid
from .errors import InvalidInputError, NumericalFailure
from .positioner import decouple_from_kernels, optimize_position, position_kernels
from .precoder import BisectionConfig, solve_precoders
from .secrecy import (
    PrecoderPair,
    objective_f,
    rate_difference,
    update_auxiliaries,
)

__all__ = ["SolverOptions", "SolveTrace", "BcdResult", "initialize", "initial_precoders", "initial_positions", "run_bcd"]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SolverOptions:
    epsilon1: float = 1e-7
    epsilon2: float = 1e-5
    n_max: int = 500
    mm_max_iter: int = 200
    optimize_positions: bool = True
    record_positions: bool = False
    record_mm_traces: bool = False
    bisection: BisectionConfig = field(default_factory=BisectionConfig)

    def __post_init__(self):
        if self.epsilon1 <= 0 or self.epsilon2 <= 0:
            raise InvalidInputError("convergence thresholds must be positive")
        if self.n_max < 1 or self.mm_max_iter < 1:
            raise InvalidInputError("iteration caps must be positive")


@dataclass
class SolveTrace:
    """Per-iteration history; index 0 is the initial point."""

    f_values: list = field(default_factory=list)
    sr_values: list = field(default_factory=list)
    raw_rate_values: list = field(default_factory=list)
    positions_history: list | None = None
    mm_traces: list | None = None
    iterations: int = 0
    converged: bool = False
    wall_time: float = 0.0

    def record(self, f_nats, raw_bits, positions=None):
        self.f_values.append(f_nats)
        self.raw_rate_values.append(raw_bits)
        self.sr_values.append(max(0.0, raw_bits))
        if self.positions_history is not None:
            self.positions_history.append(np.array(positions, copy=True))


class BcdResult(NamedTuple):
    precoders: PrecoderPair
    positions: np.ndarray
    trace: SolveTrace


def _crandn(rng, shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def initial_positions(config):
    """Centred grid with spacing ``max(lambda/2, D)``; must fit the region."""
    spacing = max(config.wavelength / 2.0, config.D)
    pos = upa_grid(config.M, spacing)
    if np.any(np.abs(pos) > config.half_width):
        raise InvalidInputError(
            f"{config.M} antennas spaced {spacing:g} m do not fit a region of side {config.A:g} m"
        )
    return pos


def initial_precoders(config, rng):
    """Random full-power precoders, power split evenly between data and AN."""
    d = config.streams
    v = _crandn(rng, (config.M, d))
    v_e = _crandn(rng, (config.M, config.M))
    half = config.p_max / 2.0
    v *= np.sqrt(half / np.real(np.vdot(v, v)))
    v_e *= np.sqrt(half / np.real(np.vdot(v_e, v_e)))
    return PrecoderPair(v, v_e)


def initialize(config, rng):
    """Random full-power precoders and the centred grid positions."""
    return initial_precoders(config, rng), initial_positions(config)


def _converged(f_new, f_old, eps):
    change = abs(f_new - f_old)
    scale = abs(f_new)
    return change <= eps * scale if scale >= 1e-12 else change <= eps


def run_bcd(config, geometry_i, geometry_e, options=None, rng=None, positions=None, precoders=None):
    """Maximize the secrecy rate for one channel realization.

    ``rng`` seeds the random precoder initialization when ``precoders`` is
    not given; ``positions`` defaults to the centred grid.  With
    ``options.optimize_positions`` off the positions stay fixed (baselines).
    """
    options = options or SolverOptions()
    start = time.perf_counter()
    if precoders is None:
        if rng is None:
            raise InvalidInputError("need an rng or explicit initial precoders")
        precoders = initial_precoders(config, rng)
    if positions is None:
        positions = initial_positions(config)
    positions = np.array(positions, dtype=float).reshape(-1, 2)
    if positions.shape[0] != precoders.v.shape[0]:
        raise InvalidInputError("positions and precoders disagree on the antenna count")

    lam = config.wavelength
    s2i, s2e = config.sigma2_i, config.sigma2_e
    region = TransmitRegion(config.half_width)
    trace = SolveTrace(
        positions_history=[] if options.record_positions else None,
        mm_traces=[] if options.record_mm_traces else None,
    )

    def channels(pos):
        return assemble_channel(geometry_i, pos, lam), assemble_channel(geometry_e, pos, lam)

    h_i, h_e = channels(positions)
    p = precoders
    aux = update_auxiliaries(h_i, h_e, p, s2i, s2e)
    f_old = objective_f(aux, p, h_i, h_e, s2i, s2e)
    trace.record(f_old, rate_difference(h_i, h_e, p, s2i, s2e), positions)

    n = 0
    try:
        for n in range(1, options.n_max + 1):
            p = solve_precoders(aux, h_i, h_e, s2e, config.p_max, options.bisection)
            if options.optimize_positions:
                kernels = position_kernels(p, aux, geometry_i, geometry_e, s2e, lam)
                for m in range(positions.shape[0]):
                    coeffs = decouple_from_kernels(m, positions, kernels)
                    res = optimize_position(
                        coeffs, positions, region, config.D, options.epsilon1, options.mm_max_iter
                    )
                    positions[m] = res.position
                    if trace.mm_traces is not None:
                        trace.mm_traces.append(res.f_values)
                h_i, h_e = channels(positions)
            aux = update_auxiliaries(h_i, h_e, p, s2i, s2e)
            f_new = objective_f(aux, p, h_i, h_e, s2i, s2e)
            trace.record(f_new, rate_difference(h_i, h_e, p, s2i, s2e), positions)
            trace.iterations = n
            if _converged(f_new, f_old, options.epsilon2):
                trace.converged = True
                break
            f_old = f_new
    except NumericalFailure as exc:
        raise NumericalFailure(f"outer iteration {n}: {exc}") from exc

    trace.wall_time = time.perf_counter() - start
    log.debug("BCD finished after %d iterations, F=%.6g nats", trace.iterations, trace.f_values[-1])
    return BcdResult(p, positions, trace)
