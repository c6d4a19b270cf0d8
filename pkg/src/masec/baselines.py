"""Fixed-position comparison schemes.

Each scheme picks a set of antenna positions once and then runs the
ordinary BCD loop with the position block disabled:

* ``fpa``: a centred lambda/2 UPA with ``M`` elements,
* ``rpa``: uniformly random positions respecting the minimum spacing,
* ``eas``: the best ``M``-subset of a ``2M`` lambda/2 UPA by exhaustive search,
* ``gas``: the same candidate grid, subset grown greedily.

Every solve of a candidate subset draws its initial precoders from a fresh
copy of the same seeded stream, so two schemes that end up on the same
subset produce identical results.
"""

from __future__ import annotations

import math
from dataclasses import replace
from itertools import combinations
from typing import NamedTuple

import numpy as np

from .channel import upa_grid
from .driver import BcdResult, SolverOptions, run_bcd
from .errors import InfeasiblePackingError, InvalidInputError
from .randomness import INIT, stream

__all__ = [
    "SelectionResult",
    "candidate_grid",
    "fpa_positions",
    "rpa_positions",
    "solve_fixed",
    "eas_select",
    "gas_select",
    "EAS_MAX_M",
]

EAS_MAX_M = 8


class SelectionResult(NamedTuple):
    indices: tuple
    positions: np.ndarray
    result: BcdResult
    sr_bits: float


def fpa_positions(M, wavelength):
    """Centred ``M``-element UPA with half-wavelength spacing."""
    return upa_grid(M, wavelength / 2.0)


def candidate_grid(M, wavelength):
    """The ``2M``-element half-wavelength UPA that selection schemes pick from."""
    return upa_grid(2 * M, wavelength / 2.0)


def _packing_possible(M, half_width, D):
    if M <= 1:
        return True
    if D > 2.0 * math.sqrt(2.0) * half_width:
        return False
    side = 2.0 * half_width
    return M * math.pi * (D / 2.0) ** 2 <= (side + D) ** 2


def rpa_positions(M, region, D, rng, max_attempts=1000, max_restarts=100):
    """Dart throwing: uniform draws kept when at least ``D`` from all kept points.

    After ``max_attempts`` consecutive rejections the partial set is
    discarded and the process restarts.
    """
    if M < 1:
        raise InvalidInputError("M must be positive")
    h = region.half_width
    if not _packing_possible(M, h, D):
        raise InfeasiblePackingError(f"{M} antennas with spacing {D:g} cannot fit a region of side {2 * h:g}")
    for _ in range(max_restarts):
        kept = []
        misses = 0
        while len(kept) < M and misses < max_attempts:
            p = rng.uniform(-h, h, size=2)
            if all(math.hypot(*(p - q)) >= D for q in kept):
                kept.append(p)
                misses = 0
            else:
                misses += 1
        if len(kept) == M:
            return np.array(kept)
    raise InfeasiblePackingError(f"dart throwing failed after {max_restarts} restarts")


def solve_fixed(config, geometry_i, geometry_e, positions, options=None, seed=0):
    """Fixed-position BCD on ``positions`` (any count ``k``, streams ``min(d, k)``)."""
    positions = np.asarray(positions, dtype=float).reshape(-1, 2)
    k = positions.shape[0]
    sub = replace(config, M=k, d=min(config.streams, k))
    options = replace(options or SolverOptions(), optimize_positions=False)
    return run_bcd(sub, geometry_i, geometry_e, options, stream(seed, INIT), positions=positions)


def _final_sr(result):
    return float(result.trace.sr_values[-1])


def eas_select(config, geometry_i, geometry_e, options=None, seed=0):
    """Exhaustive search over all ``M``-subsets of the ``2M`` candidate UPA.

    Ties keep the first subset in lexicographic order.
    """
    M = config.M
    if M > EAS_MAX_M:
        raise InvalidInputError(f"exhaustive selection refused for M={M} > {EAS_MAX_M}")
    grid = candidate_grid(M, config.wavelength)
    best = None
    for subset in combinations(range(grid.shape[0]), M):
        res = solve_fixed(config, geometry_i, geometry_e, grid[list(subset)], options, seed)
        sr = _final_sr(res)
        if best is None or sr > best.sr_bits:
            best = SelectionResult(subset, grid[list(subset)], res, sr)
    return best


def gas_select(config, geometry_i, geometry_e, options=None, seed=0, screening_iters=30):
    """Greedy selection from the ``2M`` candidate UPA.

    Candidates are ranked by the SR after ``screening_iters`` outer
    iterations (``None`` screens with the full solve); the chosen set is
    then solved to convergence.
    """
    options = options or SolverOptions()
    if screening_iters is not None:
        if screening_iters < 1:
            raise InvalidInputError("screening_iters must be positive")
        screen = replace(options, n_max=min(screening_iters, options.n_max))
    else:
        screen = options
    grid = candidate_grid(config.M, config.wavelength)
    chosen = []
    last = None
    for _ in range(config.M):
        best = None
        for c in range(grid.shape[0]):
            if c in chosen:
                continue
            trial = sorted(chosen + [c])
            res = solve_fixed(config, geometry_i, geometry_e, grid[trial], screen, seed)
            sr = _final_sr(res)
            if best is None or sr > best[0]:
                best = (sr, c, res)
        chosen = sorted(chosen + [best[1]])
        last = best[2]
    if screening_iters is not None:
        last = solve_fixed(config, geometry_i, geometry_e, grid[chosen], options, seed)
    return SelectionResult(tuple(chosen), grid[chosen], last, _final_sr(last))
