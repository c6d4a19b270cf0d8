"""Precoder / artificial-noise update at fixed auxiliaries and positions.

The subproblem minimizes the convex quadratic ``xi(V, V_E)`` under the sum
power budget.  Its Lagrangian stationarity conditions give

    V   = (H_V  + lam I)^+ H_I^H U_I W_I
    V_E = (H_VE + lam I)^+ H_E^H U_E W_E

with one shared multiplier ``lam >= 0``.  The transmit power is a
monotonically decreasing function of ``lam``, so ``lam`` is found by
bisection on the complementary-slackness condition.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError, NumericalFailure
from .secrecy import PrecoderPair, hermitian_part, xi_kernels

__all__ = [
    "BisectionConfig",
    "precoders_for_lambda",
    "power_usage",
    "solve_multiplier",
    "solve_precoders",
]

PINV_RTOL = 1e-12


@dataclass(frozen=True)
class BisectionConfig:
    tolerance_power: float = 1e-8
    tolerance_lambda: float = 1e-12
    max_doublings: int = 64
    max_bisections: int = 200

    def __post_init__(self):
        if min(self.tolerance_power, self.tolerance_lambda) <= 0:
            raise InvalidInputError("bisection tolerances must be positive")
        if self.max_doublings < 1 or self.max_bisections < 1:
            raise InvalidInputError("iteration caps must be positive")


class _SpectralBlock:
    """One of the two linear systems, diagonalised once for all ``lam``."""

    def __init__(self, kernel, rhs):
        s, q = np.linalg.eigh(hermitian_part(kernel))
        self.s = np.maximum(s, 0.0)  # kernel is PSD; drop roundoff negatives
        self.q = q
        self.c = q.conj().T @ rhs
        self.weights = np.sum(np.abs(self.c) ** 2, axis=1)

    def _inverse_diagonal(self, lam):
        shifted = self.s + lam
        inv = np.zeros_like(shifted)
        if shifted.size:
            keep = shifted > PINV_RTOL * shifted[-1]
            inv[keep] = 1.0 / shifted[keep]
        return inv

    def power(self, lam):
        return float(np.sum(self.weights * self._inverse_diagonal(lam) ** 2))

    def solution(self, lam):
        return self.q @ (self._inverse_diagonal(lam)[:, None] * self.c)


class _Subproblem:
    def __init__(self, aux, h_i, h_e, sigma2_e):
        h_v, h_ve = xi_kernels(aux, h_i, h_e, sigma2_e)
        self.kernels = (h_v, h_ve)
        self.rhs = (h_i.conj().T @ aux.u_i @ aux.w_i, h_e.conj().T @ aux.u_e @ aux.w_e)
        self.blocks = (_SpectralBlock(h_v, self.rhs[0]), _SpectralBlock(h_ve, self.rhs[1]))

    def power(self, lam):
        return self.blocks[0].power(lam) + self.blocks[1].power(lam)

    def precoders(self, lam):
        return PrecoderPair(self.blocks[0].solution(lam), self.blocks[1].solution(lam))


def precoders_for_lambda(lam, aux, h_i, h_e, sigma2_e):
    """Stationary ``(V, V_E)`` of the Lagrangian for multiplier ``lam``."""
    if lam < 0:
        raise InvalidInputError("multiplier must be non-negative")
    return _Subproblem(aux, h_i, h_e, sigma2_e).precoders(lam)


def power_usage(lam, aux, h_i, h_e, sigma2_e):
    """``Tr(V V^H + V_E V_E^H)`` of the ``lam``-parameterised candidate, in mW."""
    if lam < 0:
        raise InvalidInputError("multiplier must be non-negative")
    return _Subproblem(aux, h_i, h_e, sigma2_e).power(lam)


def _bisect(sub, p_max, cfg):
    if sub.power(0.0) <= p_max:
        return 0.0
    hi = 1.0
    for _ in range(cfg.max_doublings):
        if sub.power(hi) <= p_max:
            break
        hi *= 2.0
    else:
        raise NumericalFailure(
            f"power still above budget at lambda={hi:.3e} after {cfg.max_doublings} doublings"
        )
    lo = 0.0
    for _ in range(cfg.max_bisections):
        mid = 0.5 * (lo + hi)
        pw = sub.power(mid)
        if abs(pw - p_max) <= cfg.tolerance_power * p_max and pw <= p_max:
            return mid
        if pw > p_max:
            lo = mid
        else:
            hi = mid
        if hi - lo <= cfg.tolerance_lambda * max(hi, 1e-300):
            break
    # hi always satisfies the budget
    return hi


def solve_multiplier(aux, h_i, h_e, sigma2_e, p_max, cfg=None):
    """Multiplier satisfying complementary slackness for budget ``p_max``."""
    if p_max <= 0:
        raise InvalidInputError("p_max must be positive")
    return _bisect(_Subproblem(aux, h_i, h_e, sigma2_e), p_max, cfg or BisectionConfig())


def solve_precoders(aux, h_i, h_e, sigma2_e, p_max, cfg=None, return_multiplier=False):
    """Optimal ``(V, V_E)`` of the power-constrained quadratic subproblem."""
    if p_max <= 0:
        raise InvalidInputError("p_max must be positive")
    sub = _Subproblem(aux, h_i, h_e, sigma2_e)
    lam = _bisect(sub, p_max, cfg or BisectionConfig())
    pair = sub.precoders(lam)
    return (pair, lam) if return_multiplier else pair
