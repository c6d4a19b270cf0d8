"""Per-antenna position update by majorization-minimization.

With precoders and auxiliaries fixed, the precoder-subproblem objective
``xi`` depends on the position ``t`` of antenna ``m`` only through its
transmit response vectors ``g_I(t)`` and ``g_E(t)``:

    f(t) = g_I^H B_I g_I + g_E^H B_E g_E + 2 Re(g_I^H d_I) + 2 Re(g_E^H d_E) + const

Each MM iteration replaces the quadratic terms by the eigenvalue majorizer
(``B <= lambda_max I`` on the unit-modulus manifold), which leaves
``gamma(t) = 2 sum_j |eta_j| cos(k_j^T t - angle(eta_j))``.  ``gamma`` is in
turn majorized by an isotropic quadratic of curvature ``delta`` (an upper
bound on its Hessian norm), whose minimizer is a gradient step; when the
step leaves the feasible set a linearized-constraint QP is solved instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .channel import path_wavevectors, receive_frm, transmit_frm
from .errors import InvalidInputError, QPInfeasibleError
from .qp import Qp2dProblem, solve_qp2d
from .secrecy import hermitian_part

__all__ = [
    "PositionKernels",
    "DecoupledCoefficients",
    "SurrogateState",
    "position_kernels",
    "decouple",
    "decouple_from_kernels",
    "antenna_objective",
    "surrogate_eta",
    "surrogate_value",
    "gamma_value",
    "gamma_gradient",
    "gamma_hessian",
    "is_feasible",
    "mm_step",
    "optimize_position",
    "PositionResult",
]


@dataclass(frozen=True, eq=False)
class PositionKernels:
    """Position-independent constants shared by all antennas in one sweep.

    ``a_i``/``a_e`` are ``Sigma^H F U W V^H`` (and its AN counterpart),
    ``c_i``, ``c_x``, ``c_e`` the quadratic kernels, ``q_x`` the factor
    ``[V | V_E]`` of the total covariance and ``q_e = V_E``.
    """

    a_i: np.ndarray
    a_e: np.ndarray
    c_i: np.ndarray
    c_x: np.ndarray
    c_e: np.ndarray
    q_x: np.ndarray
    q_e: np.ndarray
    k_i: np.ndarray  # (L_I, 2) transmit wave vectors
    k_e: np.ndarray
    wavelength: float


@dataclass(frozen=True, eq=False)
class DecoupledCoefficients:
    m: int
    a_i_cols: np.ndarray
    a_e_cols: np.ndarray
    c_i: np.ndarray
    c_x: np.ndarray
    c_e: np.ndarray
    q_x_rows: np.ndarray
    q_e_rows: np.ndarray
    b_i: np.ndarray
    b_e: np.ndarray
    d_i: np.ndarray
    d_e: np.ndarray
    k_i: np.ndarray
    k_e: np.ndarray
    wavelength: float

    @property
    def lambda_max_i(self):
        return float(np.linalg.eigvalsh(self.b_i)[-1])

    @property
    def lambda_max_e(self):
        return float(np.linalg.eigvalsh(self.b_e)[-1])


@dataclass(frozen=True, eq=False)
class SurrogateState:
    eta_i: np.ndarray
    eta_e: np.ndarray
    lambda_max_i: float
    lambda_max_e: float
    delta_m: float
    k_i: np.ndarray
    k_e: np.ndarray


def position_kernels(p, aux, geometry_i, geometry_e, sigma2_e, wavelength):
    """Constants of the position subproblem that do not depend on ``T``."""
    f_i = receive_frm(geometry_i, wavelength)
    f_e = receive_frm(geometry_e, wavelength)
    s_i = geometry_i.prm
    s_e = geometry_e.prm
    left_i = s_i.conj().T @ f_i @ aux.u_i  # L x d
    left_e = s_e.conj().T @ f_e @ aux.u_e  # L x M
    a_i = left_i @ aux.w_i @ p.v.conj().T
    a_e = left_e @ aux.w_e @ p.v_e.conj().T
    c_i = hermitian_part(left_i @ aux.w_i @ left_i.conj().T)
    c_e = hermitian_part(left_e @ aux.w_e @ left_e.conj().T)
    fx = s_e.conj().T @ f_e
    c_x = hermitian_part(fx @ aux.w_x @ fx.conj().T) / sigma2_e
    return PositionKernels(
        a_i=a_i,
        a_e=a_e,
        c_i=c_i,
        c_x=c_x,
        c_e=c_e,
        q_x=np.hstack([p.v, p.v_e]),
        q_e=p.v_e,
        k_i=path_wavevectors(geometry_i, wavelength, "t"),
        k_e=path_wavevectors(geometry_e, wavelength, "t"),
        wavelength=wavelength,
    )


def decouple_from_kernels(m, positions, kernels):
    """Quadratic/linear coefficients of antenna ``m`` with the others fixed."""
    positions = np.asarray(positions, dtype=float)
    n_ant = positions.shape[0]
    if not 0 <= m < n_ant:
        raise InvalidInputError(f"antenna index {m} outside [0, {n_ant})")
    g_i = np.exp(1j * (kernels.k_i @ positions.T))
    g_e = np.exp(1j * (kernels.k_e @ positions.T))
    qx, qe = kernels.q_x, kernels.q_e
    # column m of Q Q^H holds q_i^H q_m; the own term is removed from the sums
    vx_col = qx @ qx[m].conj()
    rz_col = qe @ qe[m].conj()
    own_x = float(np.real(vx_col[m]))
    own_e = float(np.real(rz_col[m]))
    vx_col = vx_col.copy()
    rz_col = rz_col.copy()
    vx_col[m] = 0.0
    rz_col[m] = 0.0
    b_i = own_x * kernels.c_i
    b_e = own_x * kernels.c_x + own_e * kernels.c_e
    d_i = kernels.c_i @ (g_i @ vx_col) - kernels.a_i[:, m]
    d_e = kernels.c_x @ (g_e @ vx_col) + kernels.c_e @ (g_e @ rz_col) - kernels.a_e[:, m]
    return DecoupledCoefficients(
        m=m,
        a_i_cols=kernels.a_i,
        a_e_cols=kernels.a_e,
        c_i=kernels.c_i,
        c_x=kernels.c_x,
        c_e=kernels.c_e,
        q_x_rows=qx,
        q_e_rows=qe,
        b_i=b_i,
        b_e=b_e,
        d_i=d_i,
        d_e=d_e,
        k_i=kernels.k_i,
        k_e=kernels.k_e,
        wavelength=kernels.wavelength,
    )


def decouple(m, positions, p, aux, geometry_i, geometry_e, wavelength, sigma2_e):
    kernels = position_kernels(p, aux, geometry_i, geometry_e, sigma2_e, wavelength)
    return decouple_from_kernels(m, positions, kernels)


def _frvs(coeffs, t):
    t = np.asarray(t, dtype=float)
    return np.exp(1j * (coeffs.k_i @ t)), np.exp(1j * (coeffs.k_e @ t))


def antenna_objective(coeffs, t):
    """Position-dependent part ``f(t)`` of ``xi`` for the active antenna."""
    g_i, g_e = _frvs(coeffs, t)
    val = (
        np.vdot(g_i, coeffs.b_i @ g_i)
        + np.vdot(g_e, coeffs.b_e @ g_e)
        + 2 * np.vdot(g_i, coeffs.d_i)
        + 2 * np.vdot(g_e, coeffs.d_e)
    )
    return float(np.real(val))


def surrogate_eta(coeffs, t_current, lambda_max=None):
    """Linear coefficients ``eta`` of the eigenvalue majorizer expanded at ``t_current``.

    ``lambda_max`` may carry the precomputed ``(lambda_max_i, lambda_max_e)``.
    """
    if lambda_max is None:
        lambda_max = (coeffs.lambda_max_i, coeffs.lambda_max_e)
    lam_i, lam_e = (max(x, 0.0) for x in lambda_max)
    g_i, g_e = _frvs(coeffs, t_current)
    eta_i = coeffs.d_i - (lam_i * g_i - coeffs.b_i @ g_i)
    eta_e = coeffs.d_e - (lam_e * g_e - coeffs.b_e @ g_e)
    delta = 16 * math.pi**2 / coeffs.wavelength**2 * float(np.sum(np.abs(eta_i)) + np.sum(np.abs(eta_e)))
    return SurrogateState(eta_i, eta_e, lam_i, lam_e, delta, coeffs.k_i, coeffs.k_e)


def surrogate_value(state, coeffs, t, t_current):
    """Majorizer ``mu_I + mu_E + 2 Re(g^H d)`` of ``f`` expanded at ``t_current``."""
    g_i, g_e = _frvs(coeffs, t)
    c_i, c_e = _frvs(coeffs, t_current)
    total = 0.0
    for g, c, b, lam, d in (
        (g_i, c_i, coeffs.b_i, state.lambda_max_i, coeffs.d_i),
        (g_e, c_e, coeffs.b_e, state.lambda_max_e, coeffs.d_e),
    ):
        resid_c = lam * c - b @ c
        total += (
            lam * g.size
            - 2 * np.real(np.vdot(g, resid_c))
            + np.real(np.vdot(c, resid_c))
            + 2 * np.real(np.vdot(g, d))
        )
    return float(total)


def _phases(state, t):
    t = np.asarray(t, dtype=float)
    kap_i = state.k_i @ t - np.angle(state.eta_i)
    kap_e = state.k_e @ t - np.angle(state.eta_e)
    return kap_i, kap_e


def gamma_value(state, t):
    """``2 sum |eta| cos(kappa)`` (the surrogate without its constant)."""
    kap_i, kap_e = _phases(state, t)
    return 2.0 * float(np.abs(state.eta_i) @ np.cos(kap_i) + np.abs(state.eta_e) @ np.cos(kap_e))


def gamma_gradient(state, t):
    kap_i, kap_e = _phases(state, t)
    w_i = np.abs(state.eta_i) * np.sin(kap_i)
    w_e = np.abs(state.eta_e) * np.sin(kap_e)
    return -2.0 * (w_i @ state.k_i + w_e @ state.k_e)


def gamma_hessian(state, t):
    kap_i, kap_e = _phases(state, t)
    w_i = np.abs(state.eta_i) * np.cos(kap_i)
    w_e = np.abs(state.eta_e) * np.cos(kap_e)
    h = -2.0 * ((state.k_i.T * w_i) @ state.k_i + (state.k_e.T * w_e) @ state.k_e)
    # the mixed partials share one formula; remove matmul rounding asymmetry
    return 0.5 * (h + h.T)


def is_feasible(t, region, other_positions, min_distance):
    if not region.contains(t):
        return False
    others = np.asarray(other_positions, dtype=float).reshape(-1, 2)
    if others.size == 0:
        return True
    return bool(np.all(np.linalg.norm(others - t, axis=1) >= min_distance))


def mm_step(state, t_current, region, other_positions, min_distance):
    """One MM update of the active antenna.

    Returns ``(t_next, status)``; ``status`` is ``"closed_form"``, ``"qp"``,
    ``"stationary"`` (zero curvature, nothing to do) or ``"no_progress"``
    (defensive; the linearized QP always contains ``t_current``).
    """
    t_current = np.asarray(t_current, dtype=float)
    if state.delta_m <= 0:
        return t_current.copy(), "stationary"
    grad = gamma_gradient(state, t_current)
    if not np.any(grad):
        return t_current.copy(), "stationary"
    cand = t_current - grad / state.delta_m
    if is_feasible(cand, region, other_positions, min_distance):
        return cand, "closed_form"
    halfplanes = []
    for other in np.asarray(other_positions, dtype=float).reshape(-1, 2):
        diff = t_current - other
        normal = diff / np.linalg.norm(diff)
        halfplanes.append((normal, min_distance + normal @ other))
    problem = Qp2dProblem(state.delta_m, grad - state.delta_m * t_current, region, halfplanes)
    try:
        t_next = solve_qp2d(problem)
    except QPInfeasibleError:
        return t_current.copy(), "no_progress"
    h = region.half_width
    return np.clip(t_next, -h, h), "qp"


class PositionResult(NamedTuple):
    position: np.ndarray
    f_values: np.ndarray
    statuses: tuple
    iterations: int


def optimize_position(coeffs, positions, region, min_distance, epsilon1=1e-7, max_iter=200):
    """MM iterations for antenna ``coeffs.m`` with all other antennas fixed.

    ``f`` is recorded before the first step and after every step; iteration
    stops when its relative change drops below ``epsilon1`` (absolute change
    when ``|f|`` is below 1e-12) or after ``max_iter`` steps.
    """
    if epsilon1 <= 0:
        raise InvalidInputError("epsilon1 must be positive")
    positions = np.asarray(positions, dtype=float)
    m = coeffs.m
    others = np.delete(positions, m, axis=0)
    t = positions[m].copy()
    lam = (coeffs.lambda_max_i, coeffs.lambda_max_e)
    f_old = antenna_objective(coeffs, t)
    f_values = [f_old]
    statuses = []
    for _ in range(max_iter):
        state = surrogate_eta(coeffs, t, lam)
        t_new, status = mm_step(state, t, region, others, min_distance)
        statuses.append(status)
        f_new = antenna_objective(coeffs, t_new)
        f_values.append(f_new)
        t = t_new
        change = abs(f_new - f_old)
        scale = abs(f_new)
        if status in ("stationary", "no_progress"):
            break
        if (change <= epsilon1 * scale) if scale >= 1e-12 else (change <= epsilon1):
            break
        f_old = f_new
    return PositionResult(t, np.array(f_values), tuple(statuses), len(statuses))
