"""Secrecy rate and its weighted-MMSE reformulation.

All internal quantities are in nats.  With the auxiliary matrices at their
closed-form optima, the objective ``F = h1 + h2 + h3`` equals
``(R_I - R_E) * ln 2`` where the rates are in bits/s/Hz.

Notation follows the usual wiretap model: ``h_i`` (``N_I x M``) and ``h_e``
(``N_E x M``) are the channels to the legitimate receiver and to the
eavesdropper, ``v`` (``M x d``) the data precoder and ``v_e`` (``M x M``) the
artificial-noise factor with covariance ``v_e @ v_e^H``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import IllConditionedError, InvalidInputError

__all__ = [
    "PrecoderPair",
    "AuxiliarySet",
    "rates",
    "secrecy_rate",
    "rate_difference",
    "update_decoder_ir",
    "mse_ir",
    "update_weight_ir",
    "update_decoder_eve",
    "mse_eve",
    "update_weight_eve",
    "mse_x",
    "update_weight_x",
    "update_auxiliaries",
    "h1_value",
    "h2_value",
    "h3_value",
    "objective_f",
    "xi_kernels",
    "xi_value",
]

COND_CAP = 1e12
LN2 = math.log(2.0)


def hermitian_part(x):
    return 0.5 * (x + x.conj().T)


def _hpd_solve(a, b):
    """Solve ``a x = b`` for Hermitian positive definite ``a``."""
    try:
        c = sla.cho_factor(a, lower=True, check_finite=False)
        return sla.cho_solve(c, b, check_finite=False)
    except np.linalg.LinAlgError:
        return np.linalg.solve(a, b)


def _hpd_inv(a):
    return hermitian_part(_hpd_solve(a, np.eye(a.shape[0], dtype=a.dtype)))


def _logdet_hpd(a):
    sign, logdet = np.linalg.slogdet(a)
    return float(logdet)


def _guarded_inverse(e, what):
    """Inverse of a Hermitian PSD matrix; eigenvalues floored past ``COND_CAP``."""
    e = hermitian_part(e)
    s, q = np.linalg.eigh(e)
    trace = float(np.sum(s))
    if not np.all(np.isfinite(s)) or trace <= 0:
        raise IllConditionedError(f"{what} is singular", float("inf"))
    smax = s[-1]
    if s[0] <= 0 or smax / s[0] > COND_CAP:
        s = np.maximum(s, 1e-12 * trace)
    return hermitian_part((q / s) @ q.conj().T)


@dataclass(frozen=True, eq=False)
class PrecoderPair:
    """Data precoder ``v`` (M x d) and artificial-noise factor ``v_e`` (M x M)."""

    v: np.ndarray
    v_e: np.ndarray

    @property
    def power(self):
        return float(np.real(np.vdot(self.v, self.v) + np.vdot(self.v_e, self.v_e)))

    @property
    def noise_covariance(self):
        return self.v_e @ self.v_e.conj().T

    @property
    def total_covariance(self):
        return self.v @ self.v.conj().T + self.noise_covariance

    def scaled(self, factor):
        return PrecoderPair(self.v * factor, self.v_e * factor)


@dataclass(frozen=True, eq=False)
class AuxiliarySet:
    """The five MMSE auxiliaries (decoders ``u_*`` and weights ``w_*``)."""

    u_i: np.ndarray
    w_i: np.ndarray
    u_e: np.ndarray
    w_e: np.ndarray
    w_x: np.ndarray

    def replace(self, **kw):
        fields = dict(u_i=self.u_i, w_i=self.w_i, u_e=self.u_e, w_e=self.w_e, w_x=self.w_x)
        fields.update(kw)
        return AuxiliarySet(**fields)


def _check_channel(h):
    h = np.asarray(h)
    if not np.all(np.isfinite(h)):
        raise InvalidInputError("channel matrix has non-finite entries")
    return h


# -- rates -----------------------------------------------------------------


def rates(h_i, h_e, p, sigma2_i, sigma2_e):
    """``(R_I, R_E)`` in nats.

    Each rate is ``log|I + H V V^H H^H J^-1|`` with interference-plus-noise
    covariance ``J = H R_z H^H + sigma^2 I``, evaluated as
    ``log|J + H V V^H H^H| - log|J|``.
    """
    if sigma2_i <= 0 or sigma2_e <= 0:
        raise InvalidInputError("noise powers must be positive")
    out = []
    for h, s2 in ((_check_channel(h_i), sigma2_i), (_check_channel(h_e), sigma2_e)):
        hv = h @ p.v
        hz = h @ p.v_e
        j = hermitian_part(hz @ hz.conj().T) + s2 * np.eye(h.shape[0])
        out.append(_logdet_hpd(j + hermitian_part(hv @ hv.conj().T)) - _logdet_hpd(j))
    return out[0], out[1]


def rate_difference(h_i, h_e, p, sigma2_i, sigma2_e):
    """Unclamped ``R_I - R_E`` in bits/s/Hz."""
    r_i, r_e = rates(h_i, h_e, p, sigma2_i, sigma2_e)
    return (r_i - r_e) / LN2


def secrecy_rate(h_i, h_e, p, sigma2_i, sigma2_e):
    """Secrecy rate ``max(R_I - R_E, 0)`` in bits/s/Hz."""
    return max(0.0, rate_difference(h_i, h_e, p, sigma2_i, sigma2_e))


# -- legitimate receiver ------------------------------------------------------


def update_decoder_ir(h_i, p, sigma2_i):
    """MMSE decoder ``(H R_z H^H + sigma^2 I + H V V^H H^H)^-1 H V``."""
    hv = h_i @ p.v
    hz = h_i @ p.v_e
    cov = hermitian_part(hz @ hz.conj().T + hv @ hv.conj().T) + sigma2_i * np.eye(h_i.shape[0])
    return _hpd_solve(cov, hv)


def mse_ir(h_i, p, u_i, sigma2_i):
    """MSE matrix ``(U^H H V - I)(.)^H + U^H (H R_z H^H + sigma^2 I) U`` (d x d)."""
    d = p.v.shape[1]
    err = u_i.conj().T @ (h_i @ p.v) - np.eye(d)
    uz = u_i.conj().T @ (h_i @ p.v_e)
    e = err @ err.conj().T + uz @ uz.conj().T + sigma2_i * (u_i.conj().T @ u_i)
    return hermitian_part(e)


def update_weight_ir(h_i, p, u_i, sigma2_i):
    return _guarded_inverse(mse_ir(h_i, p, u_i, sigma2_i), "E_I")


# -- eavesdropper ---------------------------------------------------------------


def update_decoder_eve(h_e, p, sigma2_e):
    """Decoder of the AN "streams" at Eve: ``(sigma^2 I + H R_z H^H)^-1 H V_E``."""
    hz = h_e @ p.v_e
    cov = hermitian_part(hz @ hz.conj().T) + sigma2_e * np.eye(h_e.shape[0])
    return _hpd_solve(cov, hz)


def mse_eve(h_e, p, u_e, sigma2_e):
    m = p.v_e.shape[1]
    err = u_e.conj().T @ (h_e @ p.v_e) - np.eye(m)
    e = err @ err.conj().T + sigma2_e * (u_e.conj().T @ u_e)
    return hermitian_part(e)


def update_weight_eve(h_e, p, u_e, sigma2_e):
    return _guarded_inverse(mse_eve(h_e, p, u_e, sigma2_e), "E_E")


def mse_x(h_e, p, sigma2_e):
    """``I + sigma^-2 H_E (V V^H + V_E V_E^H) H_E^H``."""
    hv = h_e @ p.v
    hz = h_e @ p.v_e
    n = h_e.shape[0]
    return np.eye(n) + hermitian_part(hv @ hv.conj().T + hz @ hz.conj().T) / sigma2_e


def update_weight_x(h_e, p, sigma2_e):
    if sigma2_e <= 0:
        raise InvalidInputError("sigma2_e must be positive")
    return _hpd_inv(mse_x(h_e, p, sigma2_e))


def update_auxiliaries(h_i, h_e, p, sigma2_i, sigma2_e):
    """All five closed-form auxiliary updates at fixed precoders and channels."""
    u_i = update_decoder_ir(h_i, p, sigma2_i)
    u_e = update_decoder_eve(h_e, p, sigma2_e)
    return AuxiliarySet(
        u_i=u_i,
        w_i=update_weight_ir(h_i, p, u_i, sigma2_i),
        u_e=u_e,
        w_e=update_weight_eve(h_e, p, u_e, sigma2_e),
        w_x=update_weight_x(h_e, p, sigma2_e),
    )


# -- reformulated objective ------------------------------------------------------


def _logdet_bound(w, e):
    """``log|W| - Tr(W E) + n``."""
    return _logdet_hpd(w) - float(np.real(np.trace(w @ e))) + w.shape[0]


def h1_value(aux, p, h_i, sigma2_i):
    return _logdet_bound(aux.w_i, mse_ir(h_i, p, aux.u_i, sigma2_i))


def h2_value(aux, p, h_e, sigma2_e):
    return _logdet_bound(aux.w_e, mse_eve(h_e, p, aux.u_e, sigma2_e))


def h3_value(aux, p, h_e, sigma2_e):
    return _logdet_bound(aux.w_x, mse_x(h_e, p, sigma2_e))


def objective_f(aux, p, h_i, h_e, sigma2_i, sigma2_e):
    """``F = h1 + h2 + h3`` in nats."""
    return (
        h1_value(aux, p, h_i, sigma2_i)
        + h2_value(aux, p, h_e, sigma2_e)
        + h3_value(aux, p, h_e, sigma2_e)
    )


def xi_kernels(aux, h_i, h_e, sigma2_e):
    """Quadratic kernels ``(H_V, H_VE)`` of the precoder subproblem."""
    a = h_i.conj().T @ aux.u_i
    legit = a @ aux.w_i @ a.conj().T
    leak = h_e.conj().T @ aux.w_x @ h_e / sigma2_e
    b = h_e.conj().T @ aux.u_e
    an = b @ aux.w_e @ b.conj().T
    h_v = hermitian_part(legit + leak)
    h_ve = hermitian_part(legit + an + leak)
    return h_v, h_ve


def xi_value(p, aux, h_i, h_e, sigma2_e):
    """Precoder-dependent part of ``-F``.

    ``-2 Re Tr(W_I V^H H_I^H U_I) + Tr(V^H H_V V)
      - 2 Re Tr(W_E V_E^H H_E^H U_E) + Tr(V_E^H H_VE V_E)``
    """
    h_v, h_ve = xi_kernels(aux, h_i, h_e, sigma2_e)
    lin_v = np.trace(aux.w_i @ p.v.conj().T @ h_i.conj().T @ aux.u_i)
    lin_e = np.trace(aux.w_e @ p.v_e.conj().T @ h_e.conj().T @ aux.u_e)
    quad_v = np.trace(p.v.conj().T @ h_v @ p.v)
    quad_e = np.trace(p.v_e.conj().T @ h_ve @ p.v_e)
    return float(np.real(-2 * lin_v + quad_v - 2 * lin_e + quad_e))
