"""Far-field field-response channel model.

Every path is described by a pair of angles (elevation ``theta``, azimuth
``phi``).  For a point ``p = (x, y)`` on an array plane the propagation
distance difference of a path is ``x sin(theta) cos(phi) + y cos(theta)``,
and the field response is ``exp(j 2 pi / wavelength * that)``.  Channels are
assembled as ``F^H @ prm @ G`` where ``G`` stacks the transmit responses of
the movable antennas and ``F`` the receive responses of the fixed array.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import cached_property

import numpy as np

from .errors import InvalidConfigError, InvalidInputError

__all__ = [
    "TransmitRegion",
    "LinkGeometry",
    "upa_grid",
    "path_wavevectors",
    "transmit_frv",
    "transmit_frm",
    "receive_frm",
    "assemble_channel",
    "sample_geometry",
    "perturb_geometry",
]


@dataclass(frozen=True)
class TransmitRegion:
    """Square ``[-half_width, half_width]^2`` the movable antennas live in."""

    half_width: float

    def __post_init__(self):
        if not (math.isfinite(self.half_width) and self.half_width > 0):
            raise InvalidInputError(f"half_width must be > 0, got {self.half_width}")

    @classmethod
    def from_side(cls, side):
        return cls(side / 2.0)

    def contains(self, p, tol=0.0):
        p = np.asarray(p, dtype=float)
        return bool(np.all(np.abs(p) <= self.half_width + tol))


@dataclass(frozen=True, eq=False)
class LinkGeometry:
    """Angles, path responses and receive array of one BS-to-receiver link.

    Angles are in radians, ``prm`` is the ``L_r x L_t`` path-response
    matrix (linear amplitude) and ``rx_positions`` an ``(N, 2)`` array of
    receive antenna coordinates in meters.
    """

    theta_t: np.ndarray
    phi_t: np.ndarray
    theta_r: np.ndarray
    phi_r: np.ndarray
    prm: np.ndarray
    rx_positions: np.ndarray
    distance: float = float("nan")

    def __post_init__(self):
        cast = {
            "theta_t": np.asarray(self.theta_t, dtype=float).reshape(-1),
            "phi_t": np.asarray(self.phi_t, dtype=float).reshape(-1),
            "theta_r": np.asarray(self.theta_r, dtype=float).reshape(-1),
            "phi_r": np.asarray(self.phi_r, dtype=float).reshape(-1),
            "prm": np.atleast_2d(np.asarray(self.prm, dtype=complex)),
            "rx_positions": np.asarray(self.rx_positions, dtype=float).reshape(-1, 2),
        }
        for name, arr in cast.items():
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.theta_t.shape != self.phi_t.shape or self.theta_r.shape != self.phi_r.shape:
            raise InvalidInputError("elevation and azimuth arrays differ in length")
        if self.prm.shape != (self.theta_r.size, self.theta_t.size):
            raise InvalidInputError(
                f"prm shape {self.prm.shape} does not match "
                f"(L_r, L_t) = ({self.theta_r.size}, {self.theta_t.size})"
            )
        for name in ("theta_t", "phi_t", "theta_r", "phi_r"):
            a = getattr(self, name)
            if not np.all(np.isfinite(a)) or np.any(a < 0) or np.any(a > np.pi):
                raise InvalidInputError(f"{name} must lie in [0, pi]")
        if not np.all(np.isfinite(self.prm)):
            raise InvalidInputError("prm contains non-finite entries")
        if not np.all(np.isfinite(self.rx_positions)):
            raise InvalidInputError("rx_positions contains non-finite entries")

    @property
    def n_paths_t(self):
        return self.theta_t.size

    @property
    def n_paths_r(self):
        return self.theta_r.size

    @property
    def n_rx(self):
        return self.rx_positions.shape[0]

    @cached_property
    def tx_directions(self):
        """``(L_t, 2)`` rows ``[sin(theta) cos(phi), cos(theta)]``."""
        return _directions(self.theta_t, self.phi_t)

    @cached_property
    def rx_directions(self):
        return _directions(self.theta_r, self.phi_r)

    def fingerprint(self):
        """Bytes uniquely identifying the numerical content (for pairing checks)."""
        parts = [self.theta_t, self.phi_t, self.theta_r, self.phi_r, self.prm, self.rx_positions]
        return b"".join(np.ascontiguousarray(p).tobytes() for p in parts)


def _directions(theta, phi):
    # sin(pi/2 - theta) is exactly zero at broadside, unlike cos(pi/2)
    return np.column_stack([np.sin(theta) * np.cos(phi), np.sin(np.pi / 2 - theta)])


def _as_points(positions):
    pts = np.asarray(positions, dtype=float)
    if pts.ndim == 1:
        pts = pts.reshape(1, 2)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise InvalidInputError(f"positions must have shape (n, 2), got {pts.shape}")
    if not np.all(np.isfinite(pts)):
        raise InvalidInputError("positions must be finite")
    return pts


def _check_wavelength(wavelength):
    if not (math.isfinite(wavelength) and wavelength > 0):
        raise InvalidInputError(f"wavelength must be > 0, got {wavelength}")


def upa_grid(count, spacing):
    """Centered ``r x c`` grid with ``r`` the largest divisor of ``count`` <= sqrt(count).

    Columns run along x, rows along y.  Returns an ``(count, 2)`` array.
    """
    if count < 1:
        raise InvalidInputError("grid needs at least one element")
    rows = max(r for r in range(1, math.isqrt(count) + 1) if count % r == 0)
    cols = count // rows
    xs = (np.arange(cols) - (cols - 1) / 2.0) * spacing
    ys = (np.arange(rows) - (rows - 1) / 2.0) * spacing
    gx, gy = np.meshgrid(xs, ys)
    return np.column_stack([gx.ravel(), gy.ravel()])


def path_wavevectors(geometry, wavelength, side="t"):
    """``(L, 2)`` array ``2 pi / wavelength * direction`` so that the phase is ``k @ p``."""
    _check_wavelength(wavelength)
    dirs = geometry.tx_directions if side == "t" else geometry.rx_directions
    return (2.0 * np.pi / wavelength) * dirs


def transmit_frv(t, geometry, wavelength):
    """Transmit field-response vector of one antenna at ``t`` (length ``L_t``)."""
    p = _as_points(t)[0]
    return np.exp(1j * (path_wavevectors(geometry, wavelength, "t") @ p))


def transmit_frm(positions, geometry, wavelength):
    """``L_t x M`` matrix whose columns are the FRVs of ``positions``."""
    pts = _as_points(positions)
    return np.exp(1j * (path_wavevectors(geometry, wavelength, "t") @ pts.T))


def receive_frm(geometry, wavelength):
    """``L_r x N`` receive field-response matrix of the fixed array."""
    if geometry.n_rx == 0:
        raise InvalidInputError("rx_positions is empty")
    return np.exp(1j * (path_wavevectors(geometry, wavelength, "r") @ geometry.rx_positions.T))


def assemble_channel(geometry, positions, wavelength):
    """``N x M`` channel ``F^H @ prm @ G`` for transmit antennas at ``positions``."""
    g = transmit_frm(positions, geometry, wavelength)
    f = receive_frm(geometry, wavelength)
    return f.conj().T @ geometry.prm @ g


def _crandn(rng, size, variance):
    return np.sqrt(variance / 2.0) * (rng.standard_normal(size) + 1j * rng.standard_normal(size))


def _sample_link(rng, n_rx, config):
    L = config.L
    dist = float(rng.uniform(config.d_min, config.d_max))
    theta_t = rng.uniform(0.0, np.pi, L)
    phi_t = rng.uniform(0.0, np.pi, L)
    theta_r = rng.uniform(0.0, np.pi, L)
    phi_r = rng.uniform(0.0, np.pi, L)
    variance = config.g0 * dist ** (-config.alpha) / L
    prm = np.diag(_crandn(rng, L, variance))
    return LinkGeometry(
        theta_t=theta_t,
        phi_t=phi_t,
        theta_r=theta_r,
        phi_r=phi_r,
        prm=prm,
        rx_positions=upa_grid(n_rx, config.wavelength / 2.0),
        distance=dist,
    )


def sample_geometry(rng, config):
    """Draw the (IR, Eve) link geometries of one channel realization.

    Distances are uniform on ``[d_min, d_max]``, all angles uniform on
    ``[0, pi]`` and the diagonal path gains circularly-symmetric Gaussian
    with variance ``g0 * d ** -alpha / L``.
    """
    if config.d_min > config.d_max:
        raise InvalidConfigError(f"d_min={config.d_min} exceeds d_max={config.d_max}")
    if config.d_min <= 0:
        raise InvalidConfigError("link distances must be positive")
    ir = _sample_link(rng, config.N_I, config)
    eve = _sample_link(rng, config.N_E, config)
    return ir, eve


def perturb_geometry(geometry, mu, epsilon, rng):
    """Imperfect field-response estimate of ``geometry``.

    Transmit angles get uniform offsets in ``[-mu/2, mu/2]`` (clamped to
    ``[0, pi]``); each diagonal path gain ``s`` becomes ``s + |s| e`` with
    ``e ~ CN(0, epsilon)``.  Receive-side quantities are unchanged.
    """
    if mu < 0 or epsilon < 0:
        raise InvalidInputError("mu and epsilon must be non-negative")
    if mu == 0 and epsilon == 0:
        return geometry
    lt = geometry.n_paths_t
    theta_t = np.clip(geometry.theta_t + rng.uniform(-mu / 2, mu / 2, lt), 0.0, np.pi)
    phi_t = np.clip(geometry.phi_t + rng.uniform(-mu / 2, mu / 2, lt), 0.0, np.pi)
    prm = geometry.prm.copy()
    n = min(prm.shape)
    diag = prm[np.arange(n), np.arange(n)]
    prm[np.arange(n), np.arange(n)] = diag + np.abs(diag) * _crandn(rng, n, epsilon)
    return replace(geometry, theta_t=theta_t, phi_t=phi_t, prm=prm)
