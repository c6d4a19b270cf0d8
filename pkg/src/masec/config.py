"""System configuration and its text-file form.

Config files use dotted keys, e.g.::

    system.M = 4
    system.p_max_dbm = 10
    system.sigma2_i_dbm = -80
    system.g0_db = -40
    experiment.trials = 400
    solver.epsilon2 = 1e-5

Keys ending in ``_dbm`` are converted to milliwatts and keys ending in
``_db`` to linear ratios at parse time; everything is linear afterwards.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields, replace
from numbers import Integral

import tomli

from .errors import InvalidConfigError

__all__ = ["SystemConfig", "dbm_to_mw", "db_to_linear", "parse_config", "load_config"]


def dbm_to_mw(dbm):
    return 10.0 ** (dbm / 10.0)


def db_to_linear(db):
    return 10.0 ** (db / 10.0)


@dataclass(frozen=True)
class SystemConfig:
    """Simulation parameters; defaults reproduce the reference setup.

    Powers are in mW, lengths in meters.  ``d`` of ``None`` means
    ``min(M, N_I)``.
    """

    M: int = 4
    N_I: int = 4
    N_E: int = 4
    d: int | None = None
    L: int = 6
    p_max: float = 10.0  # 10 dBm
    sigma2_i: float = 1e-8  # -80 dBm
    sigma2_e: float = 1e-8
    wavelength: float = 0.01
    D: float = 0.005
    A: float = 0.04
    g0: float = 1e-4  # -40 dB
    alpha: float = 2.8
    d_min: float = 20.0
    d_max: float = 100.0
    trials: int = 400
    base_seed: int = 0

    def __post_init__(self):
        for name in ("M", "N_I", "N_E", "L", "trials"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, Integral) or v < 1:
                raise InvalidConfigError(f"{name} must be a positive integer")
        if isinstance(self.base_seed, bool) or not isinstance(self.base_seed, Integral):
            raise InvalidConfigError("base_seed must be an integer")
        if self.d is not None and not 1 <= self.d <= min(self.M, self.N_I):
            raise InvalidConfigError(f"d={self.d} must lie in [1, min(M, N_I)]")
        for name in ("p_max", "sigma2_i", "sigma2_e", "wavelength", "A", "g0"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise InvalidConfigError(f"{name} must be positive, got {v}")
        if not (self.D >= 0 and math.isfinite(self.D)):
            raise InvalidConfigError("D must be non-negative")
        if not 0 < self.d_min <= self.d_max:
            raise InvalidConfigError("need 0 < d_min <= d_max")
        if self.M > 1 and self.D > self.A * math.sqrt(2):
            raise InvalidConfigError("minimum spacing exceeds the region diagonal")
        # disks of radius D/2 centred in the region fit in a square of side A + D
        if self.M * math.pi * (self.D / 2) ** 2 > (self.A + self.D) ** 2:
            raise InvalidConfigError("M antennas cannot be packed with spacing D")

    @property
    def streams(self):
        return self.d if self.d is not None else min(self.M, self.N_I)

    @property
    def half_width(self):
        return self.A / 2.0

    def with_(self, **changes):
        return replace(self, **changes)

    def to_dict(self):
        return asdict(self)


_FIELDS = {f.name for f in fields(SystemConfig)}
_SECTIONS = {"system", "experiment"}


def _flatten(tree, prefix=""):
    out = {}
    for key, val in tree.items():
        full = f"{prefix}{key}"
        if isinstance(val, dict):
            out.update(_flatten(val, full + "."))
        else:
            out[full] = val
    return out


def parse_config(text):
    """Parse config text into ``(SystemConfig, solver_overrides)``.

    ``solver.*`` keys are returned separately as a plain dict.
    """
    try:
        tree = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise InvalidConfigError(f"cannot parse config: {exc}") from exc
    values = {}
    solver = {}
    for key, val in _flatten(tree).items():
        section, _, name = key.partition(".")
        if section == "solver":
            solver[name] = val
            continue
        if section not in _SECTIONS or not name:
            raise InvalidConfigError(f"unknown config key {key!r}")
        if name.endswith("_dbm"):
            name, val = name[:-4], dbm_to_mw(float(val))
        elif name.endswith("_db"):
            name, val = name[:-3], db_to_linear(float(val))
        if name not in _FIELDS:
            raise InvalidConfigError(f"unknown config key {key!r}")
        if name in values:
            raise InvalidConfigError(f"{name} given twice")
        values[name] = val
    try:
        return SystemConfig(**values), solver
    except TypeError as exc:
        raise InvalidConfigError(str(exc)) from exc


def load_config(path):
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
