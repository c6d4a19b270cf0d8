"""Random-instance builders shared by the test modules."""

import numpy as np

from masec.channel import assemble_channel, sample_geometry
from masec.config import SystemConfig
from masec.driver import initial_positions
from masec.randomness import GEOMETRY, stream
from masec.secrecy import PrecoderPair, update_auxiliaries


def crandn(rng, *shape, scale=1.0):
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def random_pair(rng, M=4, d=4, power=None):
    p = PrecoderPair(crandn(rng, M, d), crandn(rng, M, M))
    if power is not None:
        p = p.scaled(np.sqrt(power / p.power))
    return p


def abstract_instance(seed, M=4, N_I=4, N_E=4, d=None):
    """Unit-scale channels and noise, for algebraic identities."""
    rng = np.random.default_rng(seed)
    d = min(M, N_I) if d is None else d
    h_i = crandn(rng, N_I, M)
    h_e = crandn(rng, N_E, M)
    p = random_pair(rng, M, d, power=float(rng.uniform(0.5, 5.0)))
    s2i = float(rng.uniform(0.1, 2.0))
    s2e = float(rng.uniform(0.1, 2.0))
    return h_i, h_e, p, s2i, s2e


class PhysicalInstance:
    """Default-config geometry, grid positions, random full-power precoders."""

    def __init__(self, seed, config=None):
        self.config = config or SystemConfig()
        cfg = self.config
        self.gi, self.ge = sample_geometry(stream(seed, GEOMETRY), cfg)
        self.positions = initial_positions(cfg)
        rng = np.random.default_rng(10_000 + seed)
        self.p = random_pair(rng, cfg.M, cfg.streams, power=cfg.p_max)
        self.h_i = assemble_channel(self.gi, self.positions, cfg.wavelength)
        self.h_e = assemble_channel(self.ge, self.positions, cfg.wavelength)
        self.aux = update_auxiliaries(self.h_i, self.h_e, self.p, cfg.sigma2_i, cfg.sigma2_e)

