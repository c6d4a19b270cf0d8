import numpy as np
import pytest

from masec.channel import TransmitRegion, assemble_channel, sample_geometry
from masec.config import SystemConfig
from masec.driver import SolverOptions, initial_positions, initialize, run_bcd
from masec.errors import InvalidInputError
from masec.positioner import is_feasible
from masec.randomness import GEOMETRY, INIT, stream
from masec.secrecy import PrecoderPair, secrecy_rate

SMALL = SystemConfig(M=2, N_I=2, N_E=2, L=2)


def geometry(seed, config):
    return sample_geometry(stream(seed, GEOMETRY), config)


def solve(seed, config, **opts):
    gi, ge = geometry(seed, config)
    options = SolverOptions(**opts)
    return gi, ge, run_bcd(config, gi, ge, options, stream(seed, INIT))


def test_initialize_feasible_and_full_power(default_config):
    c = default_config
    p, pos = initialize(c, stream(0, INIT))
    assert abs(p.power - c.p_max) <= 1e-12 * c.p_max
    v_pow = np.linalg.norm(p.v) ** 2
    assert v_pow == pytest.approx(c.p_max / 2, rel=1e-12)
    assert p.v.shape == (c.M, c.streams) and p.v_e.shape == (c.M, c.M)
    region = TransmitRegion(c.half_width)
    for m in range(c.M):
        assert is_feasible(pos[m], region, np.delete(pos, m, axis=0), c.D)


def test_initialize_deterministic(default_config):
    a, pa = initialize(default_config, stream(5, INIT))
    b, pb = initialize(default_config, stream(5, INIT))
    assert np.array_equal(a.v, b.v) and np.array_equal(a.v_e, b.v_e)
    assert np.array_equal(pa, pb)


def test_initial_grid_must_fit():
    with pytest.raises(InvalidInputError):
        initial_positions(SystemConfig(M=16, A=0.01, D=0.0))


def test_zero_precoders_are_a_fixed_point():
    gi, ge = geometry(0, SMALL)
    zero = PrecoderPair(np.zeros((2, 2), complex), np.zeros((2, 2), complex))
    res = run_bcd(SMALL, gi, ge, SolverOptions(n_max=1, optimize_positions=False), precoders=zero)
    assert res.trace.f_values == [0.0, 0.0]


@pytest.mark.parametrize("seed", range(5))
def test_near_zero_start_improves_in_one_iteration(seed):
    gi, ge = geometry(seed, SMALL)
    p, _ = initialize(SMALL, stream(seed, INIT))
    res = run_bcd(SMALL, gi, ge, SolverOptions(n_max=1, optimize_positions=False), precoders=p.scaled(1e-6))
    f = res.trace.f_values
    assert f[1] > f[0]
    assert f[1] > 0


@pytest.mark.parametrize("seed", range(3))
def test_full_solve_monotone_feasible_consistent(seed):
    c = SystemConfig()
    gi, ge, res = solve(seed, c, record_positions=True, record_mm_traces=True)
    f = np.array(res.trace.f_values)
    assert np.all(np.diff(f) >= -1e-9)
    for trace in res.trace.mm_traces:
        assert np.all(np.diff(trace) <= 1e-9)
    region = TransmitRegion(c.half_width)
    for pos in res.trace.positions_history:
        for m in range(c.M):
            assert is_feasible(pos[m], region, np.delete(pos, m, axis=0), c.D - 1e-12)
    assert res.precoders.power <= c.p_max * (1 + 1e-9)
    h_i = assemble_channel(gi, res.positions, c.wavelength)
    h_e = assemble_channel(ge, res.positions, c.wavelength)
    sr = secrecy_rate(h_i, h_e, res.precoders, c.sigma2_i, c.sigma2_e)
    assert abs(res.trace.sr_values[-1] - sr) <= 1e-8
    assert len(f) == res.trace.iterations + 1
    assert res.trace.converged or res.trace.iterations == 500


def test_determinism():
    _, _, a = solve(3, SMALL)
    _, _, b = solve(3, SMALL)
    assert a.trace.f_values == b.trace.f_values
    assert np.array_equal(a.positions, b.positions)
    assert np.array_equal(a.precoders.v, b.precoders.v)


def test_fixed_positions_untouched():
    gi, ge = geometry(1, SMALL)
    pos = np.array([[-0.01, 0.0], [0.012, 0.004]])
    res = run_bcd(SMALL, gi, ge, SolverOptions(optimize_positions=False), stream(1, INIT), positions=pos.copy())
    assert np.array_equal(res.positions, pos)
    assert np.all(np.diff(res.trace.f_values) >= -1e-9)


def test_iteration_cap_respected():
    _, _, res = solve(2, SystemConfig(), n_max=3)
    assert res.trace.iterations <= 3
    assert len(res.trace.f_values) <= 4


def test_option_and_input_validation():
    with pytest.raises(InvalidInputError):
        SolverOptions(epsilon2=0.0)
    with pytest.raises(InvalidInputError):
        SolverOptions(n_max=0)
    gi, ge = geometry(0, SMALL)
    with pytest.raises(InvalidInputError):
        run_bcd(SMALL, gi, ge)
    p, _ = initialize(SMALL, stream(0, INIT))
    with pytest.raises(InvalidInputError):
        run_bcd(SMALL, gi, ge, precoders=p, positions=np.zeros((3, 2)))
