import cmath
import math

import numpy as np
import pytest

from starjam.channels import ChannelRealization, generate_channels
from starjam.config import SystemConfig
from starjam.optimize import evaluate_solution
from starjam.oracle import GridGuardError, GridSpec, brute_force_best


def tiny_cfg(power_dbm=20):
    return SystemConfig(K=2, N=1).with_power_dbm(power_dbm)


def test_single_element_aligns_with_direct_path():
    rng = np.random.default_rng(3)
    z = lambda: complex(rng.standard_normal(), rng.standard_normal())  # noqa: E731
    H, hr, hb = np.array([[z()]]), np.array([z()]), np.array([z()])
    zero = np.zeros(1, complex)
    ch = ChannelRealization(H, hr, np.array([z()]), zero, hb, zero)
    cfg = SystemConfig(K=1, N=1).with_power_dbm(0).replace(sigma2=1.0)
    res = brute_force_best(ch, cfg, GridSpec(phase_grid=16), scheme="conv-ris")
    # the model adds conj(h_b1) to conj(h_r1) * theta * H_br, so theta* rotates the cascade onto conj(h_b1)
    theta_star = cmath.phase(hb[0].conjugate()) - cmath.phase(hr[0].conjugate() * H[0, 0])
    got = cmath.phase(res.state.phi_r[0])
    diff = abs((got - theta_star + math.pi) % (2 * math.pi) - math.pi)
    assert diff <= math.pi / 16 + 1e-12


def test_zero_power():
    cfg = tiny_cfg().replace(Pmax=0.0)
    assert brute_force_best(generate_channels(cfg, 0), cfg).sum_rate == 0.0


def test_guards():
    with pytest.raises(GridGuardError):
        GridSpec(phase_grid=1)
    cfg = SystemConfig(K=4, N=1).with_power_dbm(20)
    with pytest.raises(GridGuardError):
        brute_force_best(generate_channels(cfg, 0), cfg)


@pytest.mark.parametrize("seed", range(4))
def test_returned_configuration_is_feasible(seed):
    cfg = tiny_cfg()
    ch = generate_channels(cfg, seed)
    res = brute_force_best(ch, cfg)
    rep = evaluate_solution(ch, res.beams, res.state, cfg)
    assert rep.leakage_ok and rep.sic_ok and rep.power_used <= cfg.power * (1 + 1e-6)
    assert rep.sum_rate == res.sum_rate


def test_grid_refinement_is_self_consistent():
    cfg = tiny_cfg()
    for seed in range(10):
        ch = generate_channels(cfg, seed)
        fine = brute_force_best(ch, cfg, GridSpec(phase_grid=64)).sum_rate
        coarse = brute_force_best(ch, cfg, GridSpec(phase_grid=8)).sum_rate
        assert abs(fine - coarse) <= 0.05, (seed, fine, coarse)
