import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from starjam.active import (MU_FLOOR, StageParams, beam_matrices, build_p2, evaluate_parts,
                            extract_beamformers, multipliers_at, update_mu12)
from starjam.channels import ChannelRealization, generate_channels
from starjam.conic import solve
from starjam.config import SystemConfig
from starjam.rates import EffectiveChannels, StarRisState, build_effective_channels, lifted_state


def normalized(ch, cfg):
    sc = math.sqrt(cfg.power / cfg.sigma2)
    raw = build_effective_channels(ch)
    return EffectiveChannels(raw.H1 * sc, raw.H2 * sc, raw.He * sc)


def half_split_state(K, seed=0):
    modes = np.zeros((3, K))
    modes[0, : K // 2] = 1
    modes[1, K // 2:] = 1
    return StarRisState.from_modes(modes, np.random.default_rng(seed).uniform(0, 2 * np.pi, K))


def test_mu_at_equal_terms():
    assert update_mu12(3.7, 3.7) == 1.0


@given(r=st.floats(1e-6, 1e6), g=st.floats(1e-6, 1e6))
def test_agm_equality_at_update(r, g):
    mu = update_mu12(r, g)
    assert (mu * g) ** 2 + (r / mu) ** 2 == pytest.approx(2 * r * g, rel=1e-12)


@given(r=st.floats(0, 1e3), g=st.floats(1e-3, 1e3), mu=st.floats(1e-3, 1e3))
def test_agm_bound_holds_for_any_mu(r, g, mu):
    assert r * g <= 0.5 * ((mu * g) ** 2 + (r / mu) ** 2) * (1 + 1e-12)


def test_mu_floor_and_errors():
    assert update_mu12(0.0, 2.0) == MU_FLOOR == 1e-8
    with pytest.raises(ValueError):
        update_mu12(1.0, 0.0)
    assert update_mu12(4.0, 123.0, tau=1.0) == 2.0


def test_zero_power_gives_unit_objective():
    cfg = SystemConfig(K=4)
    ch = generate_channels(cfg, 1)
    eff = build_effective_channels(ch)
    params = StageParams(power=0.0, sigma2=1.0, tau=1.0)
    Z = lifted_state(half_split_state(4))
    W0 = np.zeros((2, 2))
    mus = multipliers_at(evaluate_parts(eff, W0, W0, *Z, params)[0], params)
    sol = solve(build_p2(eff, Z, params, mus))
    assert sol.status == "optimal"
    assert sol["s"] == pytest.approx(1.0, abs=1e-7)
    W1, W2 = beam_matrices(sol, 2)
    assert not W1.any() and not W2.any()
    assert 2 * math.log2(sol["s"]) == pytest.approx(0.0, abs=1e-6)


def test_desk_instance_is_solved_with_small_residuals(desk_cfg, desk_channels):
    eff = normalized(desk_channels, desk_cfg)
    params = StageParams(power=1.0, sigma2=1.0, tau=desk_cfg.tau)
    Z = lifted_state(half_split_state(desk_cfg.K))
    W0 = np.eye(2) / 4
    parts = evaluate_parts(eff, W0, W0, *Z, params)[0]
    sol = solve(build_p2(eff, Z, params, multipliers_at(parts, params)))
    assert sol.status == "optimal" and sol.max_constraint_violation <= 1e-6
    W1, W2 = beam_matrices(sol, 2)
    assert np.real(np.trace(W1 + W2)) <= 1 + 1e-6
    for W in (W1, W2):
        assert np.linalg.eigvalsh(W)[0] >= -1e-7
    _, (num, jam), _ = evaluate_parts(eff, W1, W2, *Z, params)
    assert num <= params.leak_sinr * (1 + jam) * (1 + 1e-6) + 1e-9


def test_vanishing_tolerance_with_unavoidable_eve_signal_is_infeasible():
    # single antenna, Eve hears the direct path only and no element jams:
    # any beam that serves User1 leaks a fixed fraction of its power to Eve
    K = 2
    one = np.ones(K, complex)
    ch = ChannelRealization(np.ones((K, 1), complex), one, one, np.zeros(K, complex),
                            np.ones(1, complex), 10 * np.ones(1, complex))
    eff = build_effective_channels(ch)
    modes = np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]])
    Z = lifted_state(StarRisState.from_modes(modes, np.zeros(K)))
    params = StageParams(power=1.0, sigma2=1.0, tau=1e-9)
    W0 = np.eye(1) / 2
    mus = multipliers_at(evaluate_parts(eff, W0, W0, *Z, params)[0], params)
    assert mus["11"] is not None
    assert solve(build_p2(eff, Z, params, mus)).status == "infeasible"


def test_extract_exact_rank_one():
    w = np.array([1 + 2j, -0.5j])
    b = extract_beamformers(np.outer(w, w.conj()), np.zeros((2, 2)))
    phase = b.w1 @ w.conj() / abs(b.w1 @ w.conj())
    assert np.allclose(b.w1 * np.conj(phase), w)
    assert b.rank_residual_1 == pytest.approx(0.0, abs=1e-12) and b.path_1 == "principal"
    assert not b.w2.any() and b.rank_residual_2 == 0.0


def test_extract_diagonal_takes_randomized_path():
    b = extract_beamformers(np.diag([2.0, 1.0]), np.zeros((2, 2)))
    assert np.allclose(np.abs(b.w1), [math.sqrt(2), 0])
    assert b.rank_residual_1 == pytest.approx(0.5)
    assert b.path_1 == "randomized"


def test_randomization_keeps_best_scored_candidate():
    calls = []

    def score(w1, w2):
        calls.append(1)
        return float(abs(w1[1])), w1, w2

    b = extract_beamformers(np.diag([2.0, 1.0]), np.zeros((2, 2)), score=score,
                            rng=np.random.default_rng(0), samples=20)
    assert len(calls) == 21
    assert abs(b.w1[1]) > 0


@given(seed=st.integers(0, 2 ** 31), scale=st.floats(1e-3, 1e3))
def test_extract_rank_one_property(seed, scale):
    rng = np.random.default_rng(seed)
    w = scale * (rng.standard_normal(3) + 1j * rng.standard_normal(3))
    b = extract_beamformers(np.outer(w, w.conj()), np.outer(w, w.conj()))
    assert np.allclose(np.outer(b.w1, b.w1.conj()), np.outer(w, w.conj()), rtol=1e-8, atol=1e-10 * scale ** 2)
