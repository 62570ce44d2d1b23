import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from starjam.active import StageParams, evaluate_parts, multipliers_at
from starjam.channels import ChannelRealization
from starjam.conic import solve
from starjam.passive import (PassiveLifted, PenaltyState, ProjectionError, binary_surrogate, build_p3,
                             extract_phases, one_hot_project, rank_gap, rank_surrogate, unpack_lifted,
                             update_penalties)
from starjam.rates import StarRisState, build_effective_channels, lift, lifted_state

from conftest import random_channels


def uniform_lift(K, rng):
    beta = np.full((3, K), 1 / 3)
    v = [np.sqrt(b) * np.exp(1j * rng.uniform(0, 2 * np.pi, K)) for b in beta]
    return PassiveLifted(lift(v[0], 1.0), lift(v[1]), lift(v[2], 0.0), beta)


def test_projection_examples():
    cols = np.array([[0.6, 0.4, 0.0], [0.3, 0.4, 0.0], [0.1, 0.2, 1.0]])
    assert np.array_equal(one_hot_project(cols), [[1, 1, 0], [0, 0, 0], [0, 0, 1]])


def test_projection_respects_mask_and_sum():
    allowed = np.array([[False], [True], [True]])
    assert np.array_equal(one_hot_project(np.array([[0.9], [0.05], [0.05]]), allowed), [[0], [1], [0]])
    with pytest.raises(ProjectionError):
        one_hot_project(np.array([[0.5], [0.1], [0.1]]))


@given(seed=st.integers(0, 2 ** 31), K=st.integers(1, 10))
def test_projection_is_one_hot(seed, K):
    beta = np.random.default_rng(seed).dirichlet(np.ones(3), K).T
    out = one_hot_project(beta)
    assert np.array_equal(out.sum(axis=0), np.ones(K))
    assert np.all(beta[np.argmax(out, axis=0), np.arange(K)] >= beta.max(axis=0) - 1e-15)


def test_phases_recovered_from_exact_lift():
    rng = np.random.default_rng(4)
    phi = np.exp(1j * rng.uniform(0, 2 * np.pi, 5))
    modes = np.vstack([np.ones(5), np.zeros(5), np.zeros(5)])
    s = extract_phases(lift(phi, 1.0), np.zeros((5, 5)), np.zeros((6, 6)), modes)
    assert np.allclose(s.phi_r, phi, atol=1e-9)
    assert s.modulus_deviation == pytest.approx(0.0, abs=1e-9)


def test_all_transmit_masks_other_responses():
    rng = np.random.default_rng(5)
    phi = np.exp(1j * rng.uniform(0, 2 * np.pi, 3))
    modes = np.vstack([np.zeros(3), np.ones(3), np.zeros(3)])
    s = extract_phases(np.eye(4), lift(phi), np.eye(4), modes)
    assert not s.phi_r.any() and not s.phi_j.any()
    # no anchor slot on T: phases are defined up to one common rotation
    rot = s.phi_t[0] / phi[0]
    assert np.allclose(s.phi_t, rot * phi)


def test_higher_rank_input_records_deviation():
    rng = np.random.default_rng(6)
    u = np.linalg.qr(rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4)))[0]
    T = u @ np.diag([0, 0, 0.2, 1.0]) @ u.conj().T
    s = extract_phases(np.eye(5), T, np.eye(5), np.vstack([np.zeros(4), np.ones(4), np.zeros(4)]))
    assert np.allclose(np.abs(s.phi_t), 1.0)
    assert s.modulus_deviation > 0


def test_penalty_updates():
    it = uniform_lift(2, np.random.default_rng(0))
    pen = PenaltyState(1e-4, 1e-4, it)
    assert update_penalties(pen, 1.5).zeta == pytest.approx(1.5e-4)
    assert update_penalties(pen, 1.0) == pen
    p = pen
    for _ in range(7):
        p = update_penalties(p, 1.5)
    assert p.xi == pytest.approx(1e-4 * 1.5 ** 7, rel=1e-14)


@given(seed=st.integers(0, 2 ** 31), K=st.integers(1, 6))
def test_surrogates_tight_at_binary_rank_one_iterate(seed, K):
    rng = np.random.default_rng(seed)
    Z0 = lift(np.exp(1j * rng.uniform(0, 2 * np.pi, K)), 1.0)
    b0 = rng.integers(0, 2, (3, K)).astype(float)
    assert rank_surrogate(Z0, Z0, "dc") == pytest.approx(0.0, abs=1e-9 * K)
    assert rank_gap(Z0) == pytest.approx(0.0, abs=1e-9)
    assert np.allclose(binary_surrogate(b0, b0), 0.0)


@given(seed=st.integers(0, 2 ** 31))
def test_surrogates_are_upper_bounds(seed):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    B = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    Z, Z0 = A @ A.conj().T, B @ B.conj().T
    lam = np.linalg.eigvalsh(Z)
    # linearization of the convex spectral norm underestimates it, so the penalty overestimates the gap
    assert rank_surrogate(Z, Z0, "dc") >= lam.sum() - lam[-1] - 1e-9
    beta, beta0 = rng.uniform(0, 1, 5), rng.uniform(0, 1, 5)
    assert np.all(binary_surrogate(beta, beta0) >= beta - beta ** 2 - 1e-12)


def _p3_setup(K, seed):
    rng = np.random.default_rng(seed)
    ch = random_channels(rng, K, 2)
    eff = build_effective_channels(ch)
    params = StageParams(power=1.0, sigma2=1.0, tau=1.0)
    W1 = W2 = np.eye(2) / 4
    it = uniform_lift(K, rng)
    mus = multipliers_at(evaluate_parts(eff, W1, W2, *it.matrices(), params)[0], params)
    return eff, params, W1, W2, it, mus


def test_unpenalized_relaxation_solves():
    eff, params, W1, W2, it, mus = _p3_setup(2, 1)
    prob = build_p3(eff, W1, W2, PenaltyState(0.0, 0.0, it), params, mus)
    sol = solve(prob)
    assert sol.status == "optimal"
    out = unpack_lifted(sol, 2, prob.supports)
    assert np.allclose(out.beta.sum(axis=0), 1.0, atol=1e-6)
    assert np.all(out.beta >= -1e-7) and np.all(out.beta <= 1 + 1e-7)
    assert out.R[2, 2] == pytest.approx(1.0, abs=1e-6)


def test_fixed_modes_are_respected():
    eff, params, W1, W2, it, mus = _p3_setup(3, 2)
    modes = np.array([[1.0, 0, 0], [0, 1.0, 0], [0, 0, 1.0]])
    prob = build_p3(eff, W1, W2, PenaltyState(0.0, 1e-4, it), params, mus, fixed_beta=modes)
    sol = solve(prob)
    assert sol.status == "optimal"
    out = unpack_lifted(sol, 3, prob.supports, beta=modes)
    assert np.allclose(np.real(np.diag(out.T)), modes[1], atol=1e-6)
    assert out.J[3, 3] == 0 and out.R[1, 1] == 0


def test_unavoidable_eve_leak_is_infeasible():
    # Eve hears the BS directly and nothing through the surface, so no surface
    # configuration can bring her SINR under a near-zero tolerance
    K = 2
    one = np.ones(K, complex)
    ch = ChannelRealization(np.ones((K, 1), complex), one, one, np.zeros(K, complex),
                            np.ones(1, complex), 10 * np.ones(1, complex))
    eff = build_effective_channels(ch)
    W1 = W2 = np.eye(1) / 2
    params = StageParams(power=1.0, sigma2=1.0, tau=1e-6)
    it = uniform_lift(K, np.random.default_rng(0))
    mus = multipliers_at(evaluate_parts(eff, W1, W2, *it.matrices(), params)[0], params)
    prob = build_p3(eff, W1, W2, PenaltyState(1e-4, 1e-4, it), params, mus)
    assert solve(prob).status == "infeasible"


def test_lifted_state_of_binary_state_has_unit_diagonal_on_modes():
    s = StarRisState.from_modes(np.array([[1.0, 0], [0, 0], [0, 1.0]]), np.array([0.2, 1.1]))
    R, T, J = lifted_state(s)
    assert np.allclose(np.real(np.diag(R)), [1, 0, 1]) and not T.any()
    assert np.allclose(np.real(np.diag(J)), [0, 1, 0])
