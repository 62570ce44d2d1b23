import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from starjam.conic import (BuilderError, ConicProblem, NonAffineError, dump_problem, from_real_embedding,
                           real_embedding, solve)

BACKENDS = ("clarabel", "cvxopt")


def test_trace_problem_is_well_formed():
    p = ConicProblem()
    X = p.add_variable("X", "hermitian", 2)
    p.add_psd(X)
    p.add_le(X.trace(), 1.0)
    p.set_objective(X.trace())
    c, A, b, cones = p.compile()
    assert len(c) == 4 and A.shape[0] == len(b)
    assert solve(p).objective_value == pytest.approx(1.0, abs=1e-6)


def test_builder_errors():
    p = ConicProblem()
    x = p.add_variable("x")
    other = ConicProblem().add_variable("y")
    with pytest.raises(BuilderError, match="undeclared"):
        p.add_le(other, 1.0)
    with pytest.raises(NonAffineError):
        p.add_le(x * x, 1.0)
    with pytest.raises(NonAffineError):
        p.add_le(x ** 2, 1.0)
    X = p.add_variable("X", "hermitian", 2)
    with pytest.raises(NonAffineError):
        p.add_le(X, 1.0)
    with pytest.raises(BuilderError, match="duplicate"):
        p.add_variable("x")


def test_maximize_bounded_scalar():
    p = ConicProblem()
    x = p.add_variable("x")
    p.add_le(x, 5.0)
    p.set_objective(x)
    sol = solve(p)
    assert sol.status == "optimal" and sol["x"] == pytest.approx(5.0, abs=1e-6)


def test_euclidean_norm():
    p = ConicProblem()
    t = p.add_variable("t")
    p.add_soc([3.0, 4.0], t)
    p.set_objective(t, "minimize")
    assert solve(p).objective_value == pytest.approx(5.0, abs=1e-6)


def test_identity_bound():
    p = ConicProblem()
    X = p.add_variable("X", "hermitian", 2)
    p.add_psd(X)
    p.add_psd(X, scale=-1.0, offset=np.eye(2))
    p.set_objective(X.trace())
    sol = solve(p)
    assert sol.status == "optimal" and sol.objective_value == pytest.approx(2.0, abs=1e-6)
    assert np.allclose(sol["X"], np.eye(2), atol=1e-5)


def test_infeasible_and_unbounded():
    p = ConicProblem()
    x = p.add_variable("x")
    p.add_ge(x, 2.0)
    p.add_le(x, 1.0)
    p.set_objective(x)
    assert solve(p).status == "infeasible"
    q = ConicProblem()
    y = q.add_variable("y")
    q.add_ge(y, 0.0)
    q.set_objective(y)
    assert solve(q).status == "unbounded"


@pytest.mark.parametrize("backend", BACKENDS)
def test_complex_coupling_both_backends(backend):
    # maximize Re(e^{-ia} X01) over unit-trace PSD X; optimum 1/2 at X01 = e^{ia}/2
    a = 0.7
    p = ConicProblem()
    X = p.add_variable("X", "hermitian", 2)
    p.add_psd(X)
    p.add_eq(X.trace(), 1.0)
    C = np.array([[0, np.exp(1j * a)], [0, 0]])
    p.set_objective(X.inner(C))
    sol = solve(p, backend=backend)
    assert sol.status == "optimal"
    assert sol.backend_status.startswith(backend)
    assert sol.objective_value == pytest.approx(0.5, abs=1e-6)
    assert sol["X"][0, 1] == pytest.approx(0.5 * np.exp(1j * a), abs=1e-5)


@pytest.mark.parametrize("backend", BACKENDS)
def test_rotated_cone_both_backends(backend):
    p = ConicProblem()
    X = p.add_variable("X", "hermitian", 1)
    p.add_psd(X)
    x = p.add_variable("x")
    p.add_le(X.trace(), 4.0)
    p.add_rotated_soc(x, X.trace(), 1.0)   # x^2 <= Tr X
    p.set_objective(x)
    sol = solve(p, backend=backend)
    assert sol["x"] == pytest.approx(2.0, abs=1e-5)


@given(seed=st.integers(0, 2 ** 31), n=st.integers(1, 5))
def test_hermitian_parameter_round_trip(seed, n):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    H = A + A.conj().T
    p = ConicProblem()
    X = p.add_variable("X", "hermitian", n)
    assert np.allclose(X.from_params(X.to_params(H)), H)
    assert np.allclose(from_real_embedding(real_embedding(H)), H)
    C = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    val = X.inner(C).value({"X": X.to_params(H)})
    assert val == pytest.approx(np.real(np.trace(C @ H)), rel=1e-10, abs=1e-10)


@given(seed=st.integers(0, 2 ** 31), n=st.integers(1, 4))
def test_backends_agree_on_random_sdp(seed, n):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    C = A + A.conj().T
    p = ConicProblem()
    X = p.add_variable("X", "hermitian", n)
    p.add_psd(X)
    p.add_eq(X.trace(), 1.0)
    p.set_objective(X.inner(C))
    lam = np.linalg.eigvalsh(C)[-1]
    for backend in BACKENDS:
        assert solve(p, backend=backend).objective_value == pytest.approx(lam, abs=1e-5)


def test_cvxopt_backend_rejects_lmis():
    p = ConicProblem()
    X = p.add_variable("X", "hermitian", 2)
    p.add_psd(X)
    p.add_psd(X, scale=-1.0, offset=np.eye(2))
    p.set_objective(X.trace())
    with pytest.raises(BuilderError):
        solve(p, backend="cvxopt")


def test_dump_is_plain_text(tmp_path):
    p = ConicProblem("demo")
    x = p.add_variable("x")
    p.add_le(x, 5.0)
    p.set_objective(x)
    dump_problem(p, tmp_path / "p.txt")
    text = (tmp_path / "p.txt").read_text()
    assert text.startswith("# starjam conic dump v1") and "np." not in text
