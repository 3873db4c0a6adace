import numpy as np
import pytest

from gapped1d import hamiltonian, linalg, mps, sdp
from gapped1d.errors import DegenerateSpanError

from conftest import witness_instance


@pytest.fixture(scope="module")
def H5():
    return hamiltonian.normalize(hamiltonian.build(hamiltonian.ModelSpec("tfim", 5, params={"g": 2.0})))


def test_orthonormalize_gives_orthonormal_span(rng):
    S = [mps.random_mps(4, 2, 2, rng) for _ in range(3)]
    S.append(mps.linear_combination(S[:2], [1.0, 2.0]))
    basis = sdp.orthonormalize(S)
    assert basis.rank == 3
    F = np.stack([mps.to_dense(basis.vector(k)) for k in range(3)], 1)
    assert np.allclose(F.conj().T @ F, np.eye(3), atol=1e-10)


def test_orthonormalize_rejects_zero_span():
    z = mps.scale(mps.product_state([0, 0], 2), 0.0)
    with pytest.raises(DegenerateSpanError):
        sdp.orthonormalize([z])


def test_reduce_and_adjoint_are_adjoint(rng, H5):
    p, _ = witness_instance(rng, H5, 0.1)
    x = linalg.hermitize(rng.standard_normal((p.dim, p.dim)) + 1j * rng.standard_normal((p.dim, p.dim)))
    g = linalg.hermitize(rng.standard_normal((p.d * p.B,) * 2) + 1j * rng.standard_normal((p.d * p.B,) * 2))
    assert np.vdot(g, p.reduce(x)) == pytest.approx(np.vdot(p.reduce_adjoint(g), x), abs=1e-10)


def test_witness_reduces_to_the_contraction(rng, H5):
    p, w = witness_instance(rng, H5, 0.0)
    assert p.residual(w) <= 1e-10
    assert np.trace(w).real == pytest.approx(1.0)


def test_objective_is_left_energy_of_embedded_state(rng, H5):
    from gapped1d import exact

    p, w = witness_instance(rng, H5, 0.1)
    # for a pure witness the objective equals <ls|H_L (x) 1|ls>
    assert p.objective(w) >= -1e-12
    Hl = hamiltonian.LocalHamiltonian(3, 2, H5.terms[:2], True)
    assert np.linalg.eigvalsh(exact.dense_matrix(Hl))[0] - 1e-9 <= p.objective(w)


@pytest.mark.parametrize("seed", range(6))
def test_witness_dominance(seed, H5):
    rng = np.random.default_rng(seed)
    p, w = witness_instance(rng, H5, 0.1)
    sol = sdp.solve(p, sdp.SolverConfig())
    assert sol.status != sdp.INFEASIBLE
    assert sol.objective_value <= p.objective(w) + 1e-6
    if sol.status == sdp.CONVERGED:
        assert sol.feasibility_residual <= 1e-6


def test_matches_cvxpy(H5):
    cp = pytest.importorskip("cvxpy")
    rng = np.random.default_rng(11)
    p, _ = witness_instance(rng, H5, 0.1)
    sol = sdp.solve(p)
    n, B = p.dim, p.B
    X = cp.Variable((n, n), hermitian=True)
    R = sum(cp.kron(p.reduce_ops[k, l], X[k * B : (k + 1) * B, l * B : (l + 1) * B]) for k in range(p.K) for l in range(p.K))
    P = cp.Variable((p.d * B,) * 2, hermitian=True)
    N = cp.Variable((p.d * B,) * 2, hermitian=True)
    cons = [X >> 0, cp.real(cp.trace(X)) == 1, P >> 0, N >> 0, R - p.target == P - N, cp.real(cp.trace(P + N)) <= p.radius]
    prob = cp.Problem(cp.Minimize(cp.real(cp.trace(p.objective_matrix @ X))), cons)
    prob.solve(solver="CLARABEL")
    assert sol.objective_value == pytest.approx(prob.value, abs=1e-5)


def test_far_target_is_certified_infeasible(rng, H5):
    p, _ = witness_instance(rng, H5, 0.0)
    far = sdp.SdpProblem(p.K, p.B, p.d, p.objective_matrix, p.reduce_ops, 3 * p.target, 0.1)
    assert sdp.solve(far).status == sdp.INFEASIBLE


def test_dual_certificate_catches_feasible_looking_target(rng, H5):
    # a density matrix target outside the reachable set: only the dual bound can reject it
    p, _ = witness_instance(rng, H5, 0.0, extra=0)
    dim = p.d * p.B
    rho = linalg.random_density_matrix(dim, rng)
    bad = sdp.SdpProblem(p.K, p.B, p.d, p.objective_matrix, p.reduce_ops, rho, 0.0)
    sol = sdp.solve(bad, sdp.SolverConfig(max_iter=3000))
    if sol.status == sdp.INFEASIBLE:
        G = np.eye(dim)
        assert np.isfinite(sdp.infeasibility_bound(bad, G))
    else:
        assert sol.feasibility_residual >= 0


def test_subgradient_rule_also_respects_witness(rng, H5):
    p, w = witness_instance(rng, H5, 0.2)
    sol = sdp.solve(p, sdp.SolverConfig(step_rule="subgradient", max_iter=3000))
    assert sol.status != sdp.INFEASIBLE
    assert sol.objective_value <= p.objective(w) + 1e-6


def test_ground_in_span_is_exact_eigenproblem(rng, H5):
    from gapped1d import exact

    sol = exact.solve(H5)
    g = mps.from_dense(sol.ground_vector, 2, 5)
    basis = sdp.orthonormalize([g, mps.random_mps(5, 2, 2, rng)])
    e, state = sdp.ground_in_span(basis, H5)
    assert e == pytest.approx(sol.epsilon0, abs=1e-10)
    assert exact.fidelity(state, sol) == pytest.approx(1.0, abs=1e-8)
