import numpy as np
import pytest

from gapped1d import hamiltonian


@pytest.fixture
def rng():
    return np.random.default_rng(20261016)


@pytest.fixture(scope="session")
def tfim6():
    return hamiltonian.normalize(hamiltonian.build(hamiltonian.ModelSpec("tfim", 6, params={"g": 2.0})))


def dense_random_state(n, d, rng):
    v = rng.standard_normal(d**n) + 1j * rng.standard_normal(d**n)
    return v / np.linalg.norm(v)


def witness_instance(rng, H, radius, n=5, cut=3, extra=3):
    """Size-trimming program with a known feasible point.

    The span contains the left Schmidt vectors of a random ``v``; the target is
    ``cont(v)`` (or its nearest grid point, with the radius widened to cover it),
    so ``|ls(v)><ls(v)|`` is feasible. Returns ``(problem, witness sigma)``.
    """
    from gapped1d import boundary, mps, sdp

    v = mps.random_mps(n, 2, 2, rng)
    sd = mps.schmidt(v, cut)
    B = sd.rank
    S = list(sd.left_vectors) + [mps.random_mps(cut, 2, 2, rng) for _ in range(extra)]
    basis = sdp.orthonormalize(S)
    c = boundary.contraction(v, cut)
    X = boundary.nearest_grid_element(c.matrix, boundary.NetSpec(B, 2, 0.5))
    r = radius + boundary.trace_distance(X, c.matrix)
    p = sdp.assemble(basis, H, cut, B, X, r)
    ls = mps.to_dense(boundary.left_state(v, cut).state)
    F = np.stack([mps.to_dense(basis.vector(k)) for k in range(basis.rank)], 1)
    coef = (F.conj().T @ ls.reshape(2**cut, B)).reshape(-1)
    return p, np.outer(coef, coef.conj())


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
