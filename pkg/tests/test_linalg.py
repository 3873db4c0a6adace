import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from gapped1d import linalg


@settings(max_examples=100, deadline=None)
@given(y=arrays(float, st.integers(1, 12), elements=st.floats(-5, 5)), total=st.floats(0.1, 3.0))
def test_simplex_projection_kkt(y, total):
    x = linalg.project_simplex(y, total)
    assert np.all(x >= 0)
    assert x.sum() == pytest.approx(total)
    # y - x is constant on the support and no smaller off it
    pos = x > 0
    theta = (y - x)[pos]
    assert np.ptp(theta) < 1e-9
    assert np.all(y[~pos] <= theta[0] + 1e-9)


def test_simplex_zero_total():
    assert np.array_equal(linalg.project_simplex(np.array([1.0, 2.0]), 0.0), np.zeros(2))


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), dim=st.integers(1, 6))
def test_spectraplex_projection_beats_random_density_matrices(seed, dim):
    rng = np.random.default_rng(seed)
    a = linalg.hermitize(rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim)))
    p = linalg.project_spectraplex(a)
    assert np.trace(p).real == pytest.approx(1.0)
    assert np.linalg.eigvalsh(p)[0] >= -1e-12
    best = np.linalg.norm(a - p)
    for _ in range(20):
        assert np.linalg.norm(a - linalg.random_density_matrix(dim, rng)) >= best - 1e-12


def test_trace_ball_projection(rng):
    a = linalg.hermitize(rng.standard_normal((5, 5)))
    p = linalg.project_trace_ball(a, 0.3)
    assert linalg.trace_norm(p) == pytest.approx(0.3)
    small = 0.01 * a / linalg.trace_norm(a)
    assert np.allclose(linalg.project_trace_ball(small, 0.3), small)


def test_partial_trace_of_product(rng):
    a = linalg.random_density_matrix(2, rng)
    b = linalg.random_density_matrix(3, rng)
    c = linalg.random_density_matrix(2, rng)
    rho = np.kron(np.kron(a, b), c)
    assert np.allclose(linalg.partial_trace(rho, [2, 3, 2], [1]), b)
    assert np.allclose(linalg.partial_trace(rho, [2, 3, 2], [0, 2]), np.kron(a, c))


def test_distance_to_density_matrices(rng):
    rho = linalg.random_density_matrix(4, rng)
    assert linalg.distance_to_density_matrices(rho) == pytest.approx(0.0, abs=1e-12)
    assert linalg.distance_to_density_matrices(2 * rho) == pytest.approx(1.0)
    assert linalg.distance_to_density_matrices(-rho) == pytest.approx(2.0)
    # never more than the distance to any particular density matrix
    x = linalg.hermitize(rng.standard_normal((4, 4)))
    d = linalg.distance_to_density_matrices(x)
    for _ in range(50):
        assert linalg.trace_norm(x - linalg.random_density_matrix(4, rng)) >= d - 1e-12


def test_orthonormal_columns_drops_dependent(rng):
    a = rng.standard_normal((6, 2))
    q = linalg.orthonormal_columns(np.column_stack([a, a @ [1.0, 2.0]]))
    assert q.shape == (6, 2)
