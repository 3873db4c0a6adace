import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gapped1d import mps
from gapped1d.errors import ShapeError
from gapped1d.exact import embed_two_site

from conftest import dense_random_state


def test_dense_round_trip(rng):
    v = dense_random_state(5, 3, rng)
    s = mps.from_dense(v, 3, 5)
    assert np.allclose(mps.to_dense(s), v, atol=1e-12)
    assert s.is_canonical()


def test_inner_and_norm_match_dense(rng):
    a, b = mps.random_mps(6, 2, 4, rng), mps.random_mps(6, 2, 3, rng)
    assert mps.inner(a, b) == pytest.approx(np.vdot(mps.to_dense(a), mps.to_dense(b)), abs=1e-12)
    assert mps.norm(mps.scale(a, 2.5)) == pytest.approx(2.5)


def test_bond_mismatch_rejected():
    with pytest.raises(ShapeError):
        mps.MpsState((np.ones((1, 2, 2)), np.ones((3, 2, 1))))


def test_schmidt_values_match_svd(rng):
    v = dense_random_state(6, 2, rng)
    s = mps.from_dense(v, 2, 6)
    for cut in range(1, 6):
        ref = np.linalg.svd(v.reshape(2**cut, -1), compute_uv=False)
        got = mps.schmidt_values(s, cut)
        assert np.allclose(got, ref[: len(got)], atol=1e-12)


def test_schmidt_vectors_reconstruct(rng):
    s = mps.random_mps(5, 2, 3, rng)
    sd = mps.schmidt(s, 2)
    left = np.stack([mps.to_dense(u) for u in sd.left_vectors], 1)
    right = np.stack([mps.to_dense(u) for u in sd.right_vectors], 1)
    rebuilt = (left * sd.coefficients) @ right.T
    assert np.allclose(rebuilt.reshape(-1), mps.to_dense(s), atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), cut=st.integers(1, 5), D=st.integers(1, 4))
def test_trim_is_best_low_rank_approximation(seed, cut, D):
    rng = np.random.default_rng(seed)
    v = dense_random_state(6, 2, rng)
    t = mps.to_dense(mps.trim(mps.from_dense(v, 2, 6), cut, D))
    u, s, vh = np.linalg.svd(v.reshape(2**cut, -1), full_matrices=False)
    k = min(D, len(s))
    ref = ((u[:, :k] * s[:k]) @ vh[:k]).reshape(-1)
    assert np.allclose(t, ref, atol=1e-10)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), D=st.integers(1, 4))
def test_trim_all_caps_every_bond(seed, D):
    rng = np.random.default_rng(seed)
    s = mps.trim_all(mps.random_mps(7, 2, 6, rng), D)
    assert max(mps.schmidt_ranks(s)) <= D


def test_apply_two_site_op_matches_dense(rng):
    s = mps.random_mps(5, 2, 3, rng)
    G = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    got = mps.to_dense(mps.apply_two_site_op(G, 3, s))
    assert np.allclose(got, embed_two_site(G, 3, 5, 2) @ mps.to_dense(s), atol=1e-12)


def test_operator_schmidt_reassembles(rng):
    G = rng.standard_normal((9, 9)) + 1j * rng.standard_normal((9, 9))
    pieces = mps.operator_schmidt(G, 3, 3)
    assert np.allclose(sum(np.kron(E, F) for E, F in pieces), G, atol=1e-12)
    assert len(pieces) <= 9


def test_linear_combination(rng):
    a, b = mps.random_mps(4, 2, 2, rng), mps.random_mps(4, 2, 3, rng)
    c = mps.linear_combination([a, b], [0.3, -1j])
    assert np.allclose(mps.to_dense(c), 0.3 * mps.to_dense(a) - 1j * mps.to_dense(b), atol=1e-12)


def test_append_site_and_product_state():
    s = mps.append_site(mps.product_state([0, 1], 2), np.array([0.0, 1.0]))
    ref = np.zeros(8)
    ref[0b011] = 1
    assert np.allclose(mps.to_dense(s), ref)


def test_compress_keeps_state(rng):
    a = mps.random_mps(6, 2, 2, rng)
    doubled = mps.linear_combination([a, a], [0.5, 0.5], compress_result=False)
    c = mps.compress(doubled)
    assert c.max_bond <= a.max_bond
    assert np.allclose(mps.to_dense(c), mps.to_dense(a), atol=1e-10)


def test_json_round_trip_is_exact(rng):
    s = mps.random_mps(4, 3, 3, rng)
    back = mps.from_json(mps.to_json(s))
    for x, y in zip(s.tensors, back.tensors):
        assert np.array_equal(x, y)
