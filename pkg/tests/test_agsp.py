import itertools
import math

import numpy as np
import pytest

from gapped1d import agsp, exact, hamiltonian, mps
from gapped1d.errors import TermOverflowError
from gapped1d.exact import dense_matrix


def tfim(n, g=2.0):
    return hamiltonian.normalize(hamiltonian.build(hamiltonian.ModelSpec("tfim", n, params={"g": g})))


def all_terms(n, m):
    return [agsp.SampledTerm(t) for t in itertools.product(range(1, n + 1), repeat=m)]


@pytest.mark.parametrize("m", [1, 2, 3, 4])
def test_exhaustive_terms_reproduce_the_power(m):
    H = tfim(3)
    A = np.linalg.matrix_power(np.eye(8) - dense_matrix(H) / 3, m)
    K = agsp.dense_K(all_terms(3, m), H)
    assert np.linalg.norm(K - A, 2) <= 1e-10
    assert np.allclose(agsp.exact_A(H, m), A, atol=1e-12)


def test_known_scale_fixes_the_ground_state():
    H = tfim(4)
    sol = exact.solve(H)
    A = agsp.exact_A(H, 5, agsp.KNOWN_EPSILON0, sol.epsilon0)
    assert np.allclose(A @ sol.ground_vector, sol.ground_vector, atol=1e-12)


def test_sampling_is_seeded_and_respects_kappa():
    H = tfim(5)
    cfg = agsp.AgspConfig(m=10, ell=200, kappa_cap=3, seed=4)
    a, b = agsp.sample_terms(H, cfg), agsp.sample_terms(H, cfg)
    assert [t.indices for t in a] == [t.indices for t in b]
    rep = agsp.occurrence_report(a, 5, 3)
    assert rep["violations"] == 0 and rep["max_occurrence"] <= 3
    assert all(1 <= i <= 5 for t in a for i in t.indices)


def test_sampling_needs_normalized_hamiltonian():
    H = hamiltonian.build(hamiltonian.ModelSpec("tfim", 3))
    with pytest.raises(ValueError):
        agsp.sample_terms(H, agsp.AgspConfig(m=2, ell=3))


def test_sample_mean_is_unbiased():
    H = tfim(3)
    cfg = agsp.AgspConfig(m=2, ell=20000, kappa_cap=2, seed=1, strict=False)
    K = agsp.dense_K(agsp.sample_terms(H, cfg), H)
    assert np.linalg.norm(K - agsp.exact_A(H, 2), 2) < 0.05


def test_shrinkage_matches_eigendata():
    H = tfim(4)
    sol = exact.solve(H)
    res = agsp.verify_K_vs_A(all_terms(4, 3), H, 3, sol.epsilon0)
    assert res["op_norm_error"] <= 1e-10
    assert res["shrinkage_A"] == pytest.approx(res["shrinkage_bound"], abs=1e-12)


@pytest.mark.parametrize("cut", [1, 2, 3, 4, 5])
def test_cut_decomposition_reassembles(cut):
    H = tfim(5)
    terms = agsp.sample_terms(H, agsp.AgspConfig(m=6, ell=40, seed=cut))
    dec = agsp.decompose_across_cut(terms, H, cut, keep_right=True)
    assert np.linalg.norm(agsp.reassemble(dec) - agsp.dense_K(terms, H), 2) <= 1e-9


def test_cut_decomposition_overflow():
    H = tfim(4)
    terms = [agsp.SampledTerm((2,) * 8)]
    with pytest.raises(TermOverflowError):
        agsp.decompose_across_cut(terms, H, 2, max_pairs=100)


def test_left_parts_act_like_the_dense_left_factors(rng):
    H = tfim(5)
    terms = agsp.sample_terms(H, agsp.AgspConfig(m=5, ell=10, seed=2))
    dec = agsp.decompose_across_cut(terms, H, 3, keep_right=False)
    v = mps.random_mps(3, 2, 2, rng)
    outs = agsp.apply_left_parts(dec, [v], unique=False)
    ops = [op for op in dec.left_ops]
    dense = [agsp._dense_factor_product(op.factors, 1, 3, 2) @ mps.to_dense(v) for op in ops]
    dense = [w for w in dense if np.linalg.norm(w) >= 1e-12]
    assert len(outs) == len(dense)
    for (nrm, w), ref in zip(outs, dense):
        assert nrm == pytest.approx(np.linalg.norm(ref))
        assert np.allclose(mps.to_dense(w), ref, atol=1e-12)


def test_theory_parameters():
    par = agsp.choose_parameters(8, 0.3, 8.0, d=2)
    ce = (0.3 / 169) ** 2
    assert par["m"] == math.ceil(agsp.C_M / 0.3 * 8 * math.log(8 / ce))
    assert par["mode"] == "theory" and par["log_ell"] > 0
    assert agsp.choose_parameters(8, 0.3, 8.0, overrides={"m": 3, "ell": 5})["m"] == 3
    with pytest.raises(ValueError):
        agsp.choose_parameters(8, 0.0, 8.0)
