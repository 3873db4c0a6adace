import numpy as np
import pytest

from gapped1d import lemmas


@pytest.mark.parametrize(
    "check",
    [
        lemmas.check_energy_overlap,
        lemmas.check_overlap_triangle,
        lemmas.check_eckart_young,
        lemmas.check_trim2,
        lemmas.check_post_trim_energy,
    ],
)
def test_single_checks_hold(check):
    rng = np.random.default_rng(5)
    for _ in range(10):
        c = check(rng)
        assert c.holds, c


@pytest.mark.parametrize("eps", [0.1, 0.25, 0.5])
def test_trim1(eps):
    rng = np.random.default_rng(6)
    assert all(lemmas.check_trim1(rng, eps).holds for _ in range(10))


def test_gluing_clauses():
    rng = np.random.default_rng(7)
    for _ in range(10):
        assert all(c.holds for c in lemmas.gluing_clauses(rng))


def test_random_hamiltonian_is_normalized():
    H = lemmas.random_hamiltonian(4, 3, np.random.default_rng(0))
    for t in H.terms:
        w = np.linalg.eigvalsh(t)
        assert w[0] == pytest.approx(0.0, abs=1e-12) and w[-1] == pytest.approx(1.0)


def test_check_slack_sign():
    assert lemmas._le("x", 1.0, 2.0, 0.0).slack == 1.0
    assert not lemmas._le("x", 2.0, 1.0, 1e-9).holds
