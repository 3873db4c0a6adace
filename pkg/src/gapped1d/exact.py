"""Exact diagonalization for short chains.

This is the ground truth behind every fidelity and lemma check; nothing in the
solver itself depends on it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import eigsh

from .errors import DenseCapError, ShapeError
from .hamiltonian import LocalHamiltonian
from .mps import MpsState, to_dense
from .numerics import DEFAULT, Numerics

# above this dimension use Lanczos on a sparse matrix instead of eigh
_DENSE_EIGH_MAX = 2048


@dataclass(frozen=True)
class ExactSolution:
    epsilon0: float
    epsilon1: float
    ground_vector: np.ndarray
    degenerate: bool

    @property
    def gap(self) -> float:
        return self.epsilon1 - self.epsilon0


def _check(H: LocalHamiltonian, numerics: Numerics) -> None:
    cap = numerics.dense_cap(H.d)
    if H.n > cap:
        raise DenseCapError(f"n={H.n} exceeds dense cap {cap}")


def embed_two_site(G: np.ndarray, site: int, n: int, d: int) -> np.ndarray:
    """``Id^(site-1) (x) G (x) Id^(n-site-1)`` as a dense matrix."""
    return np.kron(np.kron(np.eye(d ** (site - 1)), G), np.eye(d ** (n - site - 1)))


def dense_matrix(H: LocalHamiltonian, numerics: Numerics = DEFAULT, start: int = 1, stop: int | None = None) -> np.ndarray:
    """Dense ``sum_i`` of embedded terms ``start..stop`` (default: all)."""
    _check(H, numerics)
    stop = H.n - 1 if stop is None else stop
    dim = H.d**H.n
    out = np.zeros((dim, dim), dtype=complex)
    for i in range(start, stop + 1):
        out += embed_two_site(H.terms[i - 1], i, H.n, H.d)
    return out


def sparse_matrix(H: LocalHamiltonian, numerics: Numerics = DEFAULT) -> sp.csr_matrix:
    _check(H, numerics)
    d, n = H.d, H.n
    out = sp.csr_matrix((d**n, d**n), dtype=complex)
    for i, t in enumerate(H.terms, start=1):
        op = sp.kron(sp.kron(sp.identity(d ** (i - 1)), sp.csr_matrix(t)), sp.identity(d ** (n - i - 1)))
        out = out + op.tocsr()
    return out


def apply_terms(terms, v: np.ndarray, n: int, d: int) -> np.ndarray:
    """Matrix-free action of ``sum (site, G)`` on a dense vector."""
    psi = v.reshape((d,) * n)
    out = np.zeros_like(psi)
    for site, G in terms:
        k = site - 1
        g = np.asarray(G).reshape(d, d, d, d)
        moved = np.tensordot(g, psi, axes=([2, 3], [k, k + 1]))
        out += np.moveaxis(moved, [0, 1], [k, k + 1])
    return out.reshape(-1)


def energy(H: LocalHamiltonian, v: np.ndarray) -> float:
    """``<v|H|v> / <v|v>`` for a dense vector."""
    hv = apply_terms(H.local_terms(), v, H.n, H.d)
    return float(np.vdot(v, hv).real / np.vdot(v, v).real)


def _fix_phase(v: np.ndarray) -> np.ndarray:
    k = int(np.argmax(np.abs(v)))
    return v * (abs(v[k]) / v[k])


def solve(H: LocalHamiltonian, numerics: Numerics = DEFAULT) -> ExactSolution:
    """Two lowest eigenpairs; the ground vector's phase is fixed for determinism."""
    _check(H, numerics)
    dim = H.d**H.n
    if dim <= _DENSE_EIGH_MAX:
        w, v = np.linalg.eigh(dense_matrix(H, numerics))
        e0, e1, g = float(w[0]), float(w[1]), v[:, 0]
    else:
        rng = np.random.default_rng(0)
        v0 = rng.standard_normal(dim) + 0j
        w, v = eigsh(sparse_matrix(H, numerics), k=2, which="SA", v0=v0, tol=1e-12)
        order = np.argsort(w)
        e0, e1, g = float(w[order[0]]), float(w[order[1]]), v[:, order[0]]
    g = _fix_phase(g / np.linalg.norm(g))
    return ExactSolution(e0, e1, g, (e1 - e0) < 1e-8)


def fidelity(s: MpsState, sol: ExactSolution, numerics: Numerics = DEFAULT) -> float:
    """``|<s|Gamma>|`` for the exact ground vector."""
    v = to_dense(s, numerics)
    if v.size != sol.ground_vector.size:
        raise ShapeError("state and ground vector sizes differ")
    return float(min(1.0, abs(np.vdot(v, sol.ground_vector))))


def schmidt_spectrum(v: np.ndarray, cut: int, n: int, d: int) -> np.ndarray:
    return np.linalg.svd(v.reshape(d**cut, d ** (n - cut)), compute_uv=False)


def minimal_trim_rank(v: np.ndarray, cut: int, n: int, d: int, delta: float) -> int:
    """Smallest ``B`` with ``|<v|trim_B(v)/||trim_B(v)||>| >= 1 - delta`` for unit ``v``."""
    lam = schmidt_spectrum(v, cut, n, d)
    overlaps = np.sqrt(np.cumsum(lam**2)) / np.linalg.norm(lam)
    return int(np.argmax(overlaps >= 1 - delta - 1e-15) + 1)


def witness_fidelity(left_vectors, ground: np.ndarray, cut: int, n: int, d: int, threshold: float = 1e-10) -> float:
    """Best overlap with ``Gamma`` of a state whose left part lies in ``span(left_vectors)``.

    Equals ``||(P_span (x) Id) Gamma||``.
    """
    if not left_vectors:
        return 0.0
    M = np.stack([np.asarray(v).reshape(-1) for v in left_vectors], axis=1)
    u, s, _ = np.linalg.svd(M, full_matrices=False)
    q = u[:, s > threshold * max(s[0], 1e-300)]
    G = ground.reshape(d**cut, d ** (n - cut))
    return float(min(1.0, np.linalg.norm(q.conj().T @ G)))


def fixture_record(spec, H: LocalHamiltonian, numerics: Numerics = DEFAULT) -> dict:
    sol = solve(H, numerics)
    return {"model": spec.to_dict(), "n": H.n, "epsilon0": sol.epsilon0, "epsilon1": sol.epsilon1}
