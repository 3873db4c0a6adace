"""Small dense linear-algebra helpers shared by the boundary, SDP and lemma code."""

from __future__ import annotations

import numpy as np


def hermitize(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + a.conj().T)


def trace_norm(a: np.ndarray) -> float:
    return float(np.sum(np.linalg.svd(a, compute_uv=False)))


def partial_trace(rho: np.ndarray, dims, keep) -> np.ndarray:
    """Reduced matrix on the subsystems listed in ``keep`` (order preserved)."""
    dims = list(dims)
    k = len(dims)
    keep = sorted(keep)
    t = rho.reshape(dims + dims)
    traced = [i for i in range(k) if i not in keep]
    # contract traced pairs from the back so axis numbers stay valid
    for i in sorted(traced, reverse=True):
        t = np.trace(t, axis1=i, axis2=i + t.ndim // 2)
    dk = int(np.prod([dims[i] for i in keep])) if keep else 1
    return t.reshape(dk, dk)


def project_simplex(y: np.ndarray, total: float = 1.0) -> np.ndarray:
    """Euclidean projection of a real vector onto ``{x >= 0, sum x = total}`` (sort method)."""
    y = np.asarray(y, dtype=float)
    if total <= 0:
        return np.zeros_like(y)
    u = np.sort(y)[::-1]
    css = np.cumsum(u) - total
    idx = np.arange(1, y.size + 1)
    rho = np.nonzero(u - css / idx > 0)[0][-1]
    theta = css[rho] / (rho + 1.0)
    return np.maximum(y - theta, 0.0)


def project_l1_ball(y: np.ndarray, radius: float) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if np.sum(np.abs(y)) <= radius:
        return y.copy()
    return np.sign(y) * project_simplex(np.abs(y), radius)


def project_spectraplex(a: np.ndarray) -> np.ndarray:
    """Frobenius-nearest PSD matrix of unit trace."""
    w, v = np.linalg.eigh(hermitize(a))
    p = project_simplex(w)
    keep = p > 0
    return (v[:, keep] * p[keep]) @ v[:, keep].conj().T


def project_trace_ball(a: np.ndarray, radius: float) -> np.ndarray:
    """Frobenius-nearest Hermitian matrix with trace norm at most ``radius``."""
    w, v = np.linalg.eigh(hermitize(a))
    if np.sum(np.abs(w)) <= radius:
        return hermitize(a)
    p = project_l1_ball(w, radius)
    return (v * p) @ v.conj().T


def distance_to_density_matrices(x: np.ndarray) -> float:
    """Exact trace-norm distance from a Hermitian matrix to the set of density matrices."""
    w = np.linalg.eigvalsh(hermitize(x))
    pos = w[w > 0].sum()
    return float(-w[w < 0].sum() + abs(pos - 1.0))


def random_density_matrix(dim: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    rank = dim if rank is None else rank
    g = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_unit_vector(dim: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return v / np.linalg.norm(v)


def orthonormal_columns(m: np.ndarray, threshold: float = 1e-10) -> np.ndarray:
    u, s, _ = np.linalg.svd(m, full_matrices=False)
    if s.size == 0:
        return u[:, :0]
    return u[:, s > threshold * max(s[0], 1e-300)]
