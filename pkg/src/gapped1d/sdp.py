"""Density-matrix programs over ``Span(S) (x) C^B``.

The size-trimming program is

    min tr(H_L sigma)  s.t.  sigma >= 0, tr sigma = 1, ||R(sigma) - X||_1 <= r

where ``R`` traces out sites ``1..i-1``. It is solved with an augmented
Lagrangian on the splitting ``Z = R(sigma) - X``: the ``Z`` update is a
projection onto the trace-norm ball and the ``sigma`` update runs accelerated
projected gradient over the spectraplex.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import linalg, mps
from .errors import DegenerateSpanError, ShapeError
from .hamiltonian import LocalHamiltonian
from .numerics import DEFAULT, Numerics

log = logging.getLogger(__name__)

CONVERGED = "Converged"
MAX_ITER = "MaxIter"
INFEASIBLE = "Infeasible"


@dataclass(frozen=True)
class SolverConfig:
    feas_tol: float = 1e-6
    obj_tol: float = 1e-8
    max_iter: int = 5000
    penalty_init: float = 1.0
    penalty_growth: float = 2.0
    penalty_max: float = 1e8
    step_rule: str = "fista"  # or "subgradient": step 1/(L sqrt(t)) on an exact penalty
    inner_iter: int = 100
    inner_tol: float = 1e-10

    def __post_init__(self):
        if self.step_rule not in ("fista", "subgradient"):
            raise ValueError(f"unknown step_rule {self.step_rule!r}")


@dataclass
class SpanBasis:
    """Orthonormal ``|f_k> = sum_a basis_coeffs[a, k] |s_a>``."""

    source_vectors: list
    basis_coeffs: np.ndarray
    rank: int
    gram_threshold: float
    gram: np.ndarray = field(repr=False, default=None)

    def vector(self, k: int, numerics: Numerics = DEFAULT) -> mps.MpsState:
        return self.combine(self.basis_coeffs[:, k], numerics)

    def combine(self, coeffs_over_basis_or_sources: np.ndarray, numerics: Numerics = DEFAULT, over_basis: bool = False) -> mps.MpsState:
        c = np.asarray(coeffs_over_basis_or_sources)
        a = self.basis_coeffs @ c if over_basis else c
        return mps.linear_combination(self.source_vectors, list(a), numerics)


def gram_matrix(S) -> np.ndarray:
    N = len(S)
    G = np.zeros((N, N), dtype=complex)
    for a in range(N):
        for b in range(a, N):
            G[a, b] = mps.inner(S[a], S[b])
            G[b, a] = np.conj(G[a, b])
    return G


def orthonormalize(S, threshold: float | None = None, numerics: Numerics = DEFAULT) -> SpanBasis:
    """Orthonormal basis of ``Span(S)`` from the eigendecomposition of the Gram matrix."""
    if not S:
        raise ValueError("orthonormalize needs at least one vector")
    dims = S[0].dims
    if any(s.dims != dims for s in S):
        raise ShapeError("vectors have inconsistent shapes")
    threshold = numerics.gram_threshold if threshold is None else threshold
    G = gram_matrix(S)
    w, V = np.linalg.eigh(linalg.hermitize(G))
    order = np.argsort(w)[::-1]
    w, V = w[order], V[:, order]
    keep = w > threshold * max(1.0, w[0])
    if not np.any(keep):
        raise DegenerateSpanError("every Gram eigenvalue is below the rank threshold")
    C = V[:, keep] / np.sqrt(w[keep])
    return SpanBasis(list(S), C, int(keep.sum()), threshold, G)


# ------------------------------------------------------------------ problem


@dataclass
class SdpProblem:
    K: int
    B: int
    d: int
    objective_matrix: np.ndarray  # (K B) x (K B), index k*B + j
    reduce_ops: np.ndarray  # (K, K, d, d): tr_{1..i-1} |f_k><f_l|
    target: np.ndarray  # (d B) x (d B), index p*B + j
    radius: float

    @property
    def dim(self) -> int:
        return self.K * self.B

    def reduce(self, sigma: np.ndarray) -> np.ndarray:
        K, B, d = self.K, self.B, self.d
        s = sigma.reshape(K, B, K, B)
        return np.einsum("kjlm,klpq->pjqm", s, self.reduce_ops).reshape(d * B, d * B)

    def reduce_adjoint(self, G: np.ndarray) -> np.ndarray:
        K, B, d = self.K, self.B, self.d
        g = G.reshape(d, B, d, B)
        return np.einsum("pjqm,klpq->kjlm", g, self.reduce_ops.conj()).reshape(K * B, K * B)

    def objective(self, sigma: np.ndarray) -> float:
        return float(np.real(np.vdot(self.objective_matrix.conj().T, sigma)))

    def residual(self, sigma: np.ndarray) -> float:
        D = linalg.hermitize(self.reduce(sigma) - self.target)
        return max(0.0, float(np.abs(np.linalg.eigvalsh(D)).sum()) - self.radius)


@dataclass
class SdpSolution:
    sigma: np.ndarray
    objective_value: float
    feasibility_residual: float
    iterations: int
    status: str
    residual_history: list = field(default_factory=list)


def _site_reductions(S, cut: int) -> np.ndarray:
    """``R_ab[p, q] = sum_x s_a[x, p] conj(s_b[x, q])`` for vectors on ``cut`` sites."""
    N = len(S)
    d = S[0].dims[cut - 1]
    # prefix environments over sites 1..cut-1 for every pair
    out = np.zeros((N, N, d, d), dtype=complex)
    for a in range(N):
        for b in range(N):
            env = np.ones((1, 1), dtype=complex)
            ta, tb = S[a].tensors, S[b].tensors
            for k in range(cut - 1):
                e = np.tensordot(env, ta[k], axes=(0, 0))  # (beta, p, alpha')
                env = np.tensordot(e, tb[k].conj(), axes=([0, 1], [0, 1]))
            la, lb = ta[cut - 1][:, :, 0], tb[cut - 1][:, :, 0]
            out[a, b] = la.T @ env @ lb.conj()
    return out


def _pair_matrix(S, terms) -> np.ndarray:
    N = len(S)
    M = np.zeros((N, N), dtype=complex)
    if not terms:
        return M
    for a in range(N):
        for b in range(a, N):
            M[a, b] = mps.terms_matrix_element(S[a], S[b], terms)
            M[b, a] = np.conj(M[a, b])
    return M


@dataclass
class SpanOperators:
    """Everything about a span that the size-trimming program needs, independent of ``X``."""

    cut: int
    d: int
    H_left: np.ndarray  # <f_k|H_L|f_l>
    reduce_ops: np.ndarray  # (K, K, d, d)


def span_operators(basis: SpanBasis, H: LocalHamiltonian, cut: int) -> SpanOperators:
    S = basis.source_vectors
    if S[0].n != cut:
        raise ShapeError(f"basis vectors have {S[0].n} sites, cut is {cut}")
    C = basis.basis_coeffs
    HL = C.conj().T @ _pair_matrix(S, H.local_terms(1, cut - 1)) @ C
    R = _site_reductions(S, cut)
    M = np.einsum("ak,bl,abpq->klpq", C, C.conj(), R)
    return SpanOperators(cut, S[0].dims[cut - 1], linalg.hermitize(HL), M)


def problem_from(ops: SpanOperators, B: int, X: np.ndarray, radius: float) -> SdpProblem:
    d = ops.d
    X = np.asarray(X, dtype=complex)
    if X.shape != (d * B, d * B):
        raise ShapeError(f"target shape {X.shape} != {(d * B, d * B)}")
    obj = np.kron(ops.H_left, np.eye(B))
    return SdpProblem(ops.H_left.shape[0], B, d, obj, ops.reduce_ops, X, float(radius))


def assemble(basis: SpanBasis, H: LocalHamiltonian, cut: int, B: int, X: np.ndarray, radius: float) -> SdpProblem:
    """Objective ``<f_k|H_L|f_l> delta_jj'`` and the reduced operators on site ``cut``."""
    return problem_from(span_operators(basis, H, cut), B, X, radius)


# ------------------------------------------------------------------- solver


def _reduce_norm(p: SdpProblem, iters: int = 30) -> float:
    """Operator norm of ``R`` (Frobenius to Frobenius) by power iteration on ``R* R``."""
    rng = np.random.default_rng(0)
    x = rng.standard_normal((p.dim, p.dim))
    x = linalg.hermitize(x + 0j)
    lam = 1.0
    for _ in range(iters):
        y = p.reduce_adjoint(p.reduce(x))
        lam = np.linalg.norm(y)
        if lam == 0:
            return 1.0
        x = y / lam
    return float(np.sqrt(lam))


def _lowest_pure(O: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(O)
    return np.outer(v[:, 0], v[:, 0].conj())


def solve(p: SdpProblem, cfg: SolverConfig = SolverConfig(), sigma0: np.ndarray | None = None) -> SdpSolution:
    """Minimize ``tr(O sigma)`` over density matrices with ``||R(sigma) - X||_1 <= r``."""
    O = p.objective_matrix
    if p.dim == 1:
        sigma = np.ones((1, 1), dtype=complex)
        res = p.residual(sigma)
        status = CONVERGED if res <= cfg.feas_tol else INFEASIBLE
        return SdpSolution(sigma, p.objective(sigma), res, 0, status, [res])
    # R(sigma) is itself a density matrix, so this distance is a lower bound
    gap = linalg.distance_to_density_matrices(p.target) - p.radius
    if gap > cfg.feas_tol:
        sigma = _lowest_pure(O)
        return SdpSolution(sigma, p.objective(sigma), p.residual(sigma), 0, INFEASIBLE, [gap])
    if cfg.step_rule == "subgradient":
        return _solve_subgradient(p, cfg, sigma0)
    return _solve_al(p, cfg, sigma0)


def infeasibility_bound(p: SdpProblem, G: np.ndarray) -> float:
    """Lower bound on ``min_sigma ||R(sigma) - X||_1`` from a dual direction ``G``.

    For Hermitian ``G`` with ``||G|| <= 1`` and any density matrix ``sigma``,
    ``||R(sigma) - X||_1 >= tr(G R(sigma)) - tr(G X) >= lambda_min(R*(G)) - tr(G X)``.
    """
    G = linalg.hermitize(G)
    nrm = float(np.abs(np.linalg.eigvalsh(G)).max()) if G.size else 0.0
    if nrm == 0:
        return 0.0
    G = G / nrm
    lam = float(np.linalg.eigvalsh(linalg.hermitize(p.reduce_adjoint(G)))[0])
    return lam - float(np.real(np.vdot(G, p.target)))


def _solve_al(p: SdpProblem, cfg: SolverConfig, sigma0) -> SdpSolution:
    O = p.objective_matrix
    scale = max(1.0, float(np.abs(np.linalg.eigvalsh(O)).max()))
    Rn2 = _reduce_norm(p) ** 2
    mu = cfg.penalty_init * scale
    sigma = np.eye(p.dim, dtype=complex) / p.dim if sigma0 is None else sigma0
    Lam = np.zeros_like(p.target)
    total, history = 0, []
    prev_obj, prev_viol = np.inf, np.inf
    status = MAX_ITER
    while total < cfg.max_iter:
        # inner: accelerated projected gradient on the smooth AL in sigma
        step = 1.0 / (mu * Rn2)
        y, t, prev = sigma, 1.0, sigma
        for _ in range(cfg.inner_iter):
            W = p.reduce(y) - p.target + Lam / mu
            grad = O + mu * p.reduce_adjoint(W - linalg.project_trace_ball(W, p.radius))
            nxt = linalg.project_spectraplex(y - step * grad)
            total += 1
            t_new = 0.5 * (1 + np.sqrt(1 + 4 * t * t))
            y = nxt + ((t - 1) / t_new) * (nxt - prev)
            moved = np.linalg.norm(nxt - prev)
            prev, t = nxt, t_new
            if moved < cfg.inner_tol or total >= cfg.max_iter:
                break
        sigma = prev
        D = p.reduce(sigma) - p.target
        Z = linalg.project_trace_ball(D + Lam / mu, p.radius)
        viol = D - Z
        Lam = Lam + mu * viol
        res = p.residual(sigma)
        history.append(res)
        obj = p.objective(sigma)
        if res <= cfg.feas_tol and abs(obj - prev_obj) < cfg.obj_tol:
            status = CONVERGED
            break
        if res > cfg.feas_tol and infeasibility_bound(p, Lam) > p.radius + cfg.feas_tol:
            status = INFEASIBLE
            break
        vn = float(np.linalg.norm(viol))
        if vn > 0.5 * prev_viol:
            mu = min(mu * cfg.penalty_growth, cfg.penalty_max)
        prev_viol, prev_obj = vn, obj
    res = p.residual(sigma)
    if status == CONVERGED and res > cfg.feas_tol:
        status = MAX_ITER
    return SdpSolution(sigma, p.objective(sigma), res, total, status, history)


def _trace_norm_subgradient(D: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(linalg.hermitize(D))
    return (v * np.sign(w)) @ v.conj().T


def _solve_subgradient(p: SdpProblem, cfg: SolverConfig, sigma0) -> SdpSolution:
    """Projected subgradient on ``tr(O s) + mu max(0, ||R(s) - X||_1 - r)``."""
    O = p.objective_matrix
    L = max(1.0, float(np.abs(np.linalg.eigvalsh(O)).max()))
    mu = cfg.penalty_init * L
    sigma = np.eye(p.dim, dtype=complex) / p.dim if sigma0 is None else sigma0
    best, best_key, history = sigma, (np.inf, np.inf), []
    epoch = max(1, cfg.max_iter // 20)
    for it in range(1, cfg.max_iter + 1):
        D = p.reduce(sigma) - p.target
        g = O.copy()
        if p.residual(sigma) > 0:
            g = g + mu * p.reduce_adjoint(_trace_norm_subgradient(D))
        sigma = linalg.project_spectraplex(sigma - g / (L * mu / cfg.penalty_init * np.sqrt(it)))
        res = p.residual(sigma)
        key = (max(res - cfg.feas_tol, 0.0), p.objective(sigma))
        if key < best_key:
            best, best_key = sigma, key
        if it % epoch == 0:
            history.append(best_key[0])
            if best_key[0] > 0:
                mu = min(mu * cfg.penalty_growth, cfg.penalty_max)
    res = p.residual(best)
    status = CONVERGED if res <= cfg.feas_tol else MAX_ITER
    return SdpSolution(best, p.objective(best), res, cfg.max_iter, status, history)


# ---------------------------------------------------------- read-out helpers


def leading_eigenvector(sol: SdpSolution, basis: SpanBasis, B: int, numerics: Numerics = DEFAULT) -> list:
    """Components ``|u_j>`` (on the left sites) of the top eigenvector of ``sigma``."""
    w, v = np.linalg.eigh(linalg.hermitize(sol.sigma))
    if len(w) > 1 and abs(w[-1] - w[-2]) < 1e-10:
        log.info("top eigenvalue of sigma is degenerate; taking the first in eigh order")
    u = v[:, -1].reshape(basis.rank, B)
    out = []
    for j in range(B):
        c = u[:, j]
        if np.linalg.norm(c) < 1e-10:
            continue
        out.append(basis.combine(c, numerics, over_basis=True))
    return out


def ground_in_span(basis: SpanBasis, H: LocalHamiltonian, numerics: Numerics = DEFAULT):
    """Minimize ``tr(H sigma)`` over all density matrices on the span.

    Without the boundary constraint the optimum is pure: the lowest eigenvector
    of ``H`` compressed to the span. Returns ``(energy, state)``.
    """
    S = basis.source_vectors
    C = basis.basis_coeffs
    Hs = linalg.hermitize(C.conj().T @ _pair_matrix(S, H.local_terms()) @ C)
    w, v = np.linalg.eigh(Hs)
    state = mps.normalize(basis.combine(v[:, 0], numerics, over_basis=True))
    return float(w[0]), state
