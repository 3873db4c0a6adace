"""Sampling approximate ground state projection.

With ``P_i = Id - H_i`` for ``i < n`` and ``P_n = Id``, one has
``1 - H/n = (1/n) sum_{i=1..n} P_i``, so
``A = (C (1 - H/n))^m = C^m n^-m sum_I P_I`` over ``I in {1..n}^m``. The
sampling operator ``K`` averages ``ell`` uniformly drawn terms, hence
``E[K] = A``. Products are ordered as written: ``P_I = P_{i_1} ... P_{i_m}``.
"""

from __future__ import annotations

import logging
import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from . import mps
from .errors import DenseCapError, ShapeError, TermOverflowError
from .exact import dense_matrix, embed_two_site
from .hamiltonian import LocalHamiltonian, projection_term
from .numerics import DEFAULT, Numerics

log = logging.getLogger(__name__)

KNOWN_EPSILON0 = "known"
UNNORMALIZED = "unnormalized"

# m = ceil((C_M/eps) n ln(q/c_eps)): with ratio <= exp(-eps/n) this reaches
# c_eps/(2q) whenever ln(q/c_eps) >= ln(169^2), which c_eps <= (1/169)^2 ensures
C_M = 1.07
# ell from the Chernoff tail 2 D exp(-ell / (4 C^2m q^2)) <= 1/(2 n^3), D = d^n
C_ELL = 4.0


@dataclass(frozen=True)
class AgspConfig:
    m: int
    ell: int
    kappa_cap: int = 8
    seed: int = 0
    scale_mode: str = UNNORMALIZED
    epsilon0: float | None = None
    strict: bool = True
    max_pairs: int = 200_000

    def __post_init__(self):
        if self.m < 0 or self.ell < 1 or self.kappa_cap < 1:
            raise ValueError("need m >= 0, ell >= 1, kappa_cap >= 1")
        if self.scale_mode not in (KNOWN_EPSILON0, UNNORMALIZED):
            raise ValueError(f"unknown scale_mode {self.scale_mode!r}")
        if self.scale_mode == KNOWN_EPSILON0 and self.epsilon0 is None:
            raise ValueError("known scale mode needs epsilon0")


@dataclass(frozen=True)
class SampledTerm:
    """Index sequence ``(i_1, ..., i_m)``; index ``n`` stands for the identity."""

    indices: tuple

    def occurrences(self) -> Counter:
        return Counter(self.indices)


def c_eps(epsilon: float) -> float:
    return (epsilon / 169.0) ** 2


def scale_factor(n: int, epsilon0: float | None, scale_mode: str) -> float:
    """``C = 1/(1 - eps0/n)`` or 1 when the ground energy is not supplied."""
    if scale_mode == UNNORMALIZED or epsilon0 is None:
        return 1.0
    return 1.0 / (1.0 - epsilon0 / n)


def choose_parameters(
    n: int,
    epsilon: float,
    q_target: float,
    c_eps_value: float | None = None,
    d: int = 2,
    epsilon0: float = 0.0,
    overrides: dict | None = None,
) -> dict:
    """Theory-mode ``(m, ell)``, or the desk overrides returned unchanged.

    Returns a dict with ``m``, ``ell``, ``mode`` and, in theory mode, the
    intermediate quantities used by the formulas.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if q_target < 1:
        raise ValueError("q_target must be >= 1")
    if overrides is not None:
        return {"m": int(overrides["m"]), "ell": int(overrides["ell"]), "mode": "desk"}
    ce = c_eps(epsilon) if c_eps_value is None else c_eps_value
    m = math.ceil(C_M / epsilon * n * math.log(q_target / ce))
    C = 1.0 / (1.0 - epsilon0 / n)
    log_ell = (
        math.log(C_ELL)
        + 2 * m * math.log(C)
        + 2 * math.log(q_target)
        + math.log(math.log(4.0) + n * math.log(d) + 3 * math.log(n))
    )
    ell = math.ceil(math.exp(log_ell)) if log_ell < 700 else math.inf
    return {"m": m, "ell": ell, "mode": "theory", "c_eps": ce, "log_ell": log_ell}


def _draw(rng: np.random.Generator, n: int, m: int) -> tuple:
    return tuple(int(x) for x in rng.integers(1, n + 1, size=m))


def _violates(indices: tuple, n: int, cap: int) -> bool:
    return any(k < n and c > cap for k, c in Counter(indices).items())


def sample_terms(H: LocalHamiltonian, cfg: AgspConfig, rng: np.random.Generator | None = None) -> list:
    """Draw ``ell`` index sequences uniformly from ``{1..n}^m``.

    In strict mode a sequence where some ``P_j`` (``j < n``) occurs more than
    ``kappa_cap`` times is redrawn; otherwise it is kept and logged.
    """
    if not H.normalized:
        raise ValueError("sample_terms needs a normalized Hamiltonian")
    rng = np.random.default_rng(cfg.seed) if rng is None else rng
    n, out, redraws = H.n, [], 0
    for _ in range(cfg.ell):
        idx = _draw(rng, n, cfg.m)
        while _violates(idx, n, cfg.kappa_cap):
            if not cfg.strict:
                log.info("term %s exceeds kappa_cap=%d (kept)", idx, cfg.kappa_cap)
                break
            redraws += 1
            if redraws > 1000 * cfg.ell:
                raise RuntimeError("kappa_cap is too small for this m; every draw violates it")
            idx = _draw(rng, n, cfg.m)
        out.append(SampledTerm(idx))
    if redraws:
        log.info("resampled %d terms over kappa_cap=%d", redraws, cfg.kappa_cap)
    return out


def occurrence_report(terms, n: int, kappa_cap: int) -> dict:
    """Largest per-term occurrence of any ``P_j`` and the number of violating terms."""
    worst, bad = 0, 0
    for t in terms:
        c = max((v for k, v in t.occurrences().items() if k < n), default=0)
        worst = max(worst, c)
        bad += c > kappa_cap
    return {"max_occurrence": worst, "violations": bad, "kappa_cap": kappa_cap}


# ----------------------------------------------------------- dense operators


def _require_dense(H: LocalHamiltonian, numerics: Numerics) -> None:
    if H.n > numerics.dense_cap(H.d):
        raise DenseCapError(f"n={H.n} exceeds dense cap")


def exact_A(
    H: LocalHamiltonian, m: int, scale_mode: str = UNNORMALIZED, epsilon0: float | None = None, numerics: Numerics = DEFAULT
) -> np.ndarray:
    """Dense ``(C (1 - H/n))^m``; ``C = 1`` in unnormalized mode."""
    _require_dense(H, numerics)
    w, v = np.linalg.eigh(dense_matrix(H, numerics))
    C = scale_factor(H.n, epsilon0, scale_mode)
    lam = (C * (1.0 - w / H.n)) ** m
    return (v * lam) @ v.conj().T


def _embedded_projections(H: LocalHamiltonian) -> list:
    dim = H.d**H.n
    ps = [embed_two_site(projection_term(H, i), i, H.n, H.d) for i in range(1, H.n)]
    return ps + [np.eye(dim, dtype=complex)]


def dense_K(terms, H: LocalHamiltonian, scale_mode: str = UNNORMALIZED, epsilon0: float | None = None, numerics: Numerics = DEFAULT) -> np.ndarray:
    """Dense ``C^m/ell sum_j P_{I_j}``."""
    _require_dense(H, numerics)
    ps = _embedded_projections(H)
    dim = H.d**H.n
    out = np.zeros((dim, dim), dtype=complex)
    m = len(terms[0].indices) if terms else 0
    # identical sequences need only one product
    for idx, count in Counter(t.indices for t in terms).items():
        prod = np.eye(dim, dtype=complex)
        for i in idx:
            if i != H.n:
                prod = prod @ ps[i - 1]
        out += count * prod
    C = scale_factor(H.n, epsilon0, scale_mode)
    return out * (C**m / max(len(terms), 1))


def verify_K_vs_A(terms, H: LocalHamiltonian, m: int, epsilon0: float, numerics: Numerics = DEFAULT) -> dict:
    """``||K - A||`` (both scaled by the true ``C``) and first-excited-state shrinkage."""
    _require_dense(H, numerics)
    K = dense_K(terms, H, KNOWN_EPSILON0, epsilon0, numerics)
    A = exact_A(H, m, KNOWN_EPSILON0, epsilon0, numerics)
    w, v = np.linalg.eigh(dense_matrix(H, numerics))
    g1 = v[:, 1]
    bound = ((1 - w[1] / H.n) / (1 - w[0] / H.n)) ** m
    return {
        "op_norm_error": float(np.linalg.norm(K - A, 2)),
        "shrinkage_factor": float(abs(np.vdot(g1, K @ g1))),
        "shrinkage_A": float(abs(np.vdot(g1, A @ g1))),
        "shrinkage_bound": float(bound),
    }


# ---------------------------------------------------------- cut decomposition


@dataclass(frozen=True)
class LeftOp:
    """Ordered factors ``(site, matrix, width)``; width 2 = two-site ``P_j``, 1 = ``E_k``."""

    factors: tuple

    def key(self) -> tuple:
        return tuple((s, w, id_) for s, _, w, id_ in self.factors)


@dataclass
class AgspDecomposition:
    cut: int
    n: int
    d: int
    left_ops: list
    right_ops: list | None
    weights: list
    # per sampled term, the number of pairs it expanded into
    pair_counts: list = field(default_factory=list)

    def unique_left_ops(self) -> list:
        """Distinct left operators in first-occurrence order."""
        seen, out = set(), []
        for op in self.left_ops:
            k = op.key()
            if k not in seen:
                seen.add(k)
                out.append(op)
        return out


def decompose_across_cut(
    terms,
    H: LocalHamiltonian,
    cut: int,
    scale_mode: str = UNNORMALIZED,
    epsilon0: float | None = None,
    keep_right: bool | None = None,
    max_pairs: int = 200_000,
    numerics: Numerics = DEFAULT,
) -> AgspDecomposition:
    """Split every ``P_I`` as ``sum_k A_k (x) B_k`` across ``(cut, cut+1)``.

    Only ``P_cut`` straddles the cut; it is expanded with its operator-Schmidt
    decomposition and every other factor goes wholly left or right. ``cut == n``
    (the last iteration) puts every factor on the left.
    """
    if not H.normalized:
        raise ValueError("decompose_across_cut needs a normalized Hamiltonian")
    n, d = H.n, H.d
    if not 1 <= cut <= n:
        raise ShapeError(f"cut {cut} invalid for n={n}")
    keep_right = n <= numerics.dense_cap(d) if keep_right is None else keep_right
    pieces = mps.operator_schmidt(projection_term(H, cut), d, d) if cut < n else []
    r = max(len(pieces), 1)
    total = sum(r ** t.occurrences().get(cut, 0) for t in terms)
    if total > max_pairs:
        worst = max(t.occurrences().get(cut, 0) for t in terms)
        raise TermOverflowError(
            f"{total} left/right pairs exceed cap {max_pairs} (growth {r}^occurrences, worst {worst} occurrences)"
        )
    m = len(terms[0].indices) if terms else 0
    C = scale_factor(n, epsilon0, scale_mode)
    w = C**m / max(len(terms), 1)
    # ids let LeftOp.key compare factors without hashing arrays
    proj_ids = {j: ("P", j) for j in range(1, n)}
    left_ops, right_ops, weights, counts = [], [] if keep_right else None, [], []
    for t in terms:
        cut_pos = [p for p, i in enumerate(t.indices) if i == cut and cut < n]
        combos = np.ndindex(*([r] * len(cut_pos))) if cut_pos else [()]
        cnt = 0
        for choice in combos:
            lf, rf = [], []
            ch = dict(zip(cut_pos, choice))
            for p, i in enumerate(t.indices):
                if i == n:
                    continue
                if i == cut and cut < n:
                    E, F = pieces[ch[p]]
                    lf.append((cut, E, 1, ("E", ch[p])))
                    rf.append((cut + 1, F, 1, ("F", ch[p])))
                elif i < cut:
                    lf.append((i, projection_term(H, i), 2, proj_ids[i]))
                else:
                    rf.append((i, projection_term(H, i), 2, proj_ids[i]))
            left_ops.append(LeftOp(tuple(lf)))
            if keep_right:
                right_ops.append(tuple(rf))
            weights.append(w)
            cnt += 1
        counts.append(cnt)
    return AgspDecomposition(cut, n, d, left_ops, right_ops, weights, counts)


def _dense_factor_product(factors, first_site: int, nsites: int, d: int) -> np.ndarray:
    dim = d**nsites
    out = np.eye(dim, dtype=complex)
    for site, M, width, _ in factors:
        k = site - first_site  # 0-based within the block
        op = np.kron(np.kron(np.eye(d**k), M), np.eye(d ** (nsites - k - width)))
        out = out @ op
    return out


def reassemble(decomp: AgspDecomposition) -> np.ndarray:
    """Dense ``sum_j w_j A_j (x) B_j`` (needs the retained right operators)."""
    if decomp.right_ops is None:
        raise ValueError("right operators were not retained")
    n, d, cut = decomp.n, decomp.d, decomp.cut
    out = np.zeros((d**n, d**n), dtype=complex)
    for lo, ro, w in zip(decomp.left_ops, decomp.right_ops, decomp.weights):
        A = _dense_factor_product(lo.factors, 1, cut, d)
        B = _dense_factor_product(ro, cut + 1, n - cut, d) if cut < n else np.eye(1)
        out += w * np.kron(A, B)
    return out


def apply_left_op(op: LeftOp, s: mps.MpsState, numerics: Numerics = DEFAULT) -> mps.MpsState:
    """``A |s>`` with factors applied right to left (the product acts as written)."""
    for site, M, width, _ in reversed(op.factors):
        if site + width - 1 > s.n:
            raise ShapeError(f"factor on site {site} does not fit a {s.n}-site vector")
        if width == 2:
            s = mps.apply_two_site_op(M, site, s, numerics)
        else:
            s = mps.apply_one_site_op(M, site, s)
    return s


def apply_left_parts(
    decomp: AgspDecomposition, vectors, numerics: Numerics = DEFAULT, unique: bool = True
) -> list:
    """Every distinct left operator applied to every vector, as ``(norm, state)`` pairs.

    Order is (operator, vector). States are returned unnormalized; zero-norm
    outputs are dropped.
    """
    ops = decomp.unique_left_ops() if unique else decomp.left_ops
    out, dropped = [], 0
    for v in vectors:
        if v.n != decomp.cut:
            raise ShapeError(f"vector on {v.n} sites, cut is {decomp.cut}")
    for op in ops:
        for v in vectors:
            w = apply_left_op(op, v, numerics)
            nrm = mps.norm(w)
            if nrm < numerics.zero_norm:
                dropped += 1
                continue
            out.append((nrm, w))
    if dropped:
        log.info("dropped %d zero-norm outputs at cut %d", dropped, decomp.cut)
    return out
