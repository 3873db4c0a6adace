"""Matrix product states and the handful of tensor operations the solver needs.

Site and cut numbering follows the physics convention used throughout the
package: sites are ``1..n``, ``cut=i`` separates sites ``[1, i]`` from
``[i+1, n]``, and a two-site operator at ``site=i`` acts on ``(i, i+1)``.
Tensors are stored as ``(left_bond, physical, right_bond)`` complex arrays.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import DenseCapError, NotNormalizedError, ShapeError
from .numerics import DEFAULT, Numerics

__all__ = [
    "MpsState",
    "SchmidtData",
    "MpoOperator",
    "from_dense",
    "to_dense",
    "inner",
    "norm",
    "normalize",
    "scale",
    "schmidt",
    "schmidt_values",
    "schmidt_ranks",
    "trim",
    "trim_all",
    "apply_two_site_op",
    "apply_one_site_op",
    "expectation",
    "terms_matrix_element",
    "linear_combination",
    "compress",
    "move_center",
    "append_site",
    "product_state",
    "random_mps",
    "operator_schmidt",
    "to_json",
    "from_json",
]


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.complex128)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class MpsState:
    """Open-boundary matrix product state.

    ``canonical_center`` (1-based) is set when every tensor left of it is a left
    isometry and every tensor right of it a right isometry.
    """

    tensors: tuple
    canonical_center: int | None = None
    norm_tolerance: float = DEFAULT.norm_tolerance

    def __post_init__(self):
        ts = tuple(_freeze(t) for t in self.tensors)
        if not ts:
            raise ShapeError("an MPS needs at least one site")
        for k, t in enumerate(ts):
            if t.ndim != 3:
                raise ShapeError(f"tensor {k + 1} has {t.ndim} indices, expected 3")
        if ts[0].shape[0] != 1 or ts[-1].shape[2] != 1:
            raise ShapeError("boundary bonds must have dimension 1")
        for k in range(len(ts) - 1):
            if ts[k].shape[2] != ts[k + 1].shape[0]:
                raise ShapeError(
                    f"bond mismatch between sites {k + 1} and {k + 2}: "
                    f"{ts[k].shape[2]} != {ts[k + 1].shape[0]}"
                )
        if self.canonical_center is not None and not 1 <= self.canonical_center <= len(ts):
            raise ShapeError(f"canonical center {self.canonical_center} out of range")
        object.__setattr__(self, "tensors", ts)

    @property
    def n(self) -> int:
        return len(self.tensors)

    @property
    def d(self) -> int:
        return self.tensors[0].shape[1]

    @property
    def dims(self) -> tuple:
        return tuple(t.shape[1] for t in self.tensors)

    @property
    def bond_dims(self) -> tuple:
        return tuple(t.shape[2] for t in self.tensors[:-1])

    @property
    def max_bond(self) -> int:
        return max(self.bond_dims, default=1)

    def with_tensors(self, tensors, center=None) -> "MpsState":
        return MpsState(tuple(tensors), center, self.norm_tolerance)

    def is_canonical(self, center: int | None = None) -> bool:
        """Check the isometry conditions around ``center`` (default: the recorded one)."""
        c = self.canonical_center if center is None else center
        if c is None:
            return False
        for k, t in enumerate(self.tensors):
            l, p, r = t.shape
            if k < c - 1:
                m = t.reshape(l * p, r)
                err = np.linalg.norm(m.conj().T @ m - np.eye(r))
            elif k > c - 1:
                m = t.reshape(l, p * r)
                err = np.linalg.norm(m @ m.conj().T - np.eye(l))
            else:
                continue
            if err > self.norm_tolerance:
                return False
        return True


@dataclass(frozen=True)
class SchmidtData:
    cut: int
    coefficients: np.ndarray
    left_vectors: list = field(repr=False)
    right_vectors: list = field(repr=False)
    # left block with U absorbed (last right bond = rank) and right block with
    # V^dagger absorbed (first left bond = rank); reused by boundary code
    left_tensors: list = field(repr=False, default_factory=list)
    right_tensors: list = field(repr=False, default_factory=list)

    @property
    def rank(self) -> int:
        return len(self.coefficients)


@dataclass(frozen=True)
class MpoOperator:
    """Matrix product operator with tensors ``(left, out, in, right)``."""

    tensors: tuple

    def __post_init__(self):
        ts = tuple(_freeze(t) for t in self.tensors)
        if ts[0].shape[0] != 1 or ts[-1].shape[3] != 1:
            raise ShapeError("boundary bonds must have dimension 1")
        for k in range(len(ts) - 1):
            if ts[k].shape[3] != ts[k + 1].shape[0]:
                raise ShapeError(f"MPO bond mismatch after site {k + 1}")
        object.__setattr__(self, "tensors", ts)

    @property
    def n(self) -> int:
        return len(self.tensors)

    @property
    def d(self) -> int:
        return self.tensors[0].shape[1]

    @classmethod
    def identity(cls, n: int, d: int) -> "MpoOperator":
        eye = np.eye(d, dtype=complex).reshape(1, d, d, 1)
        return cls(tuple(eye for _ in range(n)))

    @classmethod
    def from_two_site(cls, G: np.ndarray, site: int, n: int, d: int) -> "MpoOperator":
        """Embed a ``d^2 x d^2`` operator on ``(site, site+1)`` into an n-site MPO."""
        pairs = operator_schmidt(G, d, d)
        r = len(pairs)
        left = np.stack([e for e, _ in pairs], axis=-1).reshape(1, d, d, r)
        right = np.stack([f for _, f in pairs], axis=0).reshape(r, d, d, 1)
        eye = np.eye(d, dtype=complex).reshape(1, d, d, 1)
        ts = [eye] * n
        ts[site - 1] = left
        ts[site] = right
        return cls(tuple(ts))

    def to_dense(self) -> np.ndarray:
        out = np.ones((1, 1, 1), dtype=complex)
        for t in self.tensors:
            l, po, pi, r = t.shape
            out = np.einsum("xyl,lpqr->xpyqr", out, t)
            a, b, c, e, f = out.shape
            out = out.reshape(a * b, c * e, f)
        return out[:, :, 0]

    def apply(self, s: MpsState, numerics: Numerics = DEFAULT, compress_result: bool = True) -> MpsState:
        if self.n != s.n:
            raise ShapeError("MPO and MPS lengths differ")
        ts = []
        for w, a in zip(self.tensors, s.tensors):
            lw, po, pi, rw = w.shape
            la, pa, ra = a.shape
            if pi != pa:
                raise ShapeError("physical dimension mismatch")
            t = np.einsum("lpqr,aqb->laprb", w, a)
            ts.append(t.reshape(lw * la, po, rw * ra))
        out = s.with_tensors(ts)
        return compress(out, numerics) if compress_result else out


# ---------------------------------------------------------------- dense io


def _check_dense_cap(n: int, d: int, numerics: Numerics) -> None:
    cap = numerics.dense_cap(d)
    if n > cap:
        raise DenseCapError(f"n={n} exceeds dense cap {cap} for d={d}")


def from_dense(v, d: int, n: int, numerics: Numerics = DEFAULT) -> MpsState:
    """Left-canonical MPS of a dense vector by successive SVDs."""
    v = np.asarray(v, dtype=np.complex128).reshape(-1)
    if v.size != d**n:
        raise ShapeError(f"vector length {v.size} != d**n = {d**n}")
    _check_dense_cap(n, d, numerics)
    total = np.linalg.norm(v)
    psi = v.reshape(1, -1)
    left = 1
    tensors = []
    for _ in range(n - 1):
        psi = psi.reshape(left * d, -1)
        u, s, vh = np.linalg.svd(psi, full_matrices=False)
        keep = _rank(s, total, numerics)
        tensors.append(u[:, :keep].reshape(left, d, keep))
        psi = s[:keep, None] * vh[:keep]
        left = keep
    tensors.append(psi.reshape(left, d, 1))
    return MpsState(tuple(tensors), canonical_center=n)


def to_dense(s: MpsState, numerics: Numerics = DEFAULT) -> np.ndarray:
    """Contract the tensor train into a dense vector (sites ordered left to right)."""
    total = int(np.prod(s.dims))
    if total > max(2**numerics.dense_cap_qubit, 3**numerics.dense_cap_qutrit):
        raise DenseCapError(f"dense dimension {total} exceeds cap")
    psi = np.ones((1, 1), dtype=complex)
    for t in s.tensors:
        l, p, r = t.shape
        psi = (psi @ t.reshape(l, p * r)).reshape(-1, r)
    return psi.reshape(-1)


def _rank(s: np.ndarray, scale_norm: float, numerics: Numerics) -> int:
    thr = numerics.svd_discard * max(scale_norm, np.finfo(float).tiny)
    return max(1, int(np.count_nonzero(s > thr)))


# ------------------------------------------------------------ contractions


def inner(a: MpsState, b: MpsState) -> complex:
    """<a|b> by a left-to-right zipper contraction."""
    if a.dims != b.dims:
        raise ShapeError(f"physical dims differ: {a.dims} vs {b.dims}")
    env = np.ones((1, 1), dtype=complex)
    for ta, tb in zip(a.tensors, b.tensors):
        env = np.tensordot(env, ta.conj(), axes=(0, 0))  # (kb, p, ra)
        env = np.tensordot(env, tb, axes=([0, 1], [0, 1]))  # (ra, rb)
    return complex(env[0, 0])


def norm(s: MpsState) -> float:
    if s.canonical_center is not None:
        return float(np.linalg.norm(s.tensors[s.canonical_center - 1]))
    return float(np.sqrt(max(inner(s, s).real, 0.0)))


def scale(s: MpsState, c: complex) -> MpsState:
    k = (s.canonical_center or 1) - 1
    ts = list(s.tensors)
    ts[k] = ts[k] * c
    return s.with_tensors(ts, s.canonical_center)


def normalize(s: MpsState) -> MpsState:
    nrm = norm(s)
    if nrm == 0:
        raise NotNormalizedError("cannot normalize the zero vector")
    return scale(s, 1.0 / nrm)


def _left_envs(bra: Sequence, ket: Sequence) -> list:
    envs = [np.ones((1, 1), dtype=complex)]
    for ta, tb in zip(bra, ket):
        e = np.tensordot(envs[-1], ta.conj(), axes=(0, 0))
        envs.append(np.tensordot(e, tb, axes=([0, 1], [0, 1])))
    return envs


def _right_envs(bra: Sequence, ket: Sequence) -> list:
    n = len(bra)
    envs = [None] * (n + 1)
    envs[n] = np.ones((1, 1), dtype=complex)
    for k in range(n - 1, -1, -1):
        e = np.tensordot(bra[k].conj(), envs[k + 1], axes=(2, 0))  # (la, p, rb)
        envs[k] = np.tensordot(e, ket[k], axes=([1, 2], [1, 2]))  # (la, lb)
    return envs


def terms_matrix_element(bra: MpsState, ket: MpsState, terms: Iterable) -> complex:
    """Sum of ``<bra|G|ket>`` over ``(site, G)`` pairs of two-site operators."""
    if bra.dims != ket.dims:
        raise ShapeError("physical dims differ")
    terms = list(terms)
    if not terms:
        return 0j
    L = _left_envs(bra.tensors, ket.tensors)
    R = _right_envs(bra.tensors, ket.tensors)
    total = 0j
    for site, G in terms:
        k = site - 1
        tk = np.tensordot(ket.tensors[k], ket.tensors[k + 1], axes=(2, 0))
        tb = np.tensordot(bra.tensors[k], bra.tensors[k + 1], axes=(2, 0))
        p, q = tk.shape[1], tk.shape[2]
        g = np.asarray(G).reshape(p, q, p, q)
        val = np.einsum("AB,AxyC,xypq,BpqD,CD->", L[k], tb.conj(), g, tk, R[k + 2], optimize=True)
        total += val
    return complex(total)


def expectation(s: MpsState, H, numerics: Numerics = DEFAULT) -> float:
    """Energy ``sum_i <s|H_i|s>`` of a normalized state."""
    nrm2 = inner(s, s).real
    if abs(nrm2 - 1.0) > numerics.normalized_tol:
        raise NotNormalizedError(f"state has squared norm {nrm2:.3e}")
    val = terms_matrix_element(s, s, ((i + 1, h) for i, h in enumerate(H.terms)))
    if abs(val.imag) > 1e-9 * max(1.0, abs(val.real)):
        raise ArithmeticError(f"expectation has imaginary part {val.imag:.3e}")
    return float(val.real)


# ------------------------------------------------------------ canonical form


def move_center(s: MpsState, site: int) -> MpsState:
    """Return an equivalent MPS in mixed canonical form centred on ``site``."""
    ts = list(s.tensors)
    n = len(ts)
    c = s.canonical_center
    if c is None:
        # full sweeps: left-orthonormalize everything, then walk back
        for k in range(n - 1):
            ts[k], ts[k + 1] = _qr_right(ts[k], ts[k + 1])
        c = n
    for k in range(c - 1, site - 1):
        ts[k], ts[k + 1] = _qr_right(ts[k], ts[k + 1])
    for k in range(c - 1, site - 1, -1):
        ts[k - 1], ts[k] = _lq_left(ts[k - 1], ts[k])
    return s.with_tensors(ts, site)


def _qr_right(a: np.ndarray, b: np.ndarray):
    l, p, r = a.shape
    q, rr = np.linalg.qr(a.reshape(l * p, r))
    k = q.shape[1]
    return q.reshape(l, p, k), np.tensordot(rr, b, axes=(1, 0))


def _lq_left(a: np.ndarray, b: np.ndarray):
    l, p, r = b.shape
    q, rr = np.linalg.qr(b.reshape(l, p * r).T)
    k = q.shape[1]
    return np.tensordot(a, rr.T, axes=(2, 0)), q.T.reshape(k, p, r)


def compress(s: MpsState, numerics: Numerics = DEFAULT, max_bond: int | None = None) -> MpsState:
    """Drop numerically-zero singular values on every bond.

    The result is right-canonical (center at site 1). With ``max_bond`` the
    sweep also truncates, which is *not* the same as :func:`trim_all`.
    """
    ts = list(move_center(s, s.n).tensors)
    total = float(np.linalg.norm(ts[-1]))
    for k in range(s.n - 1, 0, -1):
        l, p, r = ts[k].shape
        u, sv, vh = np.linalg.svd(ts[k].reshape(l, p * r), full_matrices=False)
        keep = _rank(sv, total, numerics)
        if max_bond is not None:
            keep = min(keep, max_bond)
        ts[k] = vh[:keep].reshape(keep, p, r)
        ts[k - 1] = np.tensordot(ts[k - 1], u[:, :keep] * sv[:keep], axes=(2, 0))
    return s.with_tensors(ts, 1)


# ------------------------------------------------------------------ schmidt


def _split(s: MpsState, cut: int, numerics: Numerics):
    if not 1 <= cut <= s.n - 1:
        raise ShapeError(f"cut {cut} invalid for n={s.n}")
    c = move_center(s, cut + 1)
    ts = list(c.tensors)
    centre = ts[cut]
    l, p, r = centre.shape
    u, sv, vh = np.linalg.svd(centre.reshape(l, p * r), full_matrices=False)
    total = float(np.linalg.norm(sv))
    keep = _rank(sv, total, numerics) if total > 0 else 1
    left = ts[:cut]
    left[-1] = np.tensordot(left[-1], u[:, :keep], axes=(2, 0))
    right = [vh[:keep].reshape(keep, p, r)] + ts[cut + 1 :]
    return left, sv[:keep], right


def schmidt(s: MpsState, cut: int, numerics: Numerics = DEFAULT) -> SchmidtData:
    """Schmidt decomposition across ``cut`` as families of MPS vectors."""
    left, lam, right = _split(s, cut, numerics)
    lv, rv = [], []
    for j in range(len(lam)):
        lt = list(left)
        lt[-1] = lt[-1][:, :, j : j + 1]
        lv.append(MpsState(tuple(lt), canonical_center=cut))
        rt = list(right)
        rt[0] = rt[0][j : j + 1]
        rv.append(MpsState(tuple(rt), canonical_center=1))
    return SchmidtData(cut, lam, lv, rv, left, right)


def schmidt_values(s: MpsState, cut: int, numerics: Numerics = DEFAULT) -> np.ndarray:
    return _split(s, cut, numerics)[1]


def schmidt_ranks(s: MpsState, numerics: Numerics = DEFAULT) -> list:
    return [len(schmidt_values(s, c, numerics)) for c in range(1, s.n)]


def trim(s: MpsState, cut: int, D: int, numerics: Numerics = DEFAULT) -> MpsState:
    """Keep the ``D`` largest Schmidt components across ``cut`` (unnormalized)."""
    if D < 1:
        raise ValueError("D must be >= 1")
    left, lam, right = _split(s, cut, numerics)
    keep = min(D, len(lam))
    left[-1] = left[-1][:, :, :keep] * lam[:keep]
    right[0] = right[0][:keep]
    return s.with_tensors(left + right, cut)


def trim_all(s: MpsState, D: int, numerics: Numerics = DEFAULT) -> MpsState:
    """Trim cuts ``1..n-1`` in order, each on the output of the previous one.

    A single left-to-right sweep over a right-canonical state does this
    exactly: at step ``k`` the state is centred on site ``k`` so the SVD of the
    centre tensor is the Schmidt decomposition of the current state.
    """
    if D < 1:
        raise ValueError("D must be >= 1")
    ts = list(move_center(s, 1).tensors)
    for k in range(s.n - 1):
        l, p, r = ts[k].shape
        u, sv, vh = np.linalg.svd(ts[k].reshape(l * p, r), full_matrices=False)
        keep = min(D, _rank(sv, float(np.linalg.norm(sv)), numerics))
        ts[k] = u[:, :keep].reshape(l, p, keep)
        ts[k + 1] = np.tensordot(sv[:keep, None] * vh[:keep], ts[k + 1], axes=(1, 0))
    return s.with_tensors(ts, s.n)


# -------------------------------------------------------------- operators


def apply_two_site_op(
    G: np.ndarray, site: int, s: MpsState, numerics: Numerics = DEFAULT, compress_bond: bool = True
) -> MpsState:
    """Apply ``G`` (rows = output) to sites ``(site, site+1)``.

    The state is first centred on ``site`` so that dropping singular values
    below the discard threshold is a controlled, norm-relative truncation.
    """
    if not 1 <= site <= s.n - 1:
        raise ShapeError(f"site {site} invalid for n={s.n}")
    k = site - 1
    p, q = s.dims[k], s.dims[k + 1]
    G = np.asarray(G, dtype=complex)
    if G.shape != (p * q, p * q):
        raise ShapeError(f"operator shape {G.shape} != {(p * q, p * q)}")
    c = move_center(s, site) if compress_bond else s
    ts = list(c.tensors)
    theta = np.tensordot(ts[k], ts[k + 1], axes=(2, 0))  # (l, p, q, r)
    theta = np.einsum("xyab,labr->lxyr", G.reshape(p, q, p, q), theta)
    l, _, _, r = theta.shape
    u, sv, vh = np.linalg.svd(theta.reshape(l * p, q * r), full_matrices=False)
    keep = _rank(sv, float(np.linalg.norm(sv)), numerics) if compress_bond else len(sv)
    ts[k] = u[:, :keep].reshape(l, p, keep)
    ts[k + 1] = (sv[:keep, None] * vh[:keep]).reshape(keep, q, r)
    return c.with_tensors(ts, site + 1 if compress_bond else None)


def apply_one_site_op(O: np.ndarray, site: int, s: MpsState) -> MpsState:
    if not 1 <= site <= s.n:
        raise ShapeError(f"site {site} invalid for n={s.n}")
    O = np.asarray(O, dtype=complex)
    k = site - 1
    if O.shape[1] != s.dims[k]:
        raise ShapeError("operator does not match the local dimension")
    ts = list(s.tensors)
    ts[k] = np.einsum("xp,apb->axb", O, ts[k])
    center = s.canonical_center if s.canonical_center == site else None
    return s.with_tensors(ts, center)


def operator_schmidt(G: np.ndarray, d1: int, d2: int, threshold: float = 1e-12) -> list:
    """Split a two-site operator as ``sum_k E_k (x) F_k`` via SVD of its reshuffle."""
    G = np.asarray(G, dtype=complex).reshape(d1, d2, d1, d2)
    M = G.transpose(0, 2, 1, 3).reshape(d1 * d1, d2 * d2)
    u, sv, vh = np.linalg.svd(M, full_matrices=False)
    scale_ = max(sv[0], np.finfo(float).tiny) if sv.size else 1.0
    out = []
    for k in range(len(sv)):
        if sv[k] <= threshold * scale_:
            break
        root = np.sqrt(sv[k])
        out.append((root * u[:, k].reshape(d1, d1), root * vh[k].reshape(d2, d2)))
    return out


# ------------------------------------------------------------ combinations


def linear_combination(
    states: Sequence[MpsState], coeffs: Sequence[complex], numerics: Numerics = DEFAULT, compress_result: bool = True
) -> MpsState:
    """``sum_a c_a |s_a>`` via the direct-sum construction."""
    if not states:
        raise ValueError("linear_combination needs at least one state")
    if len(states) != len(coeffs):
        raise ShapeError("states and coefficients differ in length")
    dims = states[0].dims
    for st in states:
        if st.dims != dims:
            raise ShapeError("inconsistent physical dimensions")
    n = len(dims)
    if n == 1:
        t = sum(c * st.tensors[0] for st, c in zip(states, coeffs))
        return MpsState((t,), canonical_center=1)
    ts = []
    for k in range(n):
        blocks = [st.tensors[k] for st in states]
        if k == 0:
            t = np.concatenate([c * b for b, c in zip(blocks, coeffs)], axis=2)
        elif k == n - 1:
            t = np.concatenate(blocks, axis=0)
        else:
            L = sum(b.shape[0] for b in blocks)
            R = sum(b.shape[2] for b in blocks)
            t = np.zeros((L, dims[k], R), dtype=complex)
            i = j = 0
            for b in blocks:
                t[i : i + b.shape[0], :, j : j + b.shape[2]] = b
                i += b.shape[0]
                j += b.shape[2]
        ts.append(t)
    out = MpsState(tuple(ts))
    return compress(out, numerics) if compress_result else out


def append_site(s: MpsState, local: np.ndarray) -> MpsState:
    """Concatenate ``s`` with one extra site in the product state ``local``."""
    v = np.asarray(local, dtype=complex).reshape(1, -1, 1)
    # a unit-norm trailing site is a right isometry, so the centre survives
    center = s.canonical_center if np.isclose(np.linalg.norm(v), 1.0) else None
    return s.with_tensors(list(s.tensors) + [v], center)


def product_state(indices: Sequence[int], d: int) -> MpsState:
    ts = []
    for idx in indices:
        t = np.zeros((1, d, 1), dtype=complex)
        t[0, idx, 0] = 1.0
        ts.append(t)
    return MpsState(tuple(ts), canonical_center=1)


def random_mps(n: int, d: int, bond: int, rng: np.random.Generator, normalized: bool = True) -> MpsState:
    """Random complex MPS with bonds capped at ``bond`` (and by the chain geometry)."""
    dims = [1]
    for k in range(1, n):
        dims.append(min(bond, d**k, d ** (n - k)))
    dims.append(1)
    ts = []
    for k in range(n):
        shape = (dims[k], d, dims[k + 1])
        ts.append(rng.standard_normal(shape) + 1j * rng.standard_normal(shape))
    s = compress(MpsState(tuple(ts)))
    return normalize(s) if normalized else s


# --------------------------------------------------------------- json io


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def to_json(s: MpsState) -> str:
    """Serialize with 17 significant digits (bit-exact for IEEE doubles)."""
    parts = []
    for t in s.tensors:
        flat = np.ascontiguousarray(t).reshape(-1)
        data = np.empty(2 * flat.size)
        data[0::2] = flat.real
        data[1::2] = flat.imag
        shape = ",".join(str(x) for x in t.shape)
        parts.append('{"shape":[' + shape + '],"data":[' + ",".join(_fmt(x) for x in data) + "]}")
    return '{"n":%d,"d":%d,"tensors":[%s]}' % (s.n, s.d, ",".join(parts))


def from_json(text: str) -> MpsState:
    doc = json.loads(text)
    ts = []
    for entry in doc["tensors"]:
        data = np.asarray(entry["data"], dtype=float)
        arr = (data[0::2] + 1j * data[1::2]).reshape(entry["shape"])
        ts.append(arr)
    s = MpsState(tuple(ts))
    if s.n != doc["n"]:
        raise ShapeError("site count does not match tensor list")
    return s
