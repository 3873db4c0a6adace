"""Left states, boundary contractions, gluing and the net over contractions."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from . import linalg
from .errors import DenseCapError, NetTooLargeError, NotNormalizedError, ShapeError
from .mps import MpsState, _split, inner, to_dense
from .numerics import DEFAULT, Numerics


@dataclass(frozen=True)
class LeftState:
    """``ls(v)`` as a ``cut+1``-site MPS whose last site is the bond space."""

    cut: int
    bond_dim: int
    state: MpsState


@dataclass(frozen=True)
class BoundaryContraction:
    cut: int
    B: int
    d: int
    matrix: np.ndarray  # indexed (site, bond) x (site, bond)

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (self.d * self.B, self.d * self.B):
            raise ShapeError(f"contraction shape {m.shape} != {(self.d * self.B,) * 2}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)


def left_state(s: MpsState, cut: int, numerics: Numerics = DEFAULT) -> LeftState:
    """``sum_j lambda_j |a_j>|j>`` built from the Schmidt decomposition at ``cut``."""
    left, lam, _ = _split(s, cut, numerics)
    B = len(lam)
    bond = np.zeros((B, B, 1), dtype=complex)
    bond[np.arange(B), np.arange(B), 0] = lam
    return LeftState(cut, B, MpsState(tuple(left) + (bond,)))


def _reduced_last_site(tensors) -> np.ndarray:
    """Density on (last physical, right bond) after tracing all earlier sites."""
    env = np.ones((1, 1), dtype=complex)
    for t in tensors[:-1]:
        e = np.tensordot(env, t.conj(), axes=(0, 0))
        env = np.tensordot(e, t, axes=([0, 1], [0, 1]))
    last = tensors[-1]  # (l, p, B)
    # rho[(p, j), (q, k)] = sum_ab env[a, b] conj(last[a, q, k]) last[b, p, j]
    rho = np.einsum("ab,aqk,bpj->pjqk", env, last.conj(), last)
    p, B = last.shape[1], last.shape[2]
    return rho.reshape(p * B, p * B)


def contraction(s: MpsState, cut: int, numerics: Numerics = DEFAULT) -> BoundaryContraction:
    """Reduced density matrix of ``ls(v)`` on site ``cut`` and the bond."""
    nrm2 = inner(s, s).real
    if abs(nrm2 - 1.0) > numerics.normalized_tol:
        raise NotNormalizedError(f"state has squared norm {nrm2:.3e}")
    left, lam, _ = _split(s, cut, numerics)
    lt = list(left)
    lt[-1] = lt[-1] * lam
    rho = _reduced_last_site(lt)
    return BoundaryContraction(cut, len(lam), s.dims[cut - 1], linalg.hermitize(rho))


def right_isometry(v: MpsState, cut: int, numerics: Numerics = DEFAULT) -> tuple:
    """Dense ``U_v`` (columns ``|b_j>``) and the Schmidt coefficients at ``cut``."""
    _, lam, right = _split(v, cut, numerics)
    psi = right[0].reshape(right[0].shape[0], -1)
    for t in right[1:]:
        l, p, r = t.shape
        psi = (psi.reshape(-1, l) @ t.reshape(l, p * r)).reshape(psi.shape[0], -1)
    return psi.T.copy(), lam


def glue(sigma: np.ndarray, v: MpsState, cut: int, numerics: Numerics = DEFAULT) -> np.ndarray:
    """``sigma' = U_v sigma U_v^*`` on the full chain (dense, short chains only)."""
    if v.n > numerics.dense_cap(v.d):
        raise DenseCapError("glue is only available within the dense cap")
    U, lam = right_isometry(v, cut, numerics)
    B = len(lam)
    dl = int(np.prod(v.dims[:cut]))
    if sigma.shape != (dl * B, dl * B):
        raise ShapeError(f"sigma has shape {sigma.shape}, expected bond dimension {B}")
    W = np.kron(np.eye(dl), U)
    return W @ sigma @ W.conj().T


def trace_distance(X: np.ndarray, Y: np.ndarray) -> float:
    """Trace norm of ``X - Y`` (no factor 1/2)."""
    X, Y = np.asarray(X), np.asarray(Y)
    if X.shape != Y.shape:
        raise ShapeError(f"shapes differ: {X.shape} vs {Y.shape}")
    w = np.linalg.eigvalsh(linalg.hermitize(X - Y))
    return float(np.abs(w).sum())


# ---------------------------------------------------------------------- net

FULL_GRID = "full"
RANDOM_SAMPLE = "random"


@dataclass(frozen=True)
class NetSpec:
    """Grid over Hermitian ``(Bd) x (Bd)`` matrices.

    Each real parameter (diagonal entries, real and imaginary parts of the upper
    triangle) ranges over ``{-1, -1+step, ..., 1}`` with ``step = eta/(Bd)^2``;
    elements with trace norm above ``1 + eta`` are dropped. ``distribution``
    picks what RandomSample rounds onto the grid: ``density`` draws random
    density matrices, ``hermitian`` draws from the trace-norm unit ball.
    """

    B: int
    d: int
    eta: float
    mode: str = RANDOM_SAMPLE
    count: int = 200
    seed: int = 0
    distribution: str = "density"
    cap: int = 10**6

    def __post_init__(self):
        if self.eta <= 0:
            raise ValueError("eta must be positive")
        if self.mode not in (FULL_GRID, RANDOM_SAMPLE):
            raise ValueError(f"unknown net mode {self.mode!r}")
        if self.distribution not in ("density", "hermitian"):
            raise ValueError(f"unknown distribution {self.distribution!r}")

    @property
    def dim(self) -> int:
        return self.B * self.d

    @property
    def n_params(self) -> int:
        return self.dim**2

    @property
    def step(self) -> float:
        return self.eta / self.dim**2


def grid_values(spec: NetSpec) -> np.ndarray:
    step = spec.step
    k = int(math.floor(2.0 / step + 1e-9))
    vals = -1.0 + step * np.arange(k + 1)
    vals = vals[vals < 1.0 - 1e-12]
    return np.append(vals, 1.0)


def grid_size(spec: NetSpec) -> int:
    """Number of grid points before the trace-norm filter."""
    return len(grid_values(spec)) ** spec.n_params


def cardinality_bound(B: int, d: int, eta: float) -> int:
    """``(2 ceil(Bd/eta) + 1)^(2Bd)``."""
    return (2 * math.ceil(B * d / eta) + 1) ** (2 * B * d)


def params_to_matrix(params: np.ndarray, dim: int) -> np.ndarray:
    params = np.asarray(params, dtype=float)
    m = np.diag(params[:dim]).astype(complex)
    iu = np.triu_indices(dim, 1)
    npair = len(iu[0])
    re = params[dim : dim + npair]
    im = params[dim + npair :]
    m[iu] = re + 1j * im
    m[(iu[1], iu[0])] = re - 1j * im
    return m


def matrix_to_params(m: np.ndarray) -> np.ndarray:
    dim = m.shape[0]
    iu = np.triu_indices(dim, 1)
    return np.concatenate([np.real(np.diag(m)), np.real(m[iu]), np.imag(m[iu])])


def nearest_grid_element(Y: np.ndarray, spec: NetSpec) -> np.ndarray:
    """Round every real parameter of ``Y`` to the closest grid value."""
    vals = grid_values(spec)
    p = np.clip(matrix_to_params(linalg.hermitize(Y)), -1.0, 1.0)
    idx = np.clip(np.searchsorted(vals, p), 1, len(vals) - 1)
    lo, hi = vals[idx - 1], vals[idx]
    rounded = np.where(np.abs(p - lo) <= np.abs(hi - p), lo, hi)
    return params_to_matrix(rounded, spec.dim)


def _in_net(m: np.ndarray, spec: NetSpec) -> bool:
    return float(np.abs(np.linalg.eigvalsh(m)).sum()) <= 1.0 + spec.eta + 1e-12


def _draw_target(spec: NetSpec, rng: np.random.Generator) -> np.ndarray:
    dim = spec.dim
    if spec.distribution == "density":
        return linalg.random_density_matrix(dim, rng, rank=int(rng.integers(1, dim + 1)))
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    h = linalg.hermitize(g)
    radius = rng.random() ** (1.0 / spec.n_params)
    return h * (radius / np.abs(np.linalg.eigvalsh(h)).sum())


def build_net(spec: NetSpec) -> Iterator[np.ndarray]:
    """Yield net elements (Hermitian matrices on site (x) bond), lazily."""
    if spec.mode == FULL_GRID:
        predicted = grid_size(spec)
        if predicted > spec.cap:
            raise NetTooLargeError(predicted, spec.cap)
        vals = grid_values(spec)
        for params in itertools.product(vals, repeat=spec.n_params):
            m = params_to_matrix(np.array(params), spec.dim)
            if _in_net(m, spec):
                yield m
        return
    rng = np.random.default_rng(spec.seed)
    emitted = 0
    while emitted < spec.count:
        m = nearest_grid_element(_draw_target(spec, rng), spec)
        if _in_net(m, spec):
            emitted += 1
            yield m
