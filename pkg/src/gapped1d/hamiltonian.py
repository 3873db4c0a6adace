"""Nearest-neighbour chain Hamiltonians.

Models are assembled from identical two-site terms: a single-site field is
split evenly between the two bonds touching a site, so the end sites carry half
the bulk field. With identical terms, per-term normalization is one global
affine map and leaves the ground state untouched.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import ConfigError, NotHermitianError, ShapeError
from .numerics import DEFAULT, Numerics

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
ID2 = np.eye(2, dtype=complex)

MODELS = ("tfim", "xxz", "explicit")


@dataclass(frozen=True)
class GapInfo:
    epsilon0: float
    epsilon1: float

    @property
    def epsilon(self) -> float:
        return self.epsilon1 - self.epsilon0


@dataclass(frozen=True)
class ModelSpec:
    """``model`` is one of ``tfim`` (params ``g``), ``xxz`` (``delta``, ``h``) or
    ``explicit`` (``terms``: nested ``[re, im]`` pairs or plain reals)."""

    model: str
    n: int
    d: int = 2
    params: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"model": self.model, "n": self.n, "d": self.d, "params": dict(self.params)}

    @classmethod
    def from_dict(cls, doc: dict) -> "ModelSpec":
        try:
            return cls(str(doc["model"]), int(doc["n"]), int(doc.get("d", 2)), dict(doc.get("params", {})))
        except KeyError as exc:
            raise ConfigError(f"model.{exc.args[0]}", "missing") from None


@dataclass(frozen=True)
class LocalHamiltonian:
    n: int
    d: int
    terms: tuple
    normalized: bool = False
    gap_info: GapInfo | None = None
    # per-term (lambda_min, spread) so energies map back to model units
    affine: tuple | None = None

    def __post_init__(self):
        if self.n < 2:
            raise ShapeError("a chain needs at least two sites")
        ts = tuple(np.asarray(t, dtype=complex) for t in self.terms)
        if len(ts) != self.n - 1:
            raise ShapeError(f"expected {self.n - 1} terms, got {len(ts)}")
        for t in ts:
            if t.shape != (self.d**2, self.d**2):
                raise ShapeError(f"term shape {t.shape} != {(self.d**2, self.d**2)}")
            t.setflags(write=False)
        object.__setattr__(self, "terms", ts)

    def local_terms(self, start: int = 1, stop: int | None = None) -> list:
        """``(site, H_site)`` for sites ``start..stop`` inclusive (1-based)."""
        stop = self.n - 1 if stop is None else stop
        return [(i, self.terms[i - 1]) for i in range(start, stop + 1)]

    def to_model_units(self, energy: float) -> float:
        """Undo normalization; only defined when every term had the same spread."""
        if self.affine is None:
            return energy
        spreads = {round(s, 12) for _, s in self.affine}
        if len(spreads) != 1:
            raise ValueError("terms were rescaled differently; no single affine map exists")
        spread = self.affine[0][1] or 1.0
        return energy * spread + sum(lo for lo, _ in self.affine)


def _tfim_term(g: float) -> np.ndarray:
    return -np.kron(PAULI_Z, PAULI_Z) - 0.5 * g * (np.kron(PAULI_X, ID2) + np.kron(ID2, PAULI_X))


def _xxz_term(delta: float, h: float) -> np.ndarray:
    return (
        np.kron(PAULI_X, PAULI_X)
        + np.kron(PAULI_Y, PAULI_Y)
        + delta * np.kron(PAULI_Z, PAULI_Z)
        - 0.5 * h * (np.kron(PAULI_Z, ID2) + np.kron(ID2, PAULI_Z))
    )


def _parse_matrix(obj, dim: int) -> np.ndarray:
    arr = np.asarray(obj)
    if arr.ndim == 3 and arr.shape[-1] == 2:
        arr = arr[..., 0] + 1j * arr[..., 1]
    arr = np.asarray(arr, dtype=complex)
    if arr.shape != (dim, dim):
        raise ShapeError(f"explicit term has shape {arr.shape}, expected {(dim, dim)}")
    return arr


def build(spec: ModelSpec) -> LocalHamiltonian:
    """Assemble the un-normalized terms of a model."""
    if spec.model == "tfim":
        if spec.d != 2:
            raise ShapeError("tfim is defined for d=2")
        term = _tfim_term(float(spec.params.get("g", 1.0)))
        terms = [term] * (spec.n - 1)
    elif spec.model == "xxz":
        if spec.d != 2:
            raise ShapeError("xxz is defined for d=2")
        term = _xxz_term(float(spec.params.get("delta", 1.0)), float(spec.params.get("h", 0.0)))
        terms = [term] * (spec.n - 1)
    elif spec.model == "explicit":
        raw = spec.params.get("terms")
        if raw is None:
            raise ConfigError("model.params.terms", "explicit model needs terms")
        terms = [_parse_matrix(t, spec.d**2) for t in raw]
    else:
        raise ConfigError("model.model", f"unknown model {spec.model!r}; choose from {MODELS}")
    return LocalHamiltonian(spec.n, spec.d, tuple(terms))


def _check_hermitian(t: np.ndarray, tol: float) -> None:
    if np.max(np.abs(t - t.conj().T), initial=0.0) > tol:
        raise NotHermitianError("Hamiltonian term is not Hermitian")


def normalize(H: LocalHamiltonian, with_gap: bool = True, numerics: Numerics = DEFAULT) -> LocalHamiltonian:
    """Rescale every term to ``0 <= H_i <= Id`` using its own extreme eigenvalues.

    A term with zero spread becomes the zero matrix. Gap data is refreshed from
    exact diagonalization when the chain is within the dense cap.
    """
    new_terms, affine = [], []
    for t in H.terms:
        _check_hermitian(t, numerics.hermitian_tol * max(1.0, np.abs(t).max(initial=0.0)))
        t = 0.5 * (t + t.conj().T)
        w = np.linalg.eigvalsh(t)
        lo, hi = float(w[0]), float(w[-1])
        spread = hi - lo
        if spread <= numerics.hermitian_tol * max(1.0, abs(hi)):
            new_terms.append(np.zeros_like(t))
            affine.append((lo, 0.0))
            continue
        new_terms.append((t - lo * np.eye(t.shape[0])) / spread)
        affine.append((lo, spread))
    if H.affine is not None:
        # compose with the previous map so model units stay reachable
        affine = [_compose(p, q) for p, q in zip(H.affine, affine)]
    out = LocalHamiltonian(H.n, H.d, tuple(new_terms), True, None, tuple(affine))
    if with_gap and H.n <= numerics.dense_cap(H.d):
        from .exact import solve

        sol = solve(out, numerics)
        out = replace(out, gap_info=GapInfo(sol.epsilon0, sol.epsilon1))
    return out


def _compose(prev, cur):
    # x_model = prev_lo + prev_s * x_mid, x_mid = cur_lo + cur_s * x_new
    plo, ps = prev
    clo, cs = cur
    return (plo + ps * clo, ps * cs)


def projection_term(H: LocalHamiltonian, i: int) -> np.ndarray:
    """``P_i = Id - H_i`` for a normalized chain; ``i == n`` gives the identity."""
    if not H.normalized:
        raise ValueError("projection terms need a normalized Hamiltonian")
    if i == H.n:
        return np.eye(H.d**2, dtype=complex)
    if not 1 <= i <= H.n - 1:
        raise ShapeError(f"term index {i} out of range")
    return np.eye(H.d**2, dtype=complex) - H.terms[i - 1]


def load_model_spec(path) -> ModelSpec:
    return ModelSpec.from_dict(json.loads(Path(path).read_text()))
