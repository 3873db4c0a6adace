"""Randomized checks of the structural lemmas the algorithm relies on.

Each ``check_*`` draws one instance from ``rng`` and returns a :class:`Check`
with both sides of the inequality (or equality) and whether it holds at the
given tolerance. Used by ``verify`` on the command line and by the tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import boundary, exact, hamiltonian, linalg, mps
from .numerics import DEFAULT, Numerics


@dataclass(frozen=True)
class Check:
    name: str
    lhs: float
    rhs: float
    holds: bool

    @property
    def slack(self) -> float:
        return self.rhs - self.lhs


def _le(name: str, lhs: float, rhs: float, tol: float) -> Check:
    return Check(name, float(lhs), float(rhs), lhs <= rhs + tol)


def random_hamiltonian(n: int, d: int, rng: np.random.Generator) -> hamiltonian.LocalHamiltonian:
    """Normalized chain with independent random Hermitian two-site terms."""
    terms = []
    for _ in range(n - 1):
        g = rng.standard_normal((d * d, d * d)) + 1j * rng.standard_normal((d * d, d * d))
        terms.append(g + g.conj().T)
    return hamiltonian.normalize(hamiltonian.LocalHamiltonian(n, d, tuple(terms)), with_gap=False)


def _dense_state(n: int, d: int, rng: np.random.Generator) -> np.ndarray:
    return linalg.random_unit_vector(d**n, rng)


def _trim_dense(v: np.ndarray, cut: int, n: int, d: int, D: int) -> np.ndarray:
    u, s, vh = np.linalg.svd(v.reshape(d**cut, d ** (n - cut)), full_matrices=False)
    k = min(D, len(s))
    return ((u[:, :k] * s[:k]) @ vh[:k]).reshape(-1)


# ------------------------------------------------------------------ lemmas


def check_energy_overlap(rng: np.random.Generator, n: int = 5, d: int = 2, tol: float = 1e-9) -> Check:
    """Energy at most ``eps0 + delta`` (``delta <= eps``) forces overlap ``>= 1 - delta/eps``."""
    H = random_hamiltonian(n, d, rng)
    sol = exact.solve(H)
    eps = sol.gap
    while True:
        perp = _dense_state(n, d, rng)
        perp -= np.vdot(sol.ground_vector, perp) * sol.ground_vector
        perp /= np.linalg.norm(perp)
        lam = rng.uniform(0.0, 1.0)
        v = lam * sol.ground_vector + math.sqrt(1 - lam * lam) * perp
        delta = exact.energy(H, v) - sol.epsilon0
        if delta <= eps:
            break
    overlap = abs(np.vdot(v, sol.ground_vector))
    # stated as overlap >= 1 - delta/eps
    return _le("energy_overlap", 1 - delta / eps, overlap, tol)


def check_overlap_triangle(rng: np.random.Generator, dim: int = 32, tol: float = 1e-9) -> Check:
    w = linalg.random_unit_vector(dim, rng)

    def near():
        x = w + rng.uniform(0.0, 1.5) * linalg.random_unit_vector(dim, rng)
        return x / np.linalg.norm(x)

    v, vp = near(), near()
    delta = 1 - abs(np.vdot(v, w))
    deltap = 1 - abs(np.vdot(vp, w))
    return _le("overlap_triangle", 1 - 2 * (delta + deltap), abs(np.vdot(v, vp)), tol)


def check_eckart_young(
    rng: np.random.Generator, n: int = 6, d: int = 2, competitors: int = 100, tol: float = 1e-9
) -> Check:
    """Normalized ``trim_D(v)`` beats every unit vector of Schmidt rank ``<= D``."""
    cut = int(rng.integers(1, n))
    D = int(rng.integers(1, min(d**cut, d ** (n - cut)) + 1))
    s = mps.random_mps(n, d, 8, rng)
    t = mps.normalize(mps.trim(s, cut, D))
    best = abs(mps.inner(t, s))
    worst_gap = -np.inf
    v = mps.to_dense(s)
    for _ in range(competitors):
        a = rng.standard_normal((d**cut, D)) + 1j * rng.standard_normal((d**cut, D))
        b = rng.standard_normal((D, d ** (n - cut))) + 1j * rng.standard_normal((D, d ** (n - cut)))
        w = (a @ b).reshape(-1)
        w /= np.linalg.norm(w)
        worst_gap = max(worst_gap, abs(np.vdot(w, v)) - best)
    return _le("eckart_young", best + worst_gap, best, tol)


def check_trim1(rng: np.random.Generator, epsilon: float, n: int = 6, d: int = 3, tol: float = 1e-9) -> Check:
    """``|<trim_{ceil(D/eps)}(u)|v>| >= |<u|v>| - eps`` when ``v`` has Schmidt rank ``D``.

    Qutrits at the middle cut leave room for ``ceil(D/eps)`` to stay below the
    full rank, so the trim actually removes something.
    """
    cut = n // 2
    dl, dr = d**cut, d ** (n - cut)
    full = min(dl, dr)
    D = int(rng.integers(1, max(1, int(epsilon * (full - 1))) + 1))
    v = (rng.standard_normal((dl, D)) @ rng.standard_normal((D, dr))).reshape(-1).astype(complex)
    v /= np.linalg.norm(v)
    # bias u towards v so the overlap is not trivially small
    u = v + rng.uniform(0.0, 2.0) * _dense_state(n, d, rng)
    u /= np.linalg.norm(u)
    t = _trim_dense(u, cut, n, d, math.ceil(D / epsilon))
    return _le(f"trim1_eps{epsilon}", abs(np.vdot(u, v)) - epsilon, abs(np.vdot(t, v)), tol)


def check_trim2(rng: np.random.Generator, n: int = 6, d: int = 2) -> Check:
    """Trimming one cut never raises the Schmidt rank of another (exact integers)."""
    s = mps.random_mps(n, d, int(rng.integers(1, 9)), rng)
    cut = int(rng.integers(1, n))
    D = int(rng.integers(1, 5))
    before = mps.schmidt_ranks(s)
    after = mps.schmidt_ranks(mps.trim(s, cut, D))
    excess = max(a - b for a, b in zip(after, before))
    return Check("trim2_rank", float(excess), 0.0, excess <= 0)


def _random_sigma(dim: int, rng: np.random.Generator) -> np.ndarray:
    return linalg.random_density_matrix(dim, rng, rank=int(rng.integers(1, dim + 1)))


def gluing_clauses(rng: np.random.Generator, n: int = 5, d: int = 2, numerics: Numerics = DEFAULT) -> list:
    """All three gluing clauses for one random ``(sigma, v)`` pair."""
    H = random_hamiltonian(n, d, rng)
    v = mps.random_mps(n, d, 4, rng)
    cut = int(rng.integers(2, n))
    U, lam = boundary.right_isometry(v, cut, numerics)
    B = len(lam)
    dl = d**cut
    sigma = _random_sigma(dl * B, rng)
    sp = boundary.glue(sigma, v, cut, numerics)
    c1 = np.abs(linalg.partial_trace(sp, [dl, d ** (n - cut)], [0]) - linalg.partial_trace(sigma, [dl, B], [0])).max()

    red_sigma = linalg.partial_trace(sigma, [d ** (cut - 1), d, B], [1, 2])
    cont = boundary.contraction(v, cut, numerics).matrix
    rhs_dist = boundary.trace_distance(red_sigma, cont)
    vd = mps.to_dense(v)
    vv = np.outer(vd, vd.conj())
    rest = [d ** (cut - 1), d ** (n - cut + 1)]
    lhs_dist = boundary.trace_distance(linalg.partial_trace(sp, rest, [1]), linalg.partial_trace(vv, rest, [1]))

    Hd = exact.dense_matrix(H)
    HL = exact.dense_matrix(H, stop=cut - 1) if cut > 1 else np.zeros_like(Hd)
    HL_left = linalg.partial_trace(HL, [dl, d ** (n - cut)], [0]) / d ** (n - cut)
    HiR = Hd - HL
    lhs3 = float(np.real(np.trace(sp @ Hd)))
    rhs3 = float(np.real(np.trace(sigma @ np.kron(HL_left, np.eye(B))) + np.vdot(vd, HiR @ vd))) + n * rhs_dist
    return [
        Check("gluing_clause1", float(c1), 0.0, c1 <= 1e-10),
        Check("gluing_clause2", abs(lhs_dist - rhs_dist), 0.0, abs(lhs_dist - rhs_dist) <= 1e-9),
        _le("gluing_clause3", lhs3, rhs3, 1e-9),
    ]


def check_post_trim_energy(rng: np.random.Generator, n: int = 6, d: int = 2, tol: float = 1e-9) -> Check:
    """Trimming a low-energy ``w`` to the empirical ``B_delta`` costs at most ``6 sqrt(delta)``."""
    H = random_hamiltonian(n, d, rng)
    sol = exact.solve(H)
    eps = sol.gap
    delta_max = 0.5 / (1 + 1 / eps)
    delta = rng.uniform(0.05, 1.0) * delta_max
    cut = int(rng.integers(1, n))
    while True:
        perp = _dense_state(n, d, rng)
        perp -= np.vdot(sol.ground_vector, perp) * sol.ground_vector
        perp /= np.linalg.norm(perp)
        t = rng.uniform(0.0, 0.5)
        w = math.cos(t) * sol.ground_vector + math.sin(t) * perp
        if exact.energy(H, w) <= sol.epsilon0 + delta:
            break
    B = exact.minimal_trim_rank(sol.ground_vector, cut, n, d, delta)
    v = _trim_dense(w, cut, n, d, B)
    v /= np.linalg.norm(v)
    return _le("post_trim_energy", exact.energy(H, v), sol.epsilon0 + 6 * math.sqrt(delta), tol)


def run_suite(rng: np.random.Generator, instances: int = 100) -> dict:
    """Every lemma over ``instances`` random draws: ``{name: (passed, total, worst slack)}``."""
    results: dict = {}

    def add(c: Check):
        p, t, w = results.get(c.name, (0, 0, np.inf))
        results[c.name] = (p + int(c.holds), t + 1, min(w, c.slack))

    for _ in range(instances):
        add(check_energy_overlap(rng))
        add(check_overlap_triangle(rng))
        add(check_eckart_young(rng))
        for e in (0.1, 0.25, 0.5):
            add(check_trim1(rng, e))
        add(check_trim2(rng))
        for c in gluing_clauses(rng):
            add(c)
        add(check_post_trim_energy(rng))
    return results
