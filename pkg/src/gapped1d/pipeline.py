"""The viable-set iteration: extend, reduce cardinality, trim bonds, reduce error.

Every iteration ``i = 1..n`` turns a set of vectors on sites ``1..i-1`` into a
set on sites ``1..i`` whose span should still contain the left Schmidt vectors
of a good approximation to the ground state. The last set is searched for the
lowest-energy state.
"""

from __future__ import annotations

import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import agsp, boundary, config, exact, hamiltonian, linalg, mps, sdp
from .errors import DegenerateSpanError, IterationAborted, TermOverflowError
from .numerics import DEFAULT, Numerics

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ViableSet:
    i: int
    vectors: tuple
    s_cap: int
    b_cap: int
    delta_label: float | None = None

    @property
    def size(self) -> int:
        return len(self.vectors)

    @property
    def max_bond(self) -> int:
        return max((v.max_bond for v in self.vectors), default=1)


def trivial_set(s_cap: int, b_cap: int) -> ViableSet:
    """The set ``{1}`` at index 0 (no sites yet)."""
    return ViableSet(0, (), s_cap, b_cap, 0.0)


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("GAPPED1D_THREADS", "1")))
    except ValueError:
        return 1


def _pmap(fn, items) -> list:
    """Order-preserving map, threaded when ``GAPPED1D_THREADS`` > 1."""
    k = _threads()
    if k == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=k) as ex:
        return list(ex.map(fn, items))


# --------------------------------------------------------------- the steps


def extend(S: ViableSet, d: int) -> ViableSet:
    """``{|s>|j>}`` for every ``s`` and computational basis state ``j``."""
    basis = np.eye(d, dtype=complex)
    if S.i == 0:
        vecs = tuple(mps.product_state([j], d) for j in range(d))
    else:
        vecs = tuple(mps.append_site(v, basis[j]) for v in S.vectors for j in range(d))
    return ViableSet(S.i + 1, vecs, S.s_cap, S.b_cap, S.delta_label)


def _select_components(solutions, basis: sdp.SpanBasis, B: int, s_cap: int, tol: float = 1e-6) -> list:
    """Leading-eigenvector components in f-coefficients, lowest objective first, span-deduplicated."""
    Q = np.zeros((basis.rank, 0), dtype=complex)
    chosen = []
    for sol in solutions:
        w, v = np.linalg.eigh(0.5 * (sol.sigma + sol.sigma.conj().T))
        u = v[:, -1].reshape(basis.rank, B)
        comps = [u[:, j] for j in range(B) if np.linalg.norm(u[:, j]) >= 1e-10]
        comps.sort(key=lambda c: -np.linalg.norm(c))
        for c in comps:
            c = c / np.linalg.norm(c)
            r = c - Q @ (Q.conj().T @ c)
            if np.linalg.norm(r) <= tol:
                continue
            Q = np.concatenate([Q, (r / np.linalg.norm(r))[:, None]], axis=1)
            chosen.append(c)
            if len(chosen) >= s_cap:
                return chosen
    return chosen


def cardinality_reduce(
    S1: ViableSet,
    H: hamiltonian.LocalHamiltonian,
    net_spec: boundary.NetSpec,
    radius: float,
    solver_cfg: sdp.SolverConfig,
    accept_residual: float = 1e-3,
    numerics: Numerics = DEFAULT,
    skip_small: bool = False,
):
    """Solve the size-trimming program for every net element and keep the best components.

    With ``skip_small`` a span of rank at most ``s_cap`` is passed on as its
    orthonormal basis: every program output lies in that span anyway.
    Returns ``(ViableSet, stats)``.
    """
    i = S1.i
    try:
        basis = sdp.orthonormalize(list(S1.vectors), numerics=numerics)
    except DegenerateSpanError as exc:
        raise IterationAborted(i, "cardinality_reduce", str(exc)) from None
    B = net_spec.B
    if skip_small and basis.rank <= S1.s_cap:
        vecs = tuple(mps.normalize(basis.vector(k, numerics)) for k in range(basis.rank))
        stats = {"skipped": True, "span_rank": basis.rank, "B": B}
        return ViableSet(i, vecs, S1.s_cap, S1.b_cap, S1.delta_label), stats
    ops = sdp.span_operators(basis, H, i)
    net = list(boundary.build_net(net_spec))

    def one(X):
        return sdp.solve(sdp.problem_from(ops, B, X, radius), solver_cfg)

    sols = _pmap(one, net)
    counts = {sdp.CONVERGED: 0, sdp.MAX_ITER: 0, sdp.INFEASIBLE: 0}
    for s in sols:
        counts[s.status] += 1
    usable = [
        (s.objective_value, k, s)
        for k, s in enumerate(sols)
        if s.status != sdp.INFEASIBLE and s.feasibility_residual <= accept_residual
    ]
    if not usable:
        raise IterationAborted(
            i, "cardinality_reduce", f"no feasible net element among {len(net)} (net too coarse or span degraded)"
        )
    usable.sort(key=lambda t: (t[0], t[1]))
    comps = _select_components([s for _, _, s in usable], basis, B, S1.s_cap)
    vecs = tuple(mps.normalize(basis.combine(c, numerics, over_basis=True)) for c in comps)
    stats = {
        "skipped": False,
        "net_tried": len(net),
        "net_converged": counts[sdp.CONVERGED],
        "net_maxiter": counts[sdp.MAX_ITER],
        "net_infeasible": counts[sdp.INFEASIBLE],
        "net_used": len(usable),
        "best_objective": float(usable[0][0]),
        "span_rank": basis.rank,
        "B": B,
    }
    return ViableSet(i, vecs, S1.s_cap, S1.b_cap, S1.delta_label), stats


def bond_trim_step(S2: ViableSet, b_cap: int, numerics: Numerics = DEFAULT) -> ViableSet:
    """``trim_all`` with ``D = b_cap`` on every vector, then renormalize."""
    out = []
    for v in S2.vectors:
        t = mps.trim_all(v, b_cap, numerics)
        nrm = mps.norm(t)
        if nrm < numerics.zero_norm:
            log.info("vector annihilated by trimming at i=%d", S2.i)
            continue
        out.append(mps.scale(t, 1.0 / nrm))
    return ViableSet(S2.i, tuple(out), S2.s_cap, S2.b_cap, S2.delta_label)


def _dedupe(pairs, policy: str, limit: int, numerics: Numerics) -> list:
    """``pairs`` are ``(norm, unit state)`` sorted by decreasing norm."""
    kept = []
    if policy == "parallel":
        for nrm, v in pairs:
            if all(abs(mps.inner(u, v)) <= 1 - 1e-10 for _, u in kept):
                kept.append((nrm, v))
            if len(kept) >= limit:
                break
        return kept
    # span: keep a vector only if it adds a direction
    G = np.zeros((0, 0), dtype=complex)
    for nrm, v in pairs:
        if not kept:
            kept.append((nrm, v))
            G = np.ones((1, 1), dtype=complex)
            continue
        b = np.array([mps.inner(u, v) for _, u in kept])
        coef = np.linalg.solve(G, b)
        resid2 = 1.0 - float(np.real(np.vdot(b, coef)))
        if resid2 > 1e-12:
            kept.append((nrm, v))
            G = np.block([[G, b[:, None]], [b.conj()[None, :], np.ones((1, 1))]])
        if len(kept) >= limit:
            break
    return kept


def error_reduce(
    S3: ViableSet,
    H: hamiltonian.LocalHamiltonian,
    ag: agsp.AgspConfig,
    rng: np.random.Generator,
    limit: int,
    dedupe: str = "parallel",
    numerics: Numerics = DEFAULT,
):
    """Apply the left parts of a freshly sampled AGSP to every vector.

    Returns ``(ViableSet, terms, stats)``.
    """
    i = S3.i
    terms = agsp.sample_terms(H, ag, rng)
    try:
        decomp = agsp.decompose_across_cut(terms, H, i, keep_right=False, max_pairs=ag.max_pairs, numerics=numerics)
    except TermOverflowError as exc:
        raise IterationAborted(i, "error_reduce", str(exc)) from None
    ops = decomp.unique_left_ops()
    outs = _pmap(lambda op: agsp.apply_left_parts(replace(decomp, left_ops=[op]), list(S3.vectors), numerics), ops)
    pairs = [(nrm, mps.scale(w, 1.0 / nrm)) for chunk in outs for nrm, w in chunk]
    if not pairs:
        raise IterationAborted(i, "error_reduce", "every output was annihilated")
    order = sorted(range(len(pairs)), key=lambda k: (-pairs[k][0], k))
    kept = _dedupe([pairs[k] for k in order], dedupe, limit, numerics)
    stats = {
        "left_ops": len(ops),
        "outputs": len(pairs),
        "kept": len(kept),
        "occurrences": agsp.occurrence_report(terms, H.n, ag.kappa_cap),
    }
    return ViableSet(i, tuple(v for _, v in kept), S3.s_cap, S3.b_cap, S3.delta_label), terms, stats


def final_extract(Sn: ViableSet, H: hamiltonian.LocalHamiltonian, numerics: Numerics = DEFAULT):
    """Lowest-energy state in ``Span(S_n)``: ``(state, energy)``."""
    basis = sdp.orthonormalize(list(Sn.vectors), numerics=numerics)
    e, state = sdp.ground_in_span(basis, H, numerics)
    return state, e


# ----------------------------------------------------------------- oracle


def _witness(S: ViableSet, oracle, n: int, d: int, numerics: Numerics) -> float | None:
    if oracle is None or not S.vectors:
        return None
    vecs = [mps.to_dense(v, numerics) for v in S.vectors]
    if S.i == n:
        Q = linalg.orthonormal_columns(np.stack(vecs, axis=1), numerics.gram_threshold)
        return float(min(1.0, np.linalg.norm(Q.conj().T @ oracle.ground_vector)))
    return exact.witness_fidelity(vecs, oracle.ground_vector, S.i, n, d)


# -------------------------------------------------------------------- run


def theory_table(n: int, d: int, epsilon: float | None, cfg: config.RunConfig) -> dict:
    """Theory-scale quantities next to the desk values actually used."""
    out = {
        "desk": {
            "m": cfg.agsp.m,
            "ell": cfg.agsp.ell,
            "B_net": cfg.net.B_net,
            "s_cap": cfg.caps.s_cap,
            "b_cap": cfg.caps.b_cap,
            "growth_cap": cfg.caps.growth_cap,
            "radius": cfg.radius,
        },
        "theory": {"p2": 48 * n * cfg.r_proxy, "B_c_eps": "symbolic (Schmidt rank for overlap 1 - c_eps)"},
    }
    if epsilon is not None:
        ce = cfg.c_eps(epsilon)
        q = cfg.final_q if cfg.final_q is not None else float(n)
        par = agsp.choose_parameters(n, epsilon, q, ce, d)
        out["theory"].update(
            {"c_eps": ce, "radius": ce / (2 * n), "q": q, "m": par["m"], "log_ell": par["log_ell"]}
        )
    return out


def _iteration(i, S_prev, H, cfg, oracle, epsilon0, radius, attempt, numerics):
    n, d = H.n, H.d
    row = {"i": i, "attempt": attempt}
    S1 = extend(S_prev, d)
    row["extend"] = {"size": S1.size, "max_bond": S1.max_bond, "witness": _witness(S1, oracle, n, d, numerics)}

    B = min(cfg.net.B_net, d ** (n - i), d**i)
    net_seed = int(config.generator(cfg.seed, i, config.STREAM_NET, attempt).integers(2**63))
    spec = boundary.NetSpec(
        B, d, cfg.net.eta, cfg.net.mode, cfg.net.count, net_seed, cfg.net.distribution, cfg.net.cap
    )
    S2, st2 = cardinality_reduce(
        S1, H, spec, radius, cfg.solver, cfg.policy.accept_residual, numerics, cfg.policy.step2_skip_small
    )
    st2.update({"size": S2.size, "max_bond": S2.max_bond, "witness": _witness(S2, oracle, n, d, numerics)})
    row["cardinality"] = st2

    S3 = bond_trim_step(S2, cfg.caps.b_cap, numerics)
    if not S3.vectors:
        raise IterationAborted(i, "bond_trim", "every vector was annihilated")
    row["trim"] = {"size": S3.size, "max_bond": S3.max_bond, "witness": _witness(S3, oracle, n, d, numerics)}

    ag = agsp.AgspConfig(
        m=cfg.agsp.m,
        ell=cfg.agsp.ell,
        kappa_cap=cfg.agsp.kappa_cap,
        scale_mode=agsp.UNNORMALIZED,
        strict=cfg.agsp.strict,
        max_pairs=cfg.caps.max_pairs,
    )
    rng = config.generator(cfg.seed, i, config.STREAM_AGSP, attempt)
    limit = cfg.caps.growth_cap * cfg.caps.s_cap
    S4, terms, st4 = error_reduce(S3, H, ag, rng, limit, cfg.policy.step4_dedupe, numerics)
    st4.update({"size": S4.size, "max_bond": S4.max_bond, "witness": _witness(S4, oracle, n, d, numerics)})
    if oracle is not None and cfg.report.get("k_vs_a", True) and epsilon0 is not None:
        st4["k_vs_a"] = agsp.verify_K_vs_A(terms, H, ag.m, epsilon0, numerics)
    row["error_reduce"] = st4
    return S4, row


def run(cfg: config.RunConfig, numerics: Numerics = DEFAULT):
    """Full pipeline. Returns ``(state, report, timings)``; ``report`` is deterministic."""
    H = hamiltonian.normalize(hamiltonian.build(cfg.model), with_gap=False, numerics=numerics)
    n, d = H.n, H.d
    dense_ok = n <= numerics.dense_cap(d)
    oracle = exact.solve(H, numerics) if (dense_ok and (cfg.oracle or cfg.epsilon is None)) else None
    if oracle is not None:
        if oracle.degenerate:
            raise IterationAborted(0, "config", "ground space is degenerate (gap ~ 0)")
        H = replace(H, gap_info=hamiltonian.GapInfo(oracle.epsilon0, oracle.epsilon1))
    epsilon = cfg.epsilon if cfg.epsilon is not None else (oracle.gap if oracle is not None else None)
    epsilon0 = oracle.epsilon0 if oracle is not None else None
    if cfg.radius is not None:
        radius = cfg.radius
    elif epsilon is not None:
        radius = cfg.c_eps(epsilon) / (2 * n)
    else:
        raise IterationAborted(0, "config", "radius needs either an explicit value or a known gap")
    if cfg.mode == "theory" and epsilon is not None:
        config.check_theory_inequalities(epsilon, cfg.c_eps(epsilon))
    tracked = oracle if cfg.oracle else None

    S = trivial_set(cfg.caps.s_cap, cfg.caps.b_cap)
    rows, timings = [], []
    for i in range(1, n + 1):
        t0 = time.perf_counter()
        for attempt in range(cfg.policy.retries + 1):
            try:
                S_new, row = _iteration(i, S, H, cfg, tracked, epsilon0, radius, attempt, numerics)
                break
            except IterationAborted as exc:
                log.warning("%s (attempt %d)", exc, attempt)
                if attempt == cfg.policy.retries:
                    raise
        S = S_new
        rows.append(row)
        timings.append({"i": i, "seconds": time.perf_counter() - t0})
        log.info("iteration %d: |S|=%d bond=%d", i, S.size, S.max_bond)

    state, energy = final_extract(S, H, numerics)
    fidelity = exact.fidelity(state, oracle, numerics) if oracle is not None else None
    report = {
        "config": cfg.to_dict(),
        "n": n,
        "d": d,
        "radius": radius,
        "epsilon": epsilon,
        "epsilon0_exact": epsilon0,
        "net_note": "random sample of the grid; the covering guarantee holds only for the full grid"
        if cfg.net.mode == "random"
        else "full grid",
        "iterations": rows,
        "final": {
            "energy": energy,
            "energy_model_units": H.to_model_units(energy),
            "energy_error": (energy - epsilon0) if epsilon0 is not None else None,
            "fidelity": fidelity,
            "max_bond": state.max_bond,
            "span_size": S.size,
        },
        "parameters": theory_table(n, d, epsilon, cfg),
    }
    return state, report, timings


def summary_table(report: dict, timings=None) -> str:
    """Text chart of (i, s, B, witness) after each of the four steps."""
    lines = ["iter  step          |S|  bond  witness     seconds"]
    tmap = {t["i"]: t["seconds"] for t in (timings or [])}
    names = [("extend", "extension"), ("cardinality", "size-trim"), ("trim", "bond-trim"), ("error_reduce", "error-red")]
    for row in report["iterations"]:
        for k, (key, label) in enumerate(names):
            r = row[key]
            wit = "-" if r.get("witness") is None else f"{r['witness']:.6f}"
            sec = f"{tmap[row['i']]:.1f}" if k == 3 and row["i"] in tmap else ""
            lines.append(f"{row['i']:>4}  {label:<12} {r['size']:>4}  {r['max_bond']:>4}  {wit:<10}  {sec}")
    f = report["final"]
    lines.append(f"final energy {f['energy']:.12f}")
    if f["fidelity"] is not None:
        lines.append(f"fidelity     {f['fidelity']:.12f}")
        lines.append(f"energy error {f['energy_error']:.3e}")
    return "\n".join(lines) + "\n"
