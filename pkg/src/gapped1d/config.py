"""Run configuration: defaults, dotted overrides, validation and seed splitting."""

from __future__ import annotations

import copy
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .hamiltonian import ModelSpec
from .sdp import SolverConfig

DEFAULTS: dict = {
    "model": {"model": "tfim", "n": 6, "d": 2, "params": {"g": 2.0}},
    "mode": "desk",
    "epsilon": None,
    "c_eps_override": None,
    # desk stand-in for the constraint radius c_eps/(2n); null keeps the formula
    "radius": 0.1,
    "final_q": None,
    "seed": 0,
    "r_proxy": 2,
    "oracle": True,
    "net": {"B_net": 2, "eta": 0.5, "mode": "random", "count": 200, "distribution": "density", "cap": 1000000},
    "caps": {"s_cap": 8, "b_cap": 4, "growth_cap": 3, "max_pairs": 200000},
    "agsp": {"m": 12, "ell": 24, "kappa_cap": 6, "scale_mode": "unnormalized", "strict": True},
    "solver": asdict(SolverConfig(feas_tol=1e-4, obj_tol=1e-6, max_iter=800)),
    "policy": {"step2_select": "objective", "step4_dedupe": "parallel", "accept_residual": 1e-3, "retries": 1, "step2_skip_small": True},
    "report": {"k_vs_a": True},
}

# seed-stream labels; the spawn key of every generator is (iteration, stream, attempt)
STREAM_NET = 0
STREAM_AGSP = 1


@dataclass(frozen=True)
class NetConfig:
    B_net: int
    eta: float
    mode: str
    count: int
    distribution: str
    cap: int


@dataclass(frozen=True)
class Caps:
    s_cap: int
    b_cap: int
    growth_cap: int
    max_pairs: int


@dataclass(frozen=True)
class AgspSection:
    m: int
    ell: int
    kappa_cap: int
    scale_mode: str
    strict: bool


@dataclass(frozen=True)
class Policy:
    step2_select: str
    step4_dedupe: str
    accept_residual: float
    retries: int
    step2_skip_small: bool


@dataclass(frozen=True)
class RunConfig:
    model: ModelSpec
    mode: str
    epsilon: float | None
    c_eps_override: float | None
    radius: float | None
    final_q: float | None
    seed: int
    r_proxy: int
    oracle: bool
    net: NetConfig
    caps: Caps
    agsp: AgspSection
    solver: SolverConfig
    policy: Policy
    report: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {
            "model": self.model.to_dict(),
            "mode": self.mode,
            "epsilon": self.epsilon,
            "c_eps_override": self.c_eps_override,
            "radius": self.radius,
            "final_q": self.final_q,
            "seed": self.seed,
            "r_proxy": self.r_proxy,
            "oracle": self.oracle,
            "net": asdict(self.net),
            "caps": asdict(self.caps),
            "agsp": asdict(self.agsp),
            "solver": asdict(self.solver),
            "policy": asdict(self.policy),
            "report": dict(self.report),
        }
        return out

    def c_eps(self, epsilon: float) -> float:
        return self.c_eps_override if self.c_eps_override is not None else (epsilon / 169.0) ** 2


def _merge(base: dict, over: dict, prefix: str = "") -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        key = f"{prefix}{k}"
        if k not in out:
            raise ConfigError(key, "unknown key")
        if isinstance(out[k], dict) and isinstance(v, dict) and k != "params":
            out[k] = _merge(out[k], v, key + ".")
        else:
            out[k] = copy.deepcopy(v)
    return out


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_overrides(doc: dict, overrides) -> dict:
    """Apply ``a.b.c=value`` strings; every key must already exist (``model.params`` excepted)."""
    out = copy.deepcopy(doc)
    for item in overrides or ():
        if "=" not in item:
            raise ConfigError(item, "override must look like key=value")
        key, raw = item.split("=", 1)
        parts = key.strip().split(".")
        node = out
        for depth, part in enumerate(parts[:-1]):
            if not isinstance(node, dict) or part not in node:
                raise ConfigError(key, "unknown key")
            node = node[part]
        last = parts[-1]
        inside_params = len(parts) >= 2 and parts[-2] == "params"
        if not isinstance(node, dict) or (last not in node and not inside_params):
            raise ConfigError(key, "unknown key")
        node[last] = _parse_value(raw)
    return out


def _require(cond: bool, key: str, msg: str) -> None:
    if not cond:
        raise ConfigError(key, msg)


def from_dict(doc: dict) -> RunConfig:
    """Merge ``doc`` over the defaults and validate."""
    raw = _merge(DEFAULTS, doc)
    try:
        model = ModelSpec.from_dict(raw["model"])
        net = NetConfig(**raw["net"])
        caps = Caps(**raw["caps"])
        ag = AgspSection(**raw["agsp"])
        solver = SolverConfig(**raw["solver"])
        policy = Policy(**raw["policy"])
    except TypeError as exc:
        raise ConfigError("config", str(exc)) from None
    except ValueError as exc:
        raise ConfigError("solver.step_rule", str(exc)) from None
    _require(model.n >= 2, "model.n", "need at least two sites")
    _require(model.d >= 2, "model.d", "local dimension must be >= 2")
    _require(raw["mode"] in ("desk", "theory"), "mode", "must be desk or theory")
    _require(net.B_net >= 1, "net.B_net", "must be >= 1")
    _require(net.eta > 0, "net.eta", "must be positive")
    _require(net.mode in ("random", "full"), "net.mode", "must be random or full")
    _require(net.count >= 1, "net.count", "must be >= 1")
    for k in ("s_cap", "b_cap", "growth_cap", "max_pairs"):
        _require(getattr(caps, k) >= 1, f"caps.{k}", "caps must be >= 1")
    _require(ag.m >= 0, "agsp.m", "must be >= 0")
    _require(ag.ell >= 1, "agsp.ell", "must be >= 1")
    _require(ag.kappa_cap >= 1, "agsp.kappa_cap", "must be >= 1")
    _require(ag.scale_mode in ("unnormalized", "known"), "agsp.scale_mode", "must be unnormalized or known")
    _require(policy.step2_select in ("objective",), "policy.step2_select", "only 'objective' is implemented")
    _require(policy.step4_dedupe in ("parallel", "span"), "policy.step4_dedupe", "must be parallel or span")
    _require(policy.retries >= 0, "policy.retries", "must be >= 0")
    _require(raw["radius"] is None or raw["radius"] >= 0, "radius", "must be nonnegative")
    eps = raw["epsilon"]
    _require(eps is None or eps > 0, "epsilon", "gap must be positive (degenerate ground spaces are not supported)")
    cfg = RunConfig(
        model=model,
        mode=raw["mode"],
        epsilon=eps,
        c_eps_override=raw["c_eps_override"],
        radius=raw["radius"],
        final_q=raw["final_q"],
        seed=int(raw["seed"]),
        r_proxy=int(raw["r_proxy"]),
        oracle=bool(raw["oracle"]),
        net=net,
        caps=caps,
        agsp=ag,
        solver=solver,
        policy=policy,
        report=dict(raw["report"]),
    )
    if cfg.mode == "theory" and eps is not None:
        check_theory_inequalities(eps, cfg.c_eps(eps))
    return cfg


def check_theory_inequalities(epsilon: float, c_eps: float) -> None:
    """The three constraints that tie ``c_eps`` to the gap; the error lists every violated one."""
    bad = []
    if not c_eps * (1 + 1 / epsilon) <= 0.5:
        bad.append("c_eps (1 + 1/eps) <= 1/2")
    if not 14 * math.sqrt(c_eps) / epsilon < 1 / 12:
        bad.append("14 sqrt(c_eps)/eps < 1/12")
    if not 84 * c_eps / epsilon < 0.5:
        bad.append("84 c_eps/eps < 1/2")
    if bad:
        raise ConfigError("c_eps_override", "violates " + "; ".join(bad))


def load(path, overrides=None, seed: int | None = None) -> RunConfig:
    p = Path(path)
    if not p.is_file():
        raise ConfigError("config", f"file not found: {p}")
    try:
        doc = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError("config", f"invalid JSON: {exc}") from None
    doc = apply_overrides(_merge(DEFAULTS, doc), overrides)
    if seed is not None:
        doc["seed"] = seed
    return from_dict(doc)


def generator(seed: int, iteration: int, stream: int, attempt: int = 0) -> np.random.Generator:
    """Independent generator for one (iteration, stream, attempt) triple of a run."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(iteration, stream, attempt)))
