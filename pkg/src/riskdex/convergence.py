"""Short-horizon limits of decisions on Ito increments.

For a smooth agent (u, w) and an increment g_t with drift mu0 and diffusion
sigma0 at time zero, the decisions behave for small t as

    f_RP(g_t) / t  ->  0.5 (u''/u') sigma0^2
    f_CA(g_t)      -> -(u'/u'') mu0 / sigma0^2
    f_CE(g_t) / t  ->  0.5 (-u'/u'') (mu0 / sigma0)^2

with u', u'' evaluated at w. This module samples decisions on a geometric
t-grid, extrapolates to t = 0 and compares with these targets. It also runs
the jump-process contrast where no such limit ranking exists.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Any, Sequence

import numpy as np

from .core import Agent, DecisionValue, Gamble, arrow_pratt_absolute
from .decisions import DEFAULT_SOLVER, SolverConfig, f_ar, f_ca, f_ce, f_rp
from .errors import NotYetAGamble, PrerequisiteRankingFailed, SupportOutsideDomain, UnsupportedHorizon
from .expectation import IntegrationPolicy
from .indices import INDEX_FOR_FN, extrapolate_linear, kendall_agreement, local_index, uniformly_higher
from .processes import CompoundPoisson, Process, cp_marginal_with_bound, gamble_at, t_grid as make_grid

LIMIT_FNS = ("rp", "ca", "ce")
SCALED_BY_T = {"rp": True, "ca": False, "ce": True}
TOL_EXACT = 0.01
TOL_SIMULATED = 0.03
FIT_RESIDUAL_LIMIT = 0.10
DROPPABLE = (NotYetAGamble, SupportOutsideDomain, UnsupportedHorizon)


@dataclass(frozen=True)
class LimitTarget:
    fn: str
    u1: float
    u2: float
    mu0: float
    sigma0: float

    def __post_init__(self):
        if self.fn not in LIMIT_FNS:
            raise ValueError(f"limit targets exist for {LIMIT_FNS}, not {self.fn!r}")

    @classmethod
    def for_agent(cls, fn: str, agent: Agent, process: Process) -> "LimitTarget":
        u, w = agent.utility, agent.wealth
        return cls(fn, float(u.u1(w)), float(u.u2(w)), float(process.mu0), float(process.sigma0))

    @property
    def scaling(self) -> str:
        return "value/t" if SCALED_BY_T[self.fn] else "value"

    @property
    def value(self) -> float:
        tol = -self.u1 / self.u2  # risk tolerance 1/rho(u, w)
        if self.fn == "rp":
            return -0.5 * self.sigma0**2 / tol
        if self.fn == "ca":
            return tol * self.mu0 / self.sigma0**2
        return 0.5 * tol * (self.mu0 / self.sigma0) ** 2


@dataclass(frozen=True)
class ConvergenceReport:
    fn: str
    t_grid: list[float]
    raw: list[float]
    scaled: list[float]
    dropped: list[dict[str, Any]]
    limit: float
    method: str  # richardson | last_point
    fit_residual: float
    target: float
    rel_error: float
    tolerance: float
    passed: bool
    provenance: dict[str, Any] = field(default_factory=dict)

    def to_json(self) -> dict[str, Any]:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}

    def csv_rows(self) -> list[tuple[float, float, float, float]]:
        return [(t, r, s, self.target) for t, r, s in zip(self.t_grid, self.raw, self.scaled)]


_FN = {"ar": f_ar, "ca": f_ca, "ce": f_ce, "rp": f_rp}


def _point(args) -> tuple[float, float | None, str | None]:
    agent, process, fn, t, policy, cfg, seed = args
    try:
        g = gamble_at(process, t, seed)
        v = _FN[fn](agent, g, policy, cfg)
    except DROPPABLE as exc:
        return t, None, f"{type(exc).__name__}: {exc}"
    return t, v.as_float(), None


@lru_cache(maxsize=4096)
def _curve_cached(agent, process, fn, ts, policy, cfg, seed):
    return tuple(_point((agent, process, fn, t, policy, cfg, seed)) for t in ts)


def decision_curve(agent: Agent, process: Process, fn: str, t_grid: Sequence[float],
                   policy: IntegrationPolicy | None = None, cfg: SolverConfig = DEFAULT_SOLVER,
                   seed: int = 0, workers: int | None = None) -> list[tuple[float, float | None, str | None]]:
    """(t, decision value or None, drop reason) for each grid t, in grid order."""
    if fn not in _FN:
        raise ValueError(f"unknown decision function {fn!r}")
    ts = tuple(float(t) for t in t_grid)
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            # map preserves grid order regardless of completion order
            return list(pool.map(_point, [(agent, process, fn, t, policy, cfg, seed) for t in ts]))
    return list(_curve_cached(agent, process, fn, ts, policy, cfg, seed))


def estimate_limit(t: np.ndarray, y: np.ndarray) -> tuple[float, str, float]:
    """Richardson (first order in t) on the five smallest t; last point if the
    fit residual exceeds 10% of the estimate."""
    lim, resid = extrapolate_linear(t, y)
    if not (math.isfinite(lim) and resid <= FIT_RESIDUAL_LIMIT * abs(lim)):
        return float(y[np.argmin(t)]), "last_point", resid
    return lim, "richardson", resid


def run_convergence(agent: Agent, process: Process, fn: str, t_grid: Sequence[float] | None = None,
                    policy: IntegrationPolicy | None = None, cfg: SolverConfig = DEFAULT_SOLVER,
                    seed: int = 0, workers: int | None = None,
                    tolerance: float | None = None) -> ConvergenceReport:
    if fn not in LIMIT_FNS:
        raise ValueError(f"fn must be one of {LIMIT_FNS}")
    grid = make_grid() if t_grid is None else np.asarray(t_grid, float)
    pts = decision_curve(agent, process, fn, grid, policy, cfg, seed, workers)
    kept = [(t, v) for t, v, _ in pts if v is not None]
    dropped = [{"t": t, "reason": why} for t, v, why in pts if v is None]
    if len(kept) < 5:
        raise ValueError(f"only {len(kept)} usable grid points; need at least 5")
    ts = np.array([t for t, _ in kept])
    raw = np.array([v for _, v in kept])
    scaled = raw / ts if SCALED_BY_T[fn] else raw.copy()
    target = LimitTarget.for_agent(fn, agent, process)
    lim, method, resid = estimate_limit(ts, scaled)
    tol = tolerance if tolerance is not None else (TOL_EXACT if process.exact else TOL_SIMULATED)
    if method == "last_point":
        tol *= 2.0
    rel = abs(lim - target.value) / abs(target.value)
    prov = {"marginal": "exact" if process.exact else "euler", "seed": seed}
    return ConvergenceReport(fn, ts.tolist(), raw.tolist(), scaled.tolist(), dropped, lim, method,
                             resid, target.value, rel, tol, bool(rel <= tol), prov)


# ---------------------------------------------------------------------------
# rankings across processes and across agents
# ---------------------------------------------------------------------------


def _order_tau(values: Sequence[float], expected_key: Sequence[float]) -> float:
    """Agreement of a value ordering with the ordering of ``expected_key``."""
    return kendall_agreement(values, expected_key)


@dataclass(frozen=True)
class PairwiseRankingReport:
    fn: str
    index_kind: str
    local_indices: list[float]
    risk_aversion: list[float]
    limits: list[list[float]]                  # limits[agent][process] of the scaled curve
    process_tau: list[float]                   # per agent: limits vs -index
    agent_tau: list[float]                     # per process: limits vs -risk aversion
    process_pairs: list[dict[str, Any]]
    agent_pairs: list[dict[str, Any]]
    process_rankings_agree: bool
    agent_rankings_agree: bool

    def to_json(self) -> dict[str, Any]:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def run_pairwise_ranking(agents: Sequence[Agent], processes: Sequence[Process], fn: str,
                         t_grid: Sequence[float] | None = None,
                         policy: IntegrationPolicy | None = None,
                         cfg: SolverConfig = DEFAULT_SOLVER, seed: int = 0) -> PairwiseRankingReport:
    """Compare decision curves pairwise (processes for each agent, agents for
    each process) with the uniformly-higher relation, and check the limit
    orderings against local indices and absolute risk aversion."""
    if fn not in LIMIT_FNS:
        raise ValueError(f"fn must be one of {LIMIT_FNS}")
    grid = make_grid() if t_grid is None else np.asarray(t_grid, float)
    kind = INDEX_FOR_FN[fn]
    q = [local_index(kind, p) for p in processes]
    rho = [arrow_pratt_absolute(a) for a in agents]
    curves = np.empty((len(agents), len(processes), grid.size))
    limits = np.empty((len(agents), len(processes)))
    for i, a in enumerate(agents):
        for j, p in enumerate(processes):
            pts = decision_curve(a, p, fn, grid, policy, cfg, seed)
            if any(v is None for _, v, _ in pts):
                raise ValueError(f"process {j} is not a gamble on the whole grid for agent {i}")
            raw = np.array([v for _, v, _ in pts])
            curves[i, j] = raw
            scaled = raw / grid if SCALED_BY_T[fn] else raw
            limits[i, j] = estimate_limit(grid, scaled)[0]

    process_pairs = []
    for i in range(len(agents)):
        for j in range(len(processes)):
            for k in range(len(processes)):
                if j == k or not q[j] < q[k]:
                    continue
                res = uniformly_higher(curves[i, j], curves[i, k], grid)
                process_pairs.append({"agent": i, "higher": j, "lower": k, **res.to_json(),
                                      "as_expected": res.holds})
    agent_pairs = []
    for j in range(len(processes)):
        for a in range(len(agents)):
            for b in range(len(agents)):
                if a == b or not rho[a] < rho[b]:
                    continue
                res = uniformly_higher(curves[a, j], curves[b, j], grid)
                agent_pairs.append({"process": j, "higher": a, "lower": b, **res.to_json(),
                                    "as_expected": res.holds})
    neg_q = [-x for x in q]
    neg_rho = [-x for x in rho]
    process_tau = [_order_tau(limits[i], neg_q) for i in range(len(agents))]
    agent_tau = [_order_tau(limits[:, j], neg_rho) for j in range(len(processes))]
    return PairwiseRankingReport(
        fn=fn, index_kind=kind, local_indices=q, risk_aversion=rho, limits=limits.tolist(),
        process_tau=process_tau, agent_tau=agent_tau, process_pairs=process_pairs,
        agent_pairs=agent_pairs,
        process_rankings_agree=all(t == 1.0 for t in process_tau) and all(p["as_expected"] for p in process_pairs),
        agent_rankings_agree=all(t == 1.0 for t in agent_tau) and all(p["as_expected"] for p in agent_pairs),
    )


# ---------------------------------------------------------------------------
# jump processes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class JumpReversalReport:
    jump_level: dict[str, str]
    t_grid: list[float]
    agent1: list[tuple[str, str]]   # (decision on cp1_t, decision on cp2_t)
    agent2: list[tuple[str, str]]
    reversed_at: list[bool]
    t_check: float
    reversal_holds: bool
    tail_bounds: list[float]

    def to_json(self) -> dict[str, Any]:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def _tag(v: DecisionValue) -> str:
    return v.tag


def run_jump_reversal(cp1: CompoundPoisson, cp2: CompoundPoisson, agent1: Agent, agent2: Agent,
                      t_grid: Sequence[float] | None = None, policy: IntegrationPolicy | None = None,
                      cfg: SolverConfig = DEFAULT_SOLVER, t_check: float = 0.01) -> JumpReversalReport:
    """Agent 1 accepts jump h and rejects h~, agent 2 the reverse. Then for small
    t the same split appears on the compound-Poisson marginals, so the two
    agents order the processes oppositely under accept/reject."""
    h1, h2 = Gamble(cp1.jumps), Gamble(cp2.jumps)
    level = {
        "agent1_h": _tag(f_ar(agent1, h1, policy, cfg)), "agent1_h_tilde": _tag(f_ar(agent1, h2, policy, cfg)),
        "agent2_h": _tag(f_ar(agent2, h1, policy, cfg)), "agent2_h_tilde": _tag(f_ar(agent2, h2, policy, cfg)),
    }
    wanted = {"agent1_h": "accept", "agent1_h_tilde": "reject",
              "agent2_h": "reject", "agent2_h_tilde": "accept"}
    if level != wanted:
        raise PrerequisiteRankingFailed(f"jump-level decisions {level} do not split the agents")
    grid = make_grid(t_check, 14) if t_grid is None else np.asarray(t_grid, float)
    a1, a2, rev, bounds = [], [], [], []
    for t in grid:
        g1, b1 = cp_marginal_with_bound(cp1, float(t))
        g2, b2 = cp_marginal_with_bound(cp2, float(t))
        d1 = (_tag(f_ar(agent1, g1, policy, cfg)), _tag(f_ar(agent1, g2, policy, cfg)))
        d2 = (_tag(f_ar(agent2, g1, policy, cfg)), _tag(f_ar(agent2, g2, policy, cfg)))
        a1.append(d1)
        a2.append(d2)
        rev.append(d1 == ("accept", "reject") and d2 == ("reject", "accept"))
        bounds.append(max(b1, b2))
    small = [r for t, r in zip(grid, rev) if t <= t_check]
    return JumpReversalReport(level, grid.tolist(), a1, a2, rev, t_check,
                              bool(small) and all(small), bounds)


__all__ = [
    "LimitTarget", "ConvergenceReport", "run_convergence", "decision_curve", "estimate_limit",
    "PairwiseRankingReport", "run_pairwise_ranking", "JumpReversalReport", "run_jump_reversal",
]
