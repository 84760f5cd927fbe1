"""Named experiment suites. Each returns a JSON-ready dict with a ``passed`` flag
and the raw numbers behind it, so callers can re-check with their own bounds."""
from __future__ import annotations

import random
import time
from typing import Any, Callable

from . import presets
from .closed_form import cara_normal_ar, cara_normal_ca, cara_normal_ce, cara_normal_rp
from .convergence import run_convergence, run_jump_reversal, run_pairwise_ranking
from .core import CARA, CRRA, Agent, Gamble, Log, Normal, Quadratic
from .decisions import (
    DEFAULT_SOLVER, MULTIPLICATIVE, SolverConfig, evaluate, f_ar, f_sce,
)
from .expectation import IntegrationPolicy
from .indices import consistency_check, local_index, weak_consistency_check
from .processes import gamble_at, t_grid

CARA_GRID_RTOL = 1e-6
INVARIANCE_ATOL = 1e-9
MULTIPLICATIVE_ATOL = 1e-10

_CARA_NORMAL = {"rp": cara_normal_rp, "ca": cara_normal_ca, "ce": cara_normal_ce}


def cara_normal_grid(policy: IntegrationPolicy | None = None, cfg: SolverConfig = DEFAULT_SOLVER,
           **_: Any) -> dict[str, Any]:
    start = time.perf_counter()
    worst = {fn: 0.0 for fn in _CARA_NORMAL}
    ar_mismatch, boundary = [], []
    for c in presets.cara_normal_grid():
        agent, g = Agent(CARA(c.rho), c.wealth), Gamble.normal(c.mu, c.sigma)
        for fn, ref in _CARA_NORMAL.items():
            v = evaluate(fn, agent, g, policy, cfg).value
            worst[fn] = max(worst[fn], abs(v - ref(c)) / abs(ref(c)))
        got, want = f_ar(agent, g, policy, cfg).tag, cara_normal_ar(c).tag
        if got != want:
            ar_mismatch.append(c.to_json())
        if 2.0 * c.mu == c.rho * c.sigma**2:
            boundary.append({**c.to_json(), "ar": got})
    elapsed = time.perf_counter() - start
    passed = (all(e <= CARA_GRID_RTOL for e in worst.values()) and not ar_mismatch and bool(boundary))
    return {"cases": len(presets.cara_normal_grid()), "max_rel_error": worst,
            "ar_mismatches": ar_mismatch, "boundary_cases": boundary,
            "elapsed_s": elapsed, "passed": passed}


def invariance(policy=None, cfg=DEFAULT_SOLVER, **_: Any) -> dict[str, Any]:
    spread = {fn: 0.0 for fn in ("ar", "rp", "ca", "ce")}
    seen = set()
    for c in presets.cara_normal_grid():
        key = (c.rho, c.mu, c.sigma)
        if key in seen:
            continue
        seen.add(key)
        g = Gamble.normal(c.mu, c.sigma)
        for fn in spread:
            vals = [evaluate(fn, Agent(CARA(c.rho), w), g, policy, cfg).as_float()
                    for w in presets.INVARIANCE_WEALTH]
            spread[fn] = max(spread[fn], max(vals) - min(vals))
    return {"wealths": list(presets.INVARIANCE_WEALTH), "max_spread": spread,
            "passed": all(s <= INVARIANCE_ATOL for s in spread.values())}


def limits(policy=None, cfg=DEFAULT_SOLVER, seed: int = 0, workers: int | None = None,
           **_: Any) -> dict[str, Any]:
    start = time.perf_counter()
    rows = []
    for p in presets.limit_processes():
        for a in presets.limit_agents():
            for fn in ("rp", "ca", "ce"):
                r = run_convergence(a, p, fn, None, policy, cfg, seed, workers)
                rows.append({"process": p.to_json(), "agent": a.to_json(), "fn": fn,
                             "limit": r.limit, "target": r.target, "rel_error": r.rel_error,
                             "tolerance": r.tolerance, "method": r.method, "passed": r.passed})
    return {"rows": rows, "elapsed_s": time.perf_counter() - start,
            "passed": all(r["passed"] for r in rows)}


def rankings(policy=None, cfg=DEFAULT_SOLVER, seed: int = 0, **_: Any) -> dict[str, Any]:
    out = {}
    for fn in ("ca", "ce", "rp"):
        r = run_pairwise_ranking(presets.limit_agents(), presets.ranking_processes(), fn,
                                 None, policy, cfg, seed)
        out[fn] = {"index_kind": r.index_kind, "local_indices": r.local_indices,
                   "limits": r.limits, "process_tau": r.process_tau,
                   "failed_pairs": [p for p in r.process_pairs if not p["as_expected"]],
                   "agree": r.process_rankings_agree}
    return {"by_fn": out, "passed": all(v["agree"] for v in out.values())}


def aversion(policy=None, cfg=DEFAULT_SOLVER, seed: int = 0, **_: Any) -> dict[str, Any]:
    out = {}
    for fn in ("ca", "ce", "rp"):
        r = run_pairwise_ranking(presets.aversion_panel(), presets.ranking_processes(), fn,
                                 None, policy, cfg, seed)
        out[fn] = {"risk_aversion": r.risk_aversion, "limits": r.limits,
                   "agent_tau": r.agent_tau,
                   "failed_pairs": [p for p in r.agent_pairs if not p["as_expected"]],
                   "agree": r.agent_rankings_agree}
    return {"by_fn": out, "passed": all(v["agree"] for v in out.values())}


def weak(policy=None, cfg=DEFAULT_SOLVER, seed: int = 0, **_: Any) -> dict[str, Any]:
    agent, procs = presets.weak_consistency_case()
    grid = t_grid()
    q = [local_index("vm", p) for p in procs]
    curves = [[f_ar(agent, gamble_at(p, float(t), seed), policy, cfg).as_float() for t in grid]
              for p in procs]
    res = weak_consistency_check(q, curves, grid)
    threshold = 2.0 / float(agent.utility.absolute_risk_aversion(agent.wealth))
    straddle = min(q) < threshold < max(q)
    return {"local_vm": q, "threshold": threshold, "curves": curves, "t_grid": grid.tolist(),
            **res.to_json(), "straddles": straddle, "passed": res.holds and straddle}


def sce(policy=None, cfg=DEFAULT_SOLVER, **_: Any) -> dict[str, Any]:
    agents, gambles = presets.sce_counterexample()
    rep = consistency_check(lambda a, g: f_sce(a, g, policy, cfg), agents, gambles, fn_name="sce")
    return {**rep.to_json(), "passed": not rep.agreement}


def jumps(policy=None, cfg=DEFAULT_SOLVER, **_: Any) -> dict[str, Any]:
    cp1, cp2, a1, a2 = presets.jump_pair()
    rep = run_jump_reversal(cp1, cp2, a1, a2, None, policy, cfg)
    return {**rep.to_json(), "passed": rep.reversal_holds}


def random_triples(n: int = 50, seed: int = 0) -> list[tuple[Agent, Gamble, float]]:
    """Reproducible (agent, per-dollar return, risk-free rate) triples."""
    rng = random.Random(seed)
    out = []
    while len(out) < n:
        w = rng.uniform(0.5, 5.0)
        kind = rng.choice(["cara", "log", "crra", "quadratic"])
        if kind == "cara":
            u = CARA(rng.uniform(0.1, 3.0))
        elif kind == "log":
            u = Log()
        elif kind == "crra":
            u = CRRA(rng.uniform(0.5, 4.0))
        else:
            u = Quadratic(rng.uniform(0.01, 0.05) / w)  # bliss point at 20w or beyond
        r_f = rng.uniform(0.0, 0.05)
        if rng.random() < 0.5:
            r = Gamble.normal(r_f + rng.uniform(0.01, 0.1), rng.uniform(0.05, 0.3))
        else:
            up, down = rng.uniform(0.05, 0.5), rng.uniform(0.02, 0.4)
            p = rng.uniform(0.3, 0.8)
            if p * up - (1 - p) * down <= r_f + 1e-3:
                continue
            r = Gamble.discrete([(up, p), (-down, 1 - p)])
        if kind in ("log", "crra") and isinstance(r.dist, Normal):
            continue  # unbounded losses against a utility on (0, inf)
        out.append((Agent(u, w), r, r_f))
    return out


def multiplicative(policy=None, cfg=DEFAULT_SOLVER, seed: int = 0, **_: Any) -> dict[str, Any]:
    worst_identity = 0.0
    for agent, r, r_f in random_triples(50, seed):
        # rebuild the additive pair from the distribution parameters directly,
        # independent of the affine-transform code path under test
        w = agent.wealth
        add_agent = Agent(agent.utility, w * (1.0 + r_f))
        if isinstance(r.dist, Normal):
            add_g = Gamble.normal(w * (r.dist.mu - r_f), w * r.dist.sigma)
        else:
            add_g = Gamble.discrete([(w * (v - r_f), q) for v, q in zip(r.dist.values, r.dist.probs)])
        for fn, f_m in MULTIPLICATIVE.items():
            got = f_m(agent, r, r_f, policy, cfg).as_float()
            ref = evaluate(fn, add_agent, add_g, policy, cfg).as_float()
            if fn in ("ce", "rp"):
                ref /= agent.wealth
            worst_identity = max(worst_identity, abs(got - ref))
    worst_reduction = 0.0
    for agent, r, _ in random_triples(20, seed + 1):
        agent = agent.with_wealth(1.0)
        for fn, f_m in MULTIPLICATIVE.items():
            got = f_m(agent, r, 0.0, policy, cfg).as_float()
            ref = evaluate(fn, agent, r, policy, cfg).as_float()
            worst_reduction = max(worst_reduction, abs(got - ref))
    return {"max_identity_error": worst_identity, "max_reduction_error": worst_reduction,
            "passed": worst_identity <= MULTIPLICATIVE_ATOL and worst_reduction <= MULTIPLICATIVE_ATOL}


SUITES: dict[str, Callable[..., dict[str, Any]]] = {
    "claim1": cara_normal_grid, "invariance": invariance, "limits": limits, "rankings": rankings,
    "aversion": aversion, "weak": weak, "sce": sce, "jumps": jumps,
    "multiplicative": multiplicative,
}

__all__ = ["SUITES", "random_triples"] + list(SUITES)
