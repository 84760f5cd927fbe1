"""Decision functions: accept/reject, capital allocation, certainty equivalent,
risk premium and the sure-gain equivalent, in additive and per-dollar form.

All objectives are worked in units of u'(w) (see :mod:`riskdex.expectation`),
so a gamble whose scale is 1e-7 is handled as accurately as one of scale 1.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Any, Callable

import numpy as np
from scipy.optimize import brentq

from .core import Agent, DecisionValue, Discrete, Empirical, Gamble, Normal, ShiftedLogNormal
from .errors import BracketError, DomainError, NonFinite, SupportOutsideDomain
from .expectation import IntegrationPolicy, feasible_alpha_max, remainder_mean, scaled_gain, scaled_slope

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class SolverConfig:
    root_abs_tol: float = 1e-16
    root_rel_tol: float = 1e-12
    max_bracket_expansions: int = 60
    alpha_cap: float = 1e6
    opt_tol: float = 1e-8

    def __post_init__(self):
        if not (self.root_abs_tol > 0 and self.root_rel_tol > 0 and self.opt_tol > 0):
            raise ValueError("solver tolerances must be positive")
        if self.root_rel_tol < 4 * np.finfo(float).eps:
            raise ValueError("root_rel_tol below 4 machine epsilons is not attainable")
        if not self.alpha_cap >= 1e3:
            raise ValueError("alpha_cap must be at least 1e3")
        if self.max_bracket_expansions < 1:
            raise ValueError("max_bracket_expansions must be positive")

    @classmethod
    def from_json(cls, obj: dict[str, Any] | None) -> "SolverConfig":
        if not obj:
            return cls()
        return cls(**{k: obj[k] for k in cls.__dataclass_fields__ if k in obj})

    def to_json(self) -> dict[str, Any]:
        return asdict(self)


DEFAULT_SOLVER = SolverConfig()


def _root(fn: Callable[[float], float], lo: float, hi: float, cfg: SolverConfig) -> float:
    return float(brentq(fn, lo, hi, xtol=cfg.root_abs_tol, rtol=cfg.root_rel_tol, maxiter=500))


# ---------------------------------------------------------------------------
# accept / reject
# ---------------------------------------------------------------------------


def f_ar(agent: Agent, g: Gamble, policy: IntegrationPolicy | None = None,
         cfg: SolverConfig = DEFAULT_SOLVER) -> DecisionValue:
    """Accept iff E[u(w + g)] >= u(w); exact ties (within tolerance) accept."""
    gain = scaled_gain(agent, g, 1.0, policy)
    tol = cfg.root_abs_tol + cfg.root_rel_tol * g.mean
    return DecisionValue.accept(gain >= -tol)


# ---------------------------------------------------------------------------
# capital allocation
# ---------------------------------------------------------------------------


def _safe(fn: Callable[[float], float], bad: float) -> Callable[[float], float]:
    def wrapped(a: float) -> float:
        try:
            return fn(a)
        except (NonFinite, SupportOutsideDomain):
            return bad
    return wrapped


def _golden_max(phi: Callable[[float], float], a: float, b: float, tol: float) -> tuple[float, float]:
    """Shrink [a, b] around the maximiser of a unimodal phi until b - a <= tol."""
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = phi(c), phi(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = phi(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = phi(d)
    return a, b


def _optimal_alpha(agent: Agent, g: Gamble, policy, cfg: SolverConfig) -> float:
    """Maximiser of E[u(w + a g)] over a >= 0; +inf when still rising at alpha_cap."""
    a_dom = feasible_alpha_max(agent, g, policy)
    if not a_dom > 0:
        raise DomainError("no positive allocation keeps w + a g inside the utility domain")
    # a hair inside the domain edge so the integrand stays finite
    upper = min(cfg.alpha_cap, a_dom * (1.0 - 1e-9))
    slope = _safe(lambda a: scaled_slope(agent, g, a, policy), -math.inf)
    gain = _safe(lambda a: scaled_gain(agent, g, a, policy), -math.inf)

    lo, hi = 0.0, min(1.0, upper)
    while slope(hi) > 0:
        if hi >= upper:
            if upper >= cfg.alpha_cap:
                return math.inf
            return upper  # maximiser pinned at the domain edge
        lo, hi = hi, min(2.0 * hi, upper)

    a, b = _golden_max(gain, lo, hi, cfg.opt_tol * max(1.0, lo))
    # the objective is flat to second order at the optimum, so golden-section
    # stalls near sqrt(eps); the slope is monotone and pins it to rounding level
    for x, y in ((a, b), (lo, hi)):
        sx, sy = slope(x), slope(y)
        if sx > 0 > sy and math.isfinite(sx):
            return _root(slope, x, y, cfg)
        if sx > 0 and sy == 0:
            return y
    return 0.5 * (a + b)


def f_ca(agent: Agent, g: Gamble, policy: IntegrationPolicy | None = None,
         cfg: SolverConfig = DEFAULT_SOLVER) -> DecisionValue:
    """Expected-utility maximising allocation alpha* >= 0."""
    alpha = _optimal_alpha(agent, g, policy, cfg)
    return DecisionValue.PLUS_INF if math.isinf(alpha) else DecisionValue.finite(alpha)


# ---------------------------------------------------------------------------
# certainty equivalent
# ---------------------------------------------------------------------------


def _sure_gain_for(agent: Agent, target: float, cfg: SolverConfig) -> float:
    """The c with (u(w + c) - u(w))/u'(w) = target >= 0."""
    if target <= 0:
        return 0.0
    u, w = agent.utility, agent.wealth
    hi_dom = u.domain[1] - w

    def fn(c: float) -> float:
        return float(u.du_scaled(w, c)) - target

    # concavity gives du_scaled(c) <= c, hence c >= target
    lo, hi = target, 2.0 * target
    for _ in range(cfg.max_bracket_expansions):
        if hi >= hi_dom:
            hi = lo + 0.5 * (hi_dom - lo)
        if fn(hi) >= 0:
            return _root(fn, lo, hi, cfg) if fn(lo) < 0 else lo
        lo, hi = hi, 2.0 * hi
    raise BracketError("certainty-equivalent bracket did not close")


def f_ce(agent: Agent, g: Gamble, policy: IntegrationPolicy | None = None,
         cfg: SolverConfig = DEFAULT_SOLVER) -> DecisionValue:
    """Sure gain c >= 0 with u(w + c) = max_a E[u(w + a g)]."""
    alpha = _optimal_alpha(agent, g, policy, cfg)
    if math.isinf(alpha):
        return DecisionValue.PLUS_INF
    best = scaled_gain(agent, g, alpha, policy)
    return DecisionValue.finite(_sure_gain_for(agent, best, cfg))


# ---------------------------------------------------------------------------
# risk premium and sure-gain equivalent
# ---------------------------------------------------------------------------


def _premium(agent: Agent, g: Gamble, policy, cfg: SolverConfig) -> float:
    """x <= 0 with u(w + E[g] + x) = E[u(w + g)]; -inf when no such x exists."""
    u, w, m = agent.utility, agent.wealth, g.mean
    r_mean, _ = remainder_mean(agent, g, 1.0, "level", policy)

    def fn(x: float) -> float:
        d = m + x
        return x + (float(u.du_scaled(w, d)) - d) - r_mean

    # fn(0) >= 0 by Jensen and fn(r_mean) <= 0 because the remainder is
    # non-positive, so [r_mean, 0] always brackets; grow towards r_mean from a
    # gamble-sized start to keep the utility away from overflow
    hi, floor = 0.0, min(r_mean, 0.0)
    edge = u.domain[0] - w - m
    if floor <= edge:
        floor = edge + 1e-12 * max(1.0, abs(edge))
        if fn(floor) > 0:
            return -math.inf
    f_hi = fn(hi)
    if f_hi <= 0:
        return 0.0
    lo = max(floor, -min(g.std, 1.0) * 2.0 ** -20)
    for _ in range(cfg.max_bracket_expansions):
        if lo <= floor or fn(lo) <= 0:
            break
        lo = max(floor, 2.0 * lo)
    else:
        lo = floor
    f_lo = fn(lo)
    if f_lo >= 0:
        # rounding-level premium: the remainder is below resolution
        return lo if abs(f_lo) < abs(f_hi) else hi
    return min(_root(fn, lo, hi, cfg), 0.0)


def f_rp(agent: Agent, g: Gamble, policy: IntegrationPolicy | None = None,
         cfg: SolverConfig = DEFAULT_SOLVER) -> DecisionValue:
    """Risk premium (non-positive)."""
    x = _premium(agent, g, policy, cfg)
    return DecisionValue.MINUS_INF if math.isinf(x) else DecisionValue.finite(x)


def f_sce(agent: Agent, g: Gamble, policy: IntegrationPolicy | None = None,
          cfg: SolverConfig = DEFAULT_SOLVER) -> float:
    """Sure gain s with u(w + s) = E[u(w + g)]; equals E[g] + f_rp."""
    return g.mean + _premium(agent, g, policy, cfg)


FUNCTIONS: dict[str, Callable[..., Any]] = {
    "ar": f_ar, "ca": f_ca, "ce": f_ce, "rp": f_rp, "sce": f_sce,
}


# ---------------------------------------------------------------------------
# per-dollar (multiplicative) forms
# ---------------------------------------------------------------------------


def _min_return(r: Gamble) -> float:
    dist = r.dist
    if isinstance(dist, (Discrete, Empirical)):
        return dist.support_bounds()[0]
    if isinstance(dist, ShiftedLogNormal):
        return dist.shift
    return -math.inf


def to_additive(agent: Agent, r: Gamble, r_f: float) -> tuple[Agent, Gamble]:
    """The (agent, gamble) pair (u, w(1 + r_f)), w (r - r_f) standing in for a per-dollar return."""
    if not agent.wealth > 0:
        raise DomainError("per-dollar decisions need positive wealth")
    if not r.mean > r_f:
        raise ValueError(f"mean return {r.mean} must exceed the risk-free rate {r_f}")
    if not isinstance(r.dist, Normal) and _min_return(r) < -1.0:
        raise ValueError("returns below -1 (losing more than the stake) are not admissible")
    w = agent.wealth
    return agent.with_wealth(w * (1.0 + r_f)), r.affine(-w * r_f, w)


def f_ar_m(agent: Agent, r: Gamble, r_f: float, policy=None, cfg: SolverConfig = DEFAULT_SOLVER) -> DecisionValue:
    return f_ar(*to_additive(agent, r, r_f), policy, cfg)


def f_ca_m(agent: Agent, r: Gamble, r_f: float, policy=None, cfg: SolverConfig = DEFAULT_SOLVER) -> DecisionValue:
    return f_ca(*to_additive(agent, r, r_f), policy, cfg)


def _per_wealth(v: DecisionValue, w: float) -> DecisionValue:
    return DecisionValue.finite(v.value / w) if v.is_finite else v


def f_ce_m(agent: Agent, r: Gamble, r_f: float, policy=None, cfg: SolverConfig = DEFAULT_SOLVER) -> DecisionValue:
    return _per_wealth(f_ce(*to_additive(agent, r, r_f), policy, cfg), agent.wealth)


def f_rp_m(agent: Agent, r: Gamble, r_f: float, policy=None, cfg: SolverConfig = DEFAULT_SOLVER) -> DecisionValue:
    return _per_wealth(f_rp(*to_additive(agent, r, r_f), policy, cfg), agent.wealth)


MULTIPLICATIVE: dict[str, Callable[..., DecisionValue]] = {
    "ar": f_ar_m, "ca": f_ca_m, "ce": f_ce_m, "rp": f_rp_m,
}


def evaluate(fn: str, agent: Agent, g: Gamble, policy: IntegrationPolicy | None = None,
             cfg: SolverConfig = DEFAULT_SOLVER) -> DecisionValue:
    """Dispatch by short name; f_sce is wrapped as a finite DecisionValue."""
    if fn not in FUNCTIONS:
        raise ValueError(f"unknown decision function {fn!r}")
    out = FUNCTIONS[fn](agent, g, policy, cfg)
    if fn == "sce":
        return DecisionValue.finite(out) if math.isfinite(out) else DecisionValue.MINUS_INF
    return out


__all__ = [
    "SolverConfig", "DEFAULT_SOLVER", "f_ar", "f_ca", "f_ce", "f_rp", "f_sce",
    "f_ar_m", "f_ca_m", "f_ce_m", "f_rp_m", "to_additive", "evaluate",
    "FUNCTIONS", "MULTIPLICATIVE",
]
