"""Expected utility E[u(w + alpha g)] and its alpha-derivative.

Both quantities are computed in a normalised, cancellation-free form:

    E[u(w + a g)] = u(w) + u'(w) * (a E[g] + E[Rl(a g)])
    d/da E[...]   = u'(w) * (E[g] + E[g (u'(w + a g)/u'(w) - 1)])

where Rl(d) = (u(w+d) - u(w))/u'(w) - d. Both remainders are one-signed
(non-positive) for concave u, so quadrature tolerances are meaningful in
relative terms even when the gamble is tiny.
"""
from __future__ import annotations

import math
import zlib
from dataclasses import asdict, dataclass
from functools import lru_cache
from typing import Any, Callable

import numpy as np
from numpy.polynomial.hermite import hermgauss
from numpy.polynomial.legendre import leggauss
from scipy.special import ndtr

from .core import Agent, Discrete, Empirical, Gamble
from .errors import NonFinite, SupportOutsideDomain

METHODS = ("exact_sum", "gauss_hermite", "adaptive", "monte_carlo")


@dataclass(frozen=True)
class IntegrationPolicy:
    method: str = "auto"
    n: int = 128
    abs_tol: float = 1e-10
    rel_tol: float = 1e-10
    n_samples: int = 100_000
    seed: int = 0
    truncation_z: float = 12.0
    tail_mass: float = 1e-12

    def __post_init__(self):
        if self.method not in METHODS + ("auto",):
            raise ValueError(f"unknown integration method {self.method!r}")
        if not 16 <= self.n <= 512 or self.n % 2:
            raise ValueError("Gauss-Hermite node count must be even and lie in [16, 512]")
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ValueError("quadrature tolerances must be positive")
        if self.n_samples < 10_000:
            raise ValueError("Monte Carlo needs at least 1e4 samples")

    @classmethod
    def from_json(cls, obj: dict[str, Any] | None) -> "IntegrationPolicy":
        if not obj:
            return cls()
        known = {k: obj[k] for k in cls.__dataclass_fields__ if k in obj}
        return cls(**known)

    def to_json(self) -> dict[str, Any]:
        return asdict(self)


AUTO = IntegrationPolicy()


def resolve_method(agent: Agent, g: Gamble, policy: IntegrationPolicy | None = None) -> str:
    """Concrete method the policy implies for this agent/gamble pair."""
    policy = policy or AUTO
    dist = g.dist
    if isinstance(dist, Discrete):
        return "exact_sum"
    if isinstance(dist, Empirical):
        return "monte_carlo"
    if policy.method in ("gauss_hermite", "adaptive", "monte_carlo"):
        return policy.method
    lo, hi = agent.utility.domain
    return "gauss_hermite" if (math.isinf(lo) and math.isinf(hi)) else "adaptive"


# ---------------------------------------------------------------------------
# quadrature primitives
# ---------------------------------------------------------------------------


@lru_cache(maxsize=16)
def _gh_standard_normal(n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = hermgauss(n)
    return math.sqrt(2.0) * x, w / math.sqrt(math.pi)


_GL20 = leggauss(20)
_GL10 = leggauss(10)


def adaptive_quad(f: Callable[[np.ndarray], np.ndarray], a: float, b: float,
                  abs_tol: float, rel_tol: float, init_panels: int = 8,
                  max_rounds: int = 40) -> tuple[float, float]:
    """Vectorised adaptive Gauss-Legendre (20 vs 10 nodes per panel).

    Returns (integral, error estimate).
    """
    if b <= a:
        return 0.0, 0.0
    width = b - a
    edges = np.linspace(a, b, init_panels + 1)
    lo, hi = edges[:-1], edges[1:]
    acc, acc_err = 0.0, 0.0
    for _ in range(max_rounds):
        mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
        x20 = mid[:, None] + half[:, None] * _GL20[0][None, :]
        x10 = mid[:, None] + half[:, None] * _GL10[0][None, :]
        i20 = half * (f(x20.ravel()).reshape(x20.shape) @ _GL20[1])
        i10 = half * (f(x10.ravel()).reshape(x10.shape) @ _GL10[1])
        err = np.abs(i20 - i10)
        total = acc + float(i20.sum())
        tol = max(abs_tol, rel_tol * abs(total))
        ok = err <= tol * (2.0 * half) / width
        acc += float(i20[ok].sum())
        acc_err += float(err[ok].sum())
        if ok.all():
            return acc, acc_err
        lo_bad, hi_bad = lo[~ok], hi[~ok]
        m = 0.5 * (lo_bad + hi_bad)
        lo = np.concatenate([lo_bad, m])
        hi = np.concatenate([m, hi_bad])
    return acc + float(i20[~ok].sum()), acc_err + float(err[~ok].sum())


def _op_stream(seed: int, label: str) -> np.random.Generator:
    return np.random.default_rng([int(seed) & 0xFFFFFFFF, zlib.crc32(label.encode())])


# ---------------------------------------------------------------------------
# remainder integrands
# ---------------------------------------------------------------------------


def _remainder(agent: Agent, x: np.ndarray, alpha: float, which: str) -> np.ndarray:
    u, w = agent.utility, agent.wealth
    d = alpha * x
    if which == "level":
        return u.du_scaled(w, d) - d
    return x * (u.u1_ratio(w, d) - 1.0)


def _z_limits(agent: Agent, dist, alpha: float, policy: IntegrationPolicy) -> tuple[float, float]:
    """Standard-normal interval on which w + alpha*G(z) stays inside the domain."""
    lo, hi = agent.utility.domain
    w = agent.wealth
    zmax = policy.truncation_z
    z_lo, z_hi = -zmax, zmax
    if not math.isinf(lo):
        zc = dist.inverse((lo - w) / alpha)
        if zc > -zmax:
            if ndtr(zc) >= policy.tail_mass:
                raise SupportOutsideDomain(
                    f"P[w + a g <= {lo}] = {ndtr(zc):.3g} exceeds {policy.tail_mass:g}")
            z_lo = math.nextafter(zc, math.inf) + 1e-12 * max(1.0, abs(zc))
    if not math.isinf(hi):
        zc = dist.inverse((hi - w) / alpha)
        if zc < zmax:
            if ndtr(-zc) >= policy.tail_mass:
                raise SupportOutsideDomain(
                    f"P[w + a g >= {hi}] = {ndtr(-zc):.3g} exceeds {policy.tail_mass:g}")
            z_hi = math.nextafter(zc, -math.inf) - 1e-12 * max(1.0, abs(zc))
    return z_lo, z_hi


def feasible_alpha_max(agent: Agent, g: Gamble, policy: IntegrationPolicy | None = None) -> float:
    """Largest alpha for which the (truncated) support of w + alpha g fits the domain."""
    policy = policy or AUTO
    lo, hi = agent.utility.domain
    w = agent.wealth
    dist = g.dist
    if isinstance(dist, (Discrete, Empirical)):
        g_lo, g_hi = dist.support_bounds()
    else:
        zq = -_tail_quantile(policy.tail_mass)
        g_lo = float(dist.transform(max(zq, -policy.truncation_z)))
        g_hi = float(dist.transform(min(-zq, policy.truncation_z)))
    a_max = math.inf
    if not math.isinf(lo) and g_lo < 0:
        a_max = min(a_max, (w - lo) / -g_lo)
    if not math.isinf(hi) and g_hi > 0:
        a_max = min(a_max, (hi - w) / g_hi)
    return a_max


@lru_cache(maxsize=8)
def _tail_quantile(mass: float) -> float:
    from scipy.special import ndtri

    return float(-ndtri(mass))


_Z_STEP = 8.0
_Z_HARD = 36.0  # phi(36) ~ 1e-282, still a normal double


def _phi(z):
    return np.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)


def _adaptive_normal(integrand, z_lo: float, z_hi: float, policy: IntegrationPolicy) -> float:
    """Integral of integrand(z) phi(z) over [z_lo, z_hi].

    An end that was not cut by the utility domain is pushed outwards while the
    integrand still carries weight there: a utility that tilts the normal
    density (CARA with large rho * sigma) moves the mass beyond the usual
    +-12 window, even though the probability out there is negligible.
    """
    zmax = policy.truncation_z
    open_lo, open_hi = z_lo <= -zmax, z_hi >= zmax

    def f(z):
        return _phi(z) * integrand(z)

    while True:
        v, _ = adaptive_quad(f, z_lo, z_hi, policy.abs_tol, policy.rel_tol)
        tol = max(policy.abs_tol, policy.rel_tol * abs(v))
        grow_lo = open_lo and z_lo > -_Z_HARD and abs(float(f(np.array([z_lo]))[0])) > tol
        grow_hi = open_hi and z_hi < _Z_HARD and abs(float(f(np.array([z_hi]))[0])) > tol
        if not (grow_lo or grow_hi):
            return v
        if grow_lo:
            z_lo = max(z_lo - _Z_STEP, -_Z_HARD)
        if grow_hi:
            z_hi = min(z_hi + _Z_STEP, _Z_HARD)


def remainder_mean(agent: Agent, g: Gamble, alpha: float, which: str = "level",
                   policy: IntegrationPolicy | None = None) -> tuple[float, float]:
    """E of the level/slope remainder at allocation alpha; returns (value, std error)."""
    policy = policy or AUTO
    if alpha < 0:
        raise ValueError("alpha must be non-negative")
    if alpha == 0:
        return 0.0, 0.0
    dist = g.dist
    method = resolve_method(agent, g, policy)
    with np.errstate(over="ignore", invalid="ignore"):
        if isinstance(dist, (Discrete, Empirical)):
            if isinstance(dist, Discrete):
                x = np.asarray(dist.values)
                p = np.asarray(dist.probs)
                live = p > 0
                x, p = x[live], p[live]
            else:
                x = dist.samples
                p = None
            if not np.all(agent.utility.in_domain(agent.wealth + alpha * x)):
                raise SupportOutsideDomain("an outcome of w + alpha g leaves the utility domain")
            r = _remainder(agent, x, alpha, which)
            if p is None:
                val = float(np.mean(r))
                se = float(np.std(r) / math.sqrt(r.size))
            else:
                val, se = float(np.dot(p, r)), 0.0
        else:
            scale = alpha * (g.variance + g.mean**2)
            if which == "level":
                scale *= alpha

            def integrand(z):
                return _remainder(agent, dist.transform(z), alpha, which) / scale

            z_lo, z_hi = _z_limits(agent, dist, alpha, policy)
            if method == "gauss_hermite":
                zmax = policy.truncation_z
                nodes, weights = _gh_standard_normal(policy.n)
                outer = dist.transform(nodes[[0, -1]])
                if (z_lo > -zmax or z_hi < zmax
                        or not np.all(agent.utility.in_domain(agent.wealth + alpha * outer))):
                    method = "adaptive"  # the domain cuts the normal range or the node span
                else:
                    v_full = float(weights @ integrand(nodes))
                    # self-check against half the nodes: a strongly tilted
                    # integrand (e.g. exp(-rho sigma z) with rho sigma large)
                    # is under-resolved by a fixed rule
                    n_half, w_half = _gh_standard_normal(policy.n // 2)
                    v_half = float(w_half @ integrand(n_half))
                    if abs(v_full - v_half) <= max(policy.abs_tol, policy.rel_tol * abs(v_full)):
                        val, se = v_full * scale, 0.0
                    else:
                        method = "adaptive"
            if method == "adaptive":
                v = _adaptive_normal(integrand, z_lo, z_hi, policy)
                val, se = v * scale, 0.0
            elif method == "monte_carlo":
                rng = _op_stream(policy.seed, "expectation")
                half = rng.standard_normal(policy.n_samples // 2)
                # draws beyond the domain cut carry < tail_mass probability
                pair = 0.5 * (integrand(np.clip(half, z_lo, z_hi))
                              + integrand(np.clip(-half, z_lo, z_hi)))
                val = float(np.mean(pair)) * scale
                se = float(np.std(pair) / math.sqrt(pair.size)) * scale
    if not math.isfinite(val):
        raise NonFinite(f"expected-utility integrand is not finite at alpha={alpha}")
    return val, se


# ---------------------------------------------------------------------------
# public operations
# ---------------------------------------------------------------------------


def scaled_gain(agent: Agent, g: Gamble, alpha: float, policy: IntegrationPolicy | None = None) -> float:
    """(E[u(w + alpha g)] - u(w)) / u'(w)."""
    r, _ = remainder_mean(agent, g, alpha, "level", policy)
    return alpha * g.mean + r


def scaled_slope(agent: Agent, g: Gamble, alpha: float, policy: IntegrationPolicy | None = None) -> float:
    """E[g u'(w + alpha g)] / u'(w)."""
    r, _ = remainder_mean(agent, g, alpha, "slope", policy)
    return g.mean + r


def expected_utility(agent: Agent, g: Gamble, alpha: float = 1.0,
                     policy: IntegrationPolicy | None = None) -> float:
    u, w = agent.utility, agent.wealth
    return float(u.u(w)) + float(u.u1(w)) * scaled_gain(agent, g, alpha, policy)


def expected_utility_with_error(agent: Agent, g: Gamble, alpha: float = 1.0,
                                policy: IntegrationPolicy | None = None) -> tuple[float, float]:
    """Expected utility plus its Monte Carlo standard error (0 for deterministic rules)."""
    u, w = agent.utility, agent.wealth
    r, se = remainder_mean(agent, g, alpha, "level", policy)
    u1 = float(u.u1(w))
    return float(u.u(w)) + u1 * (alpha * g.mean + r), u1 * se


def expected_utility_dalpha(agent: Agent, g: Gamble, alpha: float,
                            policy: IntegrationPolicy | None = None) -> float:
    return float(agent.utility.u1(agent.wealth)) * scaled_slope(agent, g, alpha, policy)


def provenance(agent: Agent, g: Gamble, policy: IntegrationPolicy | None = None) -> dict[str, Any]:
    policy = policy or AUTO
    method = resolve_method(agent, g, policy)
    out: dict[str, Any] = {"method": method}
    if method == "gauss_hermite":
        out["nodes"] = policy.n
    elif method == "adaptive":
        out.update(abs_tol=policy.abs_tol, rel_tol=policy.rel_tol)
    elif method == "monte_carlo":
        if isinstance(g.dist, Empirical):
            out["n"] = int(g.dist.samples.size)
            out["mean_se"] = float(np.std(g.dist.samples) / math.sqrt(g.dist.samples.size))
        else:
            out.update(n=policy.n_samples, seed=policy.seed)
    return out


__all__ = [
    "IntegrationPolicy", "expected_utility", "expected_utility_dalpha",
    "expected_utility_with_error", "scaled_gain", "scaled_slope", "remainder_mean",
    "feasible_alpha_max", "adaptive_quad", "resolve_method", "provenance",
]
