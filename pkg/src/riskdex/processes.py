"""Catalog of one-dimensional Ito processes and their increments g_t = P_t - P_0.

GBM, arithmetic Brownian motion and Ornstein-Uhlenbeck have exact marginals.
CIR is simulated with full-truncation Euler-Maruyama. A compound Poisson
process (pure jumps) is included as the discontinuous contrast case.
"""
from __future__ import annotations

import json
import math
import struct
import zlib
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from typing import Any, ClassVar

import numpy as np
from scipy.optimize import brentq
from scipy.special import gammainc, log_ndtr

from .core import Discrete, Empirical, Gamble, Normal, ShiftedLogNormal
from .errors import InvalidGamble, NotYetAGamble, UnsupportedHorizon

TAIL_MASS = 1e-12
EULER_STEPS = 1024
CIR_PATHS = 2**17


class Process:
    """Common interface: initial drift mu0, initial diffusion sigma0, horizon t_max."""

    kind: ClassVar[str] = ""
    exact: ClassVar[bool] = True

    @property
    def mu0(self) -> float:
        raise NotImplementedError

    @property
    def sigma0(self) -> float:
        raise NotImplementedError

    @property
    def t_max(self) -> float:
        return math.inf

    @property
    def lower_bound(self) -> float:
        """Lower bound of g_t (-inf when unbounded)."""
        return -math.inf

    def drift(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def diffusion(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    @property
    def start(self) -> float:
        return 0.0

    def exact_marginal(self, t: float):
        raise NotImplementedError

    def to_json(self) -> dict[str, Any]:
        return {"kind": self.kind, **asdict(self)}

    def key(self) -> int:
        return zlib.crc32(json.dumps(self.to_json(), sort_keys=True).encode())

    def _check_initial(self):
        if not (self.mu0 > 0 and self.sigma0 > 0):
            raise ValueError(f"{self.kind}: initial drift and diffusion must be positive "
                             f"(mu0={self.mu0}, sigma0={self.sigma0})")


@dataclass(frozen=True)
class GBM(Process):
    """dP = mu P dt + sigma P dW with P(0) = p0."""

    p0: float
    mu: float
    sigma: float
    kind: ClassVar[str] = "gbm"

    def __post_init__(self):
        if not (self.p0 > 0 and self.sigma > 0):
            raise ValueError("GBM requires p0 > 0 and sigma > 0")
        self._check_initial()

    mu0 = property(lambda self: self.p0 * self.mu)
    sigma0 = property(lambda self: self.p0 * self.sigma)
    lower_bound = property(lambda self: -self.p0)
    start = property(lambda self: self.p0)

    def drift(self, x):
        return self.mu * x

    def diffusion(self, x):
        return self.sigma * x

    def exact_marginal(self, t):
        return ShiftedLogNormal.gbm(self.p0, self.mu, self.sigma, t)


@dataclass(frozen=True)
class ArithmeticBM(Process):
    """dP = mu0 dt + sigma0 dW.

    ``floor`` (negative, optional) declares a lower bound for g_t. It is
    honoured by limiting the horizon: t_max is the largest t at which the
    normal marginal puts less than 1e-12 mass below the floor, so the exact
    normal law is used unchanged wherever it is offered.
    """

    mu_0: float
    sigma_0: float
    floor: float | None = None
    kind: ClassVar[str] = "abm"

    def __post_init__(self):
        if self.floor is not None and not self.floor < 0:
            raise ValueError("ABM floor must be negative")
        self._check_initial()

    mu0 = property(lambda self: self.mu_0)
    sigma0 = property(lambda self: self.sigma_0)

    @property
    def lower_bound(self):
        return -math.inf if self.floor is None else self.floor

    @property
    def t_max(self):
        return _abm_horizon(self.mu_0, self.sigma_0, self.floor)

    def drift(self, x):
        return np.full_like(x, self.mu_0)

    def diffusion(self, x):
        return np.full_like(x, self.sigma_0)

    def exact_marginal(self, t):
        return Normal(self.mu_0 * t, self.sigma_0 * math.sqrt(t))


@lru_cache(maxsize=64)
def _abm_horizon(mu0: float, sigma0: float, floor: float | None) -> float:
    if floor is None:
        return math.inf

    def excess(log_t: float) -> float:
        t = math.exp(log_t)
        return float(log_ndtr((floor - mu0 * t) / (sigma0 * math.sqrt(t)))) - math.log(TAIL_MASS)

    # the mass below the floor first rises with t, then falls once the drift
    # outruns diffusion; we take the first crossing, which is conservative
    lo = math.log(1e-12)
    if excess(lo) >= 0:
        return 0.0
    grid = np.linspace(lo, math.log(1e6), 400)
    for a, b in zip(grid[:-1], grid[1:]):
        if excess(b) >= 0:
            return math.exp(brentq(excess, a, b))
    return math.inf


@dataclass(frozen=True)
class OU(Process):
    """dX = kappa (theta - X) dt + sigma dW, X(0) = x0; g_t = X_t - x0."""

    kappa: float
    theta: float
    sigma: float
    x0: float
    kind: ClassVar[str] = "ou"

    def __post_init__(self):
        if not (self.kappa > 0 and self.sigma > 0):
            raise ValueError("OU requires kappa > 0 and sigma > 0")
        self._check_initial()

    mu0 = property(lambda self: self.kappa * (self.theta - self.x0))
    sigma0 = property(lambda self: self.sigma)
    start = property(lambda self: self.x0)

    def drift(self, x):
        return self.kappa * (self.theta - x)

    def diffusion(self, x):
        return np.full_like(x, self.sigma)

    def exact_marginal(self, t):
        decay = -math.expm1(-self.kappa * t)
        var = self.sigma**2 * -math.expm1(-2.0 * self.kappa * t) / (2.0 * self.kappa)
        return Normal((self.theta - self.x0) * decay, math.sqrt(var))


@dataclass(frozen=True)
class CIR(Process):
    """dX = kappa (theta - X) dt + sigma sqrt(X) dW, X(0) = x0 > 0; g_t = X_t - x0.

    The Feller condition 2 kappa theta >= sigma^2 is required so zero is
    unattainable. g_t is bounded below by -x0.
    """

    kappa: float
    theta: float
    sigma: float
    x0: float
    kind: ClassVar[str] = "cir"
    exact: ClassVar[bool] = False

    def __post_init__(self):
        if not (self.kappa > 0 and self.theta > 0 and self.sigma > 0 and self.x0 > 0):
            raise ValueError("CIR requires positive kappa, theta, sigma, x0")
        if 2.0 * self.kappa * self.theta < self.sigma**2:
            raise ValueError("CIR parameters violate the Feller condition 2 kappa theta >= sigma^2")
        self._check_initial()

    mu0 = property(lambda self: self.kappa * (self.theta - self.x0))
    sigma0 = property(lambda self: self.sigma * math.sqrt(self.x0))
    lower_bound = property(lambda self: -self.x0)
    start = property(lambda self: self.x0)

    def drift(self, x):
        return self.kappa * (self.theta - x)

    def diffusion(self, x):
        return self.sigma * np.sqrt(np.maximum(x, 0.0))

    def mean_increment(self, t: float) -> float:
        return (self.theta - self.x0) * -math.expm1(-self.kappa * t)

    def variance_increment(self, t: float) -> float:
        e1 = math.exp(-self.kappa * t)
        return (self.x0 * self.sigma**2 / self.kappa * e1 * -math.expm1(-self.kappa * t)
                + self.theta * self.sigma**2 / (2.0 * self.kappa) * math.expm1(-self.kappa * t) ** 2)


PROCESS_KINDS: dict[str, type] = {"gbm": GBM, "abm": ArithmeticBM, "ou": OU, "cir": CIR}


def process_from_json(obj: dict[str, Any]) -> Process:
    kind = str(obj.get("kind", "")).lower()
    if kind == "gbm":
        return GBM(float(obj["p0"]), float(obj["mu"]), float(obj["sigma"]))
    if kind == "abm":
        floor = obj.get("floor")
        return ArithmeticBM(float(obj.get("mu_0", obj.get("mu0"))),
                            float(obj.get("sigma_0", obj.get("sigma0"))),
                            None if floor is None else float(floor))
    if kind in ("ou", "cir"):
        x0 = obj.get("x0", obj.get("start"))
        return PROCESS_KINDS[kind](float(obj["kappa"]), float(obj["theta"]),
                                   float(obj["sigma"]), float(x0))
    raise ValueError(f"unknown process kind {kind!r}")


# ---------------------------------------------------------------------------
# marginals
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MarginalAtT:
    """Law of g_t: exact distribution, or a sample set with its provenance."""

    t: float
    dist: Normal | ShiftedLogNormal | Empirical
    scheme: str  # "exact" | "euler"
    n_paths: int = 0
    seed: int | None = None
    meta: dict[str, Any] = field(default_factory=dict)

    def provenance(self) -> dict[str, Any]:
        out: dict[str, Any] = {"scheme": self.scheme}
        if self.scheme != "exact":
            out.update(n_paths=self.n_paths, seed=self.seed, steps=EULER_STEPS, **self.meta)
        return out


def _stream(seed: int, process: Process, t: float) -> np.random.Generator:
    """Counter-based generator keyed by (seed, process, horizon)."""
    t_bits = struct.unpack("<Q", struct.pack("<d", float(t)))[0]
    ss = np.random.SeedSequence([int(seed) & 0xFFFFFFFF, process.key(), t_bits & 0xFFFFFFFF, t_bits >> 32])
    return np.random.Generator(np.random.Philox(ss))


def simulate_euler(process: Process, t: float, n_paths: int = CIR_PATHS,
                   n_steps: int = EULER_STEPS, seed: int = 0) -> np.ndarray:
    """Euler-Maruyama increments g_t with antithetic Brownian paths.

    The state is floored at zero inside the square root (full truncation) for
    CIR, and the drift uses the same truncated state.
    """
    if not t > 0:
        raise ValueError("t must be positive")
    rng = _stream(seed, process, t)
    half = n_paths // 2
    dt = t / n_steps
    sq = math.sqrt(dt)
    x0 = process.start
    # paths [0, half) use dW, paths [half, 2 half) use -dW
    xp = np.full(half, x0, dtype=float)
    xm = np.full(half, x0, dtype=float)
    dw = np.empty(half)
    truncate = isinstance(process, CIR)
    for _ in range(n_steps):
        rng.standard_normal(out=dw)
        dw *= sq
        for x, sign in ((xp, 1.0), (xm, -1.0)):
            xs = np.maximum(x, 0.0) if truncate else x
            x += process.drift(xs) * dt + sign * process.diffusion(xs) * dw
    return np.concatenate([xp, xm]) - x0


def marginal(process: Process, t: float, seed: int = 0, n_paths: int = CIR_PATHS) -> MarginalAtT:
    if not t > 0:
        raise ValueError("t must be positive")
    if t > process.t_max:
        raise UnsupportedHorizon(f"t={t} exceeds t_max={process.t_max:.6g} for {process.kind}")
    if process.exact:
        return MarginalAtT(t, process.exact_marginal(t), "exact")
    return _cir_marginal(process, t, seed, n_paths)


@lru_cache(maxsize=256)
def _cir_marginal(process: CIR, t: float, seed: int, n_paths: int) -> MarginalAtT:
    raw = simulate_euler(process, t, n_paths, EULER_STEPS, seed)
    # Control variate: the conditional mean is known in closed form, so the
    # sample is recentred on it. This removes the O(1/sqrt(n t)) noise that
    # would otherwise swamp the drift at small t.
    shift = process.mean_increment(t) - float(np.mean(raw))
    samples = np.maximum(raw + shift, process.lower_bound)
    return MarginalAtT(t, Empirical(samples), "euler", n_paths, seed,
                       {"mean_shift": shift, "mean_matched": True})


def gamble_at(process: Process, t: float, seed: int = 0, n_paths: int = CIR_PATHS) -> Gamble:
    """g_t as a Gamble; NotYetAGamble when its mean is not positive or it cannot lose."""
    m = marginal(process, t, seed, n_paths)
    try:
        return Gamble(m.dist)
    except InvalidGamble as exc:
        raise NotYetAGamble(f"g_t at t={t} is not a gamble: {exc}") from exc


# ---------------------------------------------------------------------------
# compound Poisson
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CompoundPoisson:
    """Jumps arriving at rate lam with i.i.d. sizes drawn from ``jumps``."""

    lam: float
    jumps: Discrete
    kind: ClassVar[str] = "compound_poisson"

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError("jump rate must be positive")
        if isinstance(self.jumps, Gamble):
            object.__setattr__(self, "jumps", self.jumps.dist)
        if not isinstance(self.jumps, Discrete):
            raise TypeError("jump sizes must be a discrete distribution")

    def to_json(self) -> dict[str, Any]:
        return {"kind": self.kind, "lam": self.lam, "jumps": self.jumps.to_json()}


MAX_JUMPS = 3


def _convolve(a: Discrete, b: Discrete) -> tuple[np.ndarray, np.ndarray]:
    v = np.add.outer(np.asarray(a.values), np.asarray(b.values)).ravel()
    p = np.multiply.outer(np.asarray(a.probs), np.asarray(b.probs)).ravel()
    return v, p


def _merge(values: np.ndarray, probs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    uniq, inv = np.unique(np.round(values, 14), return_inverse=True)
    out = np.zeros(uniq.size)
    np.add.at(out, inv, probs)
    return uniq, out


def cp_marginal_with_bound(cp: CompoundPoisson, t: float) -> tuple[Gamble, float]:
    """Exact law of the jump total up to three jumps; the 3-jump atom absorbs
    all higher counts. Returns the gamble and a bound on the absorbed mass."""
    x = cp.lam * t
    if not x > 0:
        raise NotYetAGamble("no jumps can have occurred at t = 0")
    weights = [math.exp(-x) * x**k / math.factorial(k) for k in range(MAX_JUMPS)]
    weights.append(float(gammainc(MAX_JUMPS, x)))  # P[N >= 3]
    tail_bound = x ** (MAX_JUMPS + 1) / math.factorial(MAX_JUMPS + 1)

    values = [np.zeros(1)]
    probs = [np.array([weights[0]])]
    cur = cp.jumps
    for k in range(1, MAX_JUMPS + 1):
        if k > 1:
            v, p = _merge(*_convolve(cur, cp.jumps))
            cur = Discrete(tuple(v), tuple(p / p.sum()))
        values.append(np.asarray(cur.values))
        probs.append(weights[k] * np.asarray(cur.probs))
    v, p = _merge(np.concatenate(values), np.concatenate(probs))
    p = p / math.fsum(p)
    try:
        return Gamble(Discrete(tuple(v), tuple(p))), tail_bound
    except InvalidGamble as exc:
        raise NotYetAGamble(f"jump total at t={t} is not a gamble: {exc}") from exc


def cp_marginal(cp: CompoundPoisson, t: float) -> Gamble:
    return cp_marginal_with_bound(cp, t)[0]


def t_grid(t0: float = 0.1, k: int = 14) -> np.ndarray:
    """Geometric grid t0 * 2**-j for j = 0..k (decreasing)."""
    if not t0 > 0 or k < 0:
        raise ValueError("t0 must be positive and k non-negative")
    return t0 * 2.0 ** -np.arange(k + 1)


__all__ = [
    "Process", "GBM", "ArithmeticBM", "OU", "CIR", "CompoundPoisson", "MarginalAtT",
    "marginal", "gamble_at", "simulate_euler", "cp_marginal", "cp_marginal_with_bound",
    "process_from_json", "t_grid", "EULER_STEPS", "CIR_PATHS",
]
