"""Domain types: utilities, agents, return distributions, gambles, decision values.

Everything here is immutable after construction. Utilities are evaluated in a
wealth-normalised form (increments divided by marginal utility at the base
wealth) so that small-gamble quantities are computed without cancellation
against the absolute utility level.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, ClassVar, Iterable, Sequence

import numpy as np

from .errors import DomainError, InvalidGamble

CONCAVITY_EPS = 1e-10
QUADRATIC_BLISS_MARGIN = 1e-9
MIN_EMPIRICAL_SAMPLES = 100
PROB_SUM_TOL = 1e-12


# ---------------------------------------------------------------------------
# Utilities
# ---------------------------------------------------------------------------


class Utility:
    """Base class for strictly increasing, strictly concave utilities.

    Subclasses provide ``u``, ``u1`` (first derivative) and ``u2`` (second
    derivative) on the open interval ``domain``. Evaluating outside the
    domain raises :class:`DomainError`.
    """

    kind: ClassVar[str] = "abstract"
    closed_domain: ClassVar[bool] = False

    @property
    def domain(self) -> tuple[float, float]:
        return (-math.inf, math.inf)

    def in_domain(self, x) -> np.ndarray:
        lo, hi = self.domain
        x = np.asarray(x, dtype=float)
        if self.closed_domain:
            return (x >= lo) & (x <= hi)
        return (x > lo) & (x < hi)

    def check(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if not np.all(self.in_domain(x)):
            lo, hi = self.domain
            raise DomainError(f"{self.kind}: wealth outside domain ({lo}, {hi})")
        return x

    def u(self, x):
        raise NotImplementedError

    def u1(self, x):
        raise NotImplementedError

    def u2(self, x):
        raise NotImplementedError

    def absolute_risk_aversion(self, x):
        x = self.check(x)
        return -self.u2(x) / self.u1(x)

    # Normalised increments. Subclasses override with closed forms that stay
    # accurate for small d.
    def du_scaled(self, w: float, d):
        """(u(w + d) - u(w)) / u'(w)."""
        d = np.asarray(d, dtype=float)
        return (self.u(w + d) - self.u(w)) / self.u1(w)

    def u1_ratio(self, w: float, d):
        """u'(w + d) / u'(w)."""
        d = np.asarray(d, dtype=float)
        return self.u1(w + d) / self.u1(w)

    def to_json(self) -> dict[str, Any]:
        raise NotImplementedError


@dataclass(frozen=True)
class CARA(Utility):
    """u(x) = 1 - exp(-rho x)."""

    rho: float
    kind: ClassVar[str] = "cara"

    def __post_init__(self):
        if not self.rho > 0:
            raise ValueError("CARA requires rho > 0")

    def u(self, x):
        x = self.check(x)
        return -np.expm1(-self.rho * x)

    def u1(self, x):
        x = self.check(x)
        return self.rho * np.exp(-self.rho * x)

    def u2(self, x):
        x = self.check(x)
        return -self.rho**2 * np.exp(-self.rho * x)

    def absolute_risk_aversion(self, x):
        x = self.check(x)
        return np.full_like(x, self.rho, dtype=float)

    def du_scaled(self, w, d):
        d = np.asarray(d, dtype=float)
        return -np.expm1(-self.rho * d) / self.rho

    def u1_ratio(self, w, d):
        return np.exp(-self.rho * np.asarray(d, dtype=float))

    def to_json(self):
        return {"kind": "cara", "rho": self.rho}


@dataclass(frozen=True)
class Log(Utility):
    """u(x) = ln x on (0, inf)."""

    kind: ClassVar[str] = "log"

    @property
    def domain(self):
        return (0.0, math.inf)

    def u(self, x):
        return np.log(self.check(x))

    def u1(self, x):
        return 1.0 / self.check(x)

    def u2(self, x):
        x = self.check(x)
        return -1.0 / x**2

    def absolute_risk_aversion(self, x):
        return 1.0 / self.check(x)

    def du_scaled(self, w, d):
        self.check(w)
        d = np.asarray(d, dtype=float)
        self.check(w + d)
        return w * np.log1p(d / w)

    def u1_ratio(self, w, d):
        self.check(w)
        d = np.asarray(d, dtype=float)
        self.check(w + d)
        return 1.0 / (1.0 + d / w)

    def to_json(self):
        return {"kind": "log"}


@dataclass(frozen=True)
class CRRA(Utility):
    """u(x) = x^(1-gamma) / (1-gamma) on (0, inf); gamma = 1 is log."""

    gamma: float
    kind: ClassVar[str] = "crra"

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError("CRRA requires gamma > 0")

    @property
    def domain(self):
        return (0.0, math.inf)

    def u(self, x):
        x = self.check(x)
        if self.gamma == 1.0:
            return np.log(x)
        return x ** (1.0 - self.gamma) / (1.0 - self.gamma)

    def u1(self, x):
        return self.check(x) ** (-self.gamma)

    def u2(self, x):
        x = self.check(x)
        return -self.gamma * x ** (-self.gamma - 1.0)

    def absolute_risk_aversion(self, x):
        return self.gamma / self.check(x)

    def du_scaled(self, w, d):
        self.check(w)
        d = np.asarray(d, dtype=float)
        self.check(w + d)
        lp = np.log1p(d / w)
        if self.gamma == 1.0:
            return w * lp
        return w * np.expm1((1.0 - self.gamma) * lp) / (1.0 - self.gamma)

    def u1_ratio(self, w, d):
        self.check(w)
        d = np.asarray(d, dtype=float)
        self.check(w + d)
        return np.exp(-self.gamma * np.log1p(d / w))

    def to_json(self):
        return {"kind": "crra", "gamma": self.gamma}


@dataclass(frozen=True)
class Quadratic(Utility):
    """u(x) = x - b x^2 / 2, capped just below the bliss point 1/b."""

    b: float
    kind: ClassVar[str] = "quadratic"

    def __post_init__(self):
        if not self.b > 0:
            raise ValueError("Quadratic requires b > 0")

    @property
    def domain(self):
        return (-math.inf, 1.0 / self.b - QUADRATIC_BLISS_MARGIN)

    def u(self, x):
        x = self.check(x)
        return x - 0.5 * self.b * x**2

    def u1(self, x):
        return 1.0 - self.b * self.check(x)

    def u2(self, x):
        x = self.check(x)
        return np.full_like(x, -self.b, dtype=float)

    def absolute_risk_aversion(self, x):
        x = self.check(x)
        return self.b / (1.0 - self.b * x)

    def du_scaled(self, w, d):
        self.check(w)
        d = np.asarray(d, dtype=float)
        self.check(w + d)
        return d - 0.5 * self.b * d**2 / (1.0 - self.b * w)

    def u1_ratio(self, w, d):
        self.check(w)
        d = np.asarray(d, dtype=float)
        self.check(w + d)
        return 1.0 - self.b * d / (1.0 - self.b * w)

    def to_json(self):
        return {"kind": "quadratic", "b": self.b}


@dataclass(frozen=True, eq=False)
class Tabulated(Utility):
    """Utility sampled at increasing wealth levels.

    Interpolated by a C1 shape-preserving quadratic spline with one extra
    knot per interval (Schumaker construction). For strictly increasing,
    strictly concave samples the interpolant has u' > 0 everywhere and a
    piecewise-constant u'' < 0.
    """

    x: tuple[float, ...]
    y: tuple[float, ...]
    kind: ClassVar[str] = "tabulated"
    closed_domain: ClassVar[bool] = True
    _knots: np.ndarray = field(init=False, repr=False)
    _coef: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=float)
        object.__setattr__(self, "x", tuple(float(v) for v in x.ravel()))
        object.__setattr__(self, "y", tuple(float(v) for v in y.ravel()))
        if x.ndim != 1 or x.shape != y.shape or x.size < 3:
            raise ValueError("Tabulated needs >= 3 matching samples")
        h = np.diff(x)
        if np.any(h <= 0):
            raise ValueError("Tabulated x must be strictly increasing")
        s = np.diff(y) / h
        if np.any(s <= 0):
            raise ValueError("Tabulated samples must be strictly increasing")
        if np.any(np.diff(s) > -CONCAVITY_EPS):
            raise ValueError("Tabulated samples fail the concavity margin")

        n = x.size
        d = np.empty(n)
        d[1:-1] = (s[:-1] * h[1:] + s[1:] * h[:-1]) / (h[:-1] + h[1:])
        d[0] = s[0] + 0.5 * (s[0] - s[1])
        d[-1] = s[-1] - min(0.5 * (s[-2] - s[-1]), 0.5 * s[-1])

        knots, coef = [], []
        for i in range(n - 1):
            a_gap = d[i] - s[i]
            b_gap = s[i] - d[i + 1]
            lam = b_gap / (a_gap + b_gap)
            xi = x[i] + lam * h[i]
            y_xi = y[i] + lam * h[i] * 0.5 * (d[i] + s[i])
            knots += [x[i], xi]
            coef.append((y[i], d[i], (s[i] - d[i]) / (2.0 * lam * h[i])))
            coef.append((y_xi, s[i], (d[i + 1] - s[i]) / (2.0 * (1.0 - lam) * h[i])))
        object.__setattr__(self, "_knots", np.asarray(knots))
        object.__setattr__(self, "_coef", np.asarray(coef))

    @property
    def domain(self):
        return (float(self.x[0]), float(self.x[-1]))

    def _piece(self, x):
        x = self.check(x)
        k = np.clip(np.searchsorted(self._knots, x, side="right") - 1, 0, len(self._knots) - 1)
        return x - self._knots[k], self._coef[k]

    def u(self, x):
        dx, c = self._piece(x)
        return c[..., 0] + c[..., 1] * dx + c[..., 2] * dx**2

    def u1(self, x):
        dx, c = self._piece(x)
        return c[..., 1] + 2.0 * c[..., 2] * dx

    def u2(self, x):
        _, c = self._piece(x)
        return 2.0 * c[..., 2]

    def __eq__(self, other):
        return isinstance(other, Tabulated) and self.x == other.x and self.y == other.y

    def __hash__(self):
        return hash(("tabulated", self.x, self.y))

    def to_json(self):
        return {"kind": "tabulated", "x": list(self.x), "y": list(self.y)}


def utility_from_json(obj: dict[str, Any]) -> Utility:
    kind = str(obj.get("kind", "")).lower()
    if kind == "cara":
        return CARA(float(obj["rho"]))
    if kind == "crra":
        return CRRA(float(obj["gamma"]))
    if kind == "log":
        return Log()
    if kind == "quadratic":
        return Quadratic(float(obj["b"]))
    if kind == "tabulated":
        return Tabulated(tuple(map(float, obj["x"])), tuple(map(float, obj["y"])))
    raise ValueError(f"unknown utility kind {kind!r}")


# ---------------------------------------------------------------------------
# Agents
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Agent:
    utility: Utility
    wealth: float

    def __post_init__(self):
        object.__setattr__(self, "wealth", float(self.wealth))
        if not bool(self.utility.in_domain(self.wealth)):
            raise DomainError(f"wealth {self.wealth} outside utility domain {self.utility.domain}")
        if self.utility.closed_domain:
            lo, hi = self.utility.domain
            if not lo < self.wealth < hi:
                raise DomainError("wealth must lie strictly inside the utility domain")
        # the ratio -u''/u' is scale free, so it survives where u' itself underflows
        if not float(self.utility.absolute_risk_aversion(self.wealth)) > 0:
            raise DomainError("utility is not increasing and concave at wealth")

    def with_wealth(self, wealth: float) -> "Agent":
        return Agent(self.utility, wealth)

    def to_json(self) -> dict[str, Any]:
        return {"utility": self.utility.to_json(), "wealth": self.wealth}

    @classmethod
    def from_json(cls, obj: dict[str, Any]) -> "Agent":
        return cls(utility_from_json(obj["utility"]), float(obj["wealth"]))


def arrow_pratt_absolute(agent: Agent) -> float:
    """-u''(w) / u'(w)."""
    return float(agent.utility.absolute_risk_aversion(agent.wealth))


def arrow_pratt_relative(agent: Agent) -> float:
    """-w u''(w) / u'(w)."""
    return agent.wealth * arrow_pratt_absolute(agent)


# ---------------------------------------------------------------------------
# Return distributions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Discrete:
    values: tuple[float, ...]
    probs: tuple[float, ...]

    def __post_init__(self):
        v = tuple(float(a) for a in self.values)
        p = tuple(float(a) for a in self.probs)
        if len(v) != len(p) or not v:
            raise InvalidGamble("values and probs must be non-empty and aligned")
        if any(q < 0 for q in p) or abs(math.fsum(p) - 1.0) > PROB_SUM_TOL:
            raise InvalidGamble("probabilities must be non-negative and sum to 1")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "probs", p)

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[float, float]]) -> "Discrete":
        pairs = list(pairs)
        return cls(tuple(v for v, _ in pairs), tuple(p for _, p in pairs))

    def mean(self) -> float:
        return math.fsum(v * p for v, p in zip(self.values, self.probs))

    def variance(self) -> float:
        m = self.mean()
        return math.fsum(p * (v - m) ** 2 for v, p in zip(self.values, self.probs))

    def prob_negative(self) -> float:
        return math.fsum(p for v, p in zip(self.values, self.probs) if v < 0)

    def affine(self, shift: float, scale: float) -> "Discrete":
        return Discrete(tuple(shift + scale * v for v in self.values), self.probs)

    def support_bounds(self) -> tuple[float, float]:
        live = [v for v, p in zip(self.values, self.probs) if p > 0]
        return min(live), max(live)

    def to_json(self):
        return {"kind": "discrete", "outcomes": [[v, p] for v, p in zip(self.values, self.probs)]}


@dataclass(frozen=True)
class Normal:
    mu: float
    sigma: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise InvalidGamble("Normal requires sigma > 0")

    def mean(self):
        return float(self.mu)

    def variance(self):
        return float(self.sigma) ** 2

    def prob_negative(self):
        return 0.5 * math.erfc(self.mu / (self.sigma * math.sqrt(2.0)))

    def transform(self, z):
        """Outcome as an increasing function of a standard normal draw."""
        return self.mu + self.sigma * np.asarray(z, dtype=float)

    def inverse(self, g: float) -> float:
        return (g - self.mu) / self.sigma

    def affine(self, shift, scale):
        return Normal(shift + scale * self.mu, scale * self.sigma)

    def to_json(self):
        return {"kind": "normal", "mu": self.mu, "sigma": self.sigma}


@dataclass(frozen=True)
class ShiftedLogNormal:
    """g = shift + scale * exp(loc + s Z), Z standard normal, scale > 0.

    A GBM price increment P_t - P_0 is ``ShiftedLogNormal.gbm(P0, mu, sigma, t)``.
    """

    scale: float
    shift: float
    loc: float
    s: float

    def __post_init__(self):
        if not (self.scale > 0 and self.s > 0):
            raise InvalidGamble("ShiftedLogNormal requires scale > 0 and s > 0")

    @classmethod
    def gbm(cls, p0: float, mu: float, sigma: float, t: float) -> "ShiftedLogNormal":
        return cls(p0, -p0, (mu - 0.5 * sigma**2) * t, sigma * math.sqrt(t))

    def mean(self):
        return self.shift + self.scale * math.exp(self.loc + 0.5 * self.s**2)

    def variance(self):
        return self.scale**2 * math.expm1(self.s**2) * math.exp(2.0 * self.loc + self.s**2)

    def prob_negative(self):
        if self.shift >= 0:
            return 0.0
        z = (math.log(-self.shift / self.scale) - self.loc) / self.s
        return 0.5 * math.erfc(-z / math.sqrt(2.0))

    def transform(self, z):
        z = np.asarray(z, dtype=float)
        # shift = -scale is the GBM case; expm1 keeps small increments exact.
        if self.shift == -self.scale:
            return self.scale * np.expm1(self.loc + self.s * z)
        return self.shift + self.scale * np.exp(self.loc + self.s * z)

    def inverse(self, g: float) -> float:
        r = (g - self.shift) / self.scale
        if r <= 0:
            return -math.inf
        return (math.log(r) - self.loc) / self.s

    def affine(self, shift, scale):
        return ShiftedLogNormal(scale * self.scale, shift + scale * self.shift, self.loc, self.s)

    def to_json(self):
        return {"kind": "shifted_lognormal", "scale": self.scale, "shift": self.shift,
                "loc": self.loc, "s": self.s}


@dataclass(frozen=True, eq=False)
class Empirical:
    samples: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.samples, dtype=float).ravel()
        if a.size < MIN_EMPIRICAL_SAMPLES:
            raise InvalidGamble(f"Empirical needs >= {MIN_EMPIRICAL_SAMPLES} samples")
        if not np.all(np.isfinite(a)):
            raise InvalidGamble("Empirical samples must be finite")
        a = a.copy()
        a.setflags(write=False)
        object.__setattr__(self, "samples", a)

    def mean(self):
        return float(np.mean(self.samples))

    def variance(self):
        return float(np.var(self.samples))

    def prob_negative(self):
        return float(np.count_nonzero(self.samples < 0)) / self.samples.size

    def affine(self, shift, scale):
        return Empirical(shift + scale * self.samples)

    def support_bounds(self):
        return float(self.samples.min()), float(self.samples.max())

    def to_json(self):
        return {"kind": "empirical", "samples": self.samples.tolist()}


Distribution = Discrete | Normal | ShiftedLogNormal | Empirical


def distribution_from_json(obj: dict[str, Any]) -> Distribution:
    kind = str(obj.get("kind", "")).lower()
    if kind == "normal":
        return Normal(float(obj["mu"]), float(obj["sigma"]))
    if kind == "discrete":
        return Discrete.from_pairs((float(v), float(p)) for v, p in obj["outcomes"])
    if kind in ("shifted_lognormal", "lognormal"):
        return ShiftedLogNormal(float(obj["scale"]), float(obj["shift"]), float(obj["loc"]), float(obj["s"]))
    if kind == "empirical":
        return Empirical(np.asarray(obj["samples"], dtype=float))
    raise ValueError(f"unknown distribution kind {kind!r}")


# ---------------------------------------------------------------------------
# Gambles
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Gamble:
    """A return distribution with positive mean and positive loss probability."""

    dist: Distribution
    mean: float = field(init=False)
    variance: float = field(init=False)

    def __post_init__(self):
        m, v = self.dist.mean(), self.dist.variance()
        object.__setattr__(self, "mean", m)
        object.__setattr__(self, "variance", v)
        if not m > 0:
            raise InvalidGamble(f"gamble mean must be positive (got {m})")
        if not self.dist.prob_negative() > 0:
            raise InvalidGamble("gamble must take negative values with positive probability")

    @property
    def std(self) -> float:
        return math.sqrt(self.variance)

    @classmethod
    def normal(cls, mu: float, sigma: float) -> "Gamble":
        return cls(Normal(mu, sigma))

    @classmethod
    def discrete(cls, pairs: Sequence[tuple[float, float]]) -> "Gamble":
        return cls(Discrete.from_pairs(pairs))

    @classmethod
    def empirical(cls, samples) -> "Gamble":
        return cls(Empirical(samples))

    def affine(self, shift: float, scale: float) -> "Gamble":
        """Gamble of shift + scale * g (scale > 0)."""
        if not scale > 0:
            raise ValueError("affine scale must be positive")
        return Gamble(self.dist.affine(shift, scale))

    def __eq__(self, other):
        if not isinstance(other, Gamble):
            return NotImplemented
        if isinstance(self.dist, Empirical) or isinstance(other.dist, Empirical):
            return (isinstance(self.dist, Empirical) and isinstance(other.dist, Empirical)
                    and np.array_equal(self.dist.samples, other.dist.samples))
        return self.dist == other.dist

    def __hash__(self):
        if isinstance(self.dist, Empirical):
            return hash(self.dist.samples.tobytes())
        return hash(self.dist)

    def to_json(self) -> dict[str, Any]:
        return {"dist": self.dist.to_json()}

    @classmethod
    def from_json(cls, obj: dict[str, Any]) -> "Gamble":
        return cls(distribution_from_json(obj["dist"]))


def gamble_moments(g: Gamble) -> tuple[float, float]:
    return g.mean, g.variance


# ---------------------------------------------------------------------------
# Decision values
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DecisionValue:
    tag: str  # finite | plus_infinity | minus_infinity | accept | reject
    value: float | None = None

    TAGS: ClassVar[tuple[str, ...]] = ("finite", "plus_infinity", "minus_infinity", "accept", "reject")

    def __post_init__(self):
        if self.tag not in self.TAGS:
            raise ValueError(f"bad DecisionValue tag {self.tag!r}")
        if (self.tag == "finite") != (self.value is not None):
            raise ValueError("only finite decision values carry a number")

    @classmethod
    def finite(cls, x: float) -> "DecisionValue":
        return cls("finite", float(x))

    @classmethod
    def accept(cls, flag: bool = True) -> "DecisionValue":
        return cls("accept" if flag else "reject")

    PLUS_INF: ClassVar["DecisionValue"]
    MINUS_INF: ClassVar["DecisionValue"]

    @property
    def is_finite(self) -> bool:
        return self.tag == "finite"

    def as_float(self) -> float:
        return {
            "finite": self.value,
            "plus_infinity": math.inf,
            "minus_infinity": -math.inf,
            "accept": 1.0,
            "reject": 0.0,
        }[self.tag]

    def to_json(self) -> dict[str, Any]:
        if self.tag in ("accept", "reject"):
            return {"value": 1 if self.tag == "accept" else 0, "status": self.tag}
        return {"value": self.value, "status": self.tag}


DecisionValue.PLUS_INF = DecisionValue("plus_infinity")
DecisionValue.MINUS_INF = DecisionValue("minus_infinity")
