"""Analytic decisions for exponential (CARA) utility and normal gambles.

With u(x) = 1 - exp(-rho x) and g ~ N(mu, sigma^2) the lognormal moment
identity E[exp(y)] = exp(E[y] + Var[y]/2) turns every decision into a
one-line formula. The per-dollar forms follow by substituting the excess
return gamble w (r - r_f) ~ N(w (mu - r_f), (w sigma)^2) and rescaling.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Any

from .core import DecisionValue


@dataclass(frozen=True)
class CaraNormalCase:
    rho: float
    mu: float
    sigma: float
    wealth: float = 0.0

    def __post_init__(self):
        if not (self.rho > 0 and self.mu > 0 and self.sigma > 0):
            raise ValueError("rho, mu and sigma must be positive")

    def to_json(self) -> dict[str, Any]:
        return asdict(self)


def cara_normal_rp(c: CaraNormalCase) -> float:
    return -0.5 * c.rho * c.sigma**2


def cara_normal_ar(c: CaraNormalCase) -> DecisionValue:
    # compare 2 mu >= rho sigma^2 rather than the ratio, so the boundary is exact
    return DecisionValue.accept(2.0 * c.mu >= c.rho * c.sigma**2)


def cara_normal_ca(c: CaraNormalCase) -> float:
    return c.mu / (c.rho * c.sigma**2)


def cara_normal_ce(c: CaraNormalCase) -> float:
    return (c.mu / c.sigma) ** 2 / (2.0 * c.rho)


def cara_normal_all(c: CaraNormalCase) -> dict[str, Any]:
    return {
        "rp": cara_normal_rp(c),
        "ar": cara_normal_ar(c).tag,
        "ca": cara_normal_ca(c),
        "ce": cara_normal_ce(c),
        "sce": c.mu + cara_normal_rp(c),
    }


def cara_normal_multiplicative_all(c: CaraNormalCase, r_f: float) -> dict[str, Any]:
    """Per-dollar decisions for r ~ N(mu, sigma^2), risk-free rate r_f, wealth w > 0.

    The relative coefficient rho * w takes the place of rho.
    """
    if not c.wealth > 0:
        raise ValueError("per-dollar decisions need positive wealth")
    excess = c.mu - r_f
    if not excess > 0:
        raise ValueError("mean return must exceed the risk-free rate")
    rel = c.rho * c.wealth
    return {
        "rp": -0.5 * rel * c.sigma**2,
        "ar": DecisionValue.accept(2.0 * excess >= rel * c.sigma**2).tag,
        "ca": excess / (rel * c.sigma**2),
        "ce": (excess / c.sigma) ** 2 / (2.0 * rel),
    }


__all__ = ["CaraNormalCase", "cara_normal_rp", "cara_normal_ar", "cara_normal_ca", "cara_normal_ce",
           "cara_normal_all", "cara_normal_multiplicative_all"]
