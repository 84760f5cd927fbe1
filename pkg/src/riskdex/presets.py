"""Shipped experiment panels.

Each panel is a plain function so callers get fresh immutable objects; the
parameter choices are explained next to each one.
"""
from __future__ import annotations

import itertools
import math

from .closed_form import CaraNormalCase
from .core import CARA, CRRA, Agent, Discrete, Gamble, Log, Quadratic
from .processes import CIR, GBM, OU, ArithmeticBM, CompoundPoisson

# CARA-normal grid: 3 x 3 x 3 x 3 = 81 cases. (rho, mu, sigma) = (2, 1, 1) and
# (1, 2, 2) sit exactly on the accept/reject boundary 2 mu = rho sigma^2.
CARA_GRID_RHO = (0.5, 1.0, 2.0)
CARA_GRID_MU = (0.5, 1.0, 2.0)
CARA_GRID_SIGMA = (0.5, 1.0, 2.0)
CARA_GRID_WEALTH = (0.0, 10.0, 100.0)
INVARIANCE_WEALTH = (-5.0, 0.0, 10.0, 100.0)


def cara_normal_grid() -> list[CaraNormalCase]:
    return [CaraNormalCase(r, m, s, w) for r, m, s, w in
            itertools.product(CARA_GRID_RHO, CARA_GRID_MU, CARA_GRID_SIGMA, CARA_GRID_WEALTH)]


def limit_agents() -> list[Agent]:
    """CARA rho=1 (w=0), log (w=1), CRRA gamma=2 (w=1)."""
    return [Agent(CARA(1.0), 0.0), Agent(Log(), 1.0), Agent(CRRA(2.0), 1.0)]


def limit_processes() -> list:
    """One process of each catalog kind with (mu0, sigma0) well inside the
    domains of the limit agents for t <= 0.1."""
    return [
        GBM(p0=1.0, mu=0.05, sigma=0.2),                    # (0.05, 0.2)
        ArithmeticBM(mu_0=0.1, sigma_0=0.3),                # (0.1, 0.3)
        OU(kappa=1.0, theta=0.08, sigma=0.25, x0=0.0),      # (0.08, 0.25)
        CIR(kappa=2.0, theta=0.06, sigma=0.45, x0=0.04),    # (0.04, 0.09); 2 k theta = 0.24 >= 0.2025
    ]


def ranking_processes() -> list:
    """Four processes whose VM, IS and SD local indices are pairwise distinct
    (by at least 8%) and order differently from one another."""
    return [
        GBM(p0=1.0, mu=0.05, sigma=0.2),                    # VM .800  IS 4.00  SD .20
        ArithmeticBM(mu_0=0.1, sigma_0=0.3),                # VM .900  IS 3.00  SD .30
        OU(kappa=2.0, theta=0.1, sigma=0.35, x0=0.0),       # VM .6125 IS 1.75  SD .35
        CIR(kappa=5.0, theta=0.046, sigma=0.65, x0=0.04),   # VM .5633 IS 4.33  SD .13
    ]


def aversion_panel() -> list[Agent]:
    """Five agents with absolute risk aversion 0.5, 2/3, 1, 1.5, 2.5 at their wealth."""
    return [
        Agent(CARA(0.5), 0.0),
        Agent(Quadratic(0.4), 1.0),
        Agent(Log(), 1.0),
        Agent(CRRA(3.0), 2.0),
        Agent(CARA(2.5), 0.0),
    ]


def weak_consistency_case() -> tuple[Agent, list]:
    """Log agent at w=2 (rho = 0.5, acceptance threshold on VM: 2/rho = 4) and
    two GBMs with local VM 5 (above the threshold) and 3 (below)."""
    return Agent(Log(), 2.0), [GBM(1.0, 0.05, 0.5), GBM(1.0, 0.05, math.sqrt(0.15))]


def sce_counterexample() -> tuple[list[Agent], list[Gamble]]:
    """mu - rho sigma^2 / 2: rho=0.1 gives 0.95 < 2.8, rho=4 gives -1 > -5."""
    return ([Agent(CARA(0.1), 0.0), Agent(CARA(4.0), 0.0)],
            [Gamble.normal(1.0, 1.0), Gamble.normal(3.0, 2.0)])


def jump_pair() -> tuple[CompoundPoisson, CompoundPoisson, Agent, Agent]:
    """Jump sizes split a log agent (w=1) and a CARA agent (rho=0.6).

    h  = {+8 w.p. .15, -0.3 w.p. .85}: log accepts (E ln(1+h) = +0.026),
         CARA rejects (E exp(-0.6 h) = 1.019 > 1).
    h~ = {+0.3 w.p. .5, -0.24 w.p. .5}: log rejects (-0.006), CARA accepts (0.995 < 1).

    Two CARA agents can never split this way, because a more averse CARA
    agent accepts only what every less averse one accepts; pairing CARA with
    a wealth-dependent utility removes that nesting. Three jumps of h total
    at least -0.9, inside the log domain at w=1.
    """
    h = Discrete.from_pairs([(8.0, 0.15), (-0.3, 0.85)])
    h_tilde = Discrete.from_pairs([(0.3, 0.5), (-0.24, 0.5)])
    return (CompoundPoisson(1.0, h), CompoundPoisson(1.0, h_tilde),
            Agent(Log(), 1.0), Agent(CARA(0.6), 0.0))


__all__ = [
    "cara_normal_grid", "limit_agents", "limit_processes", "ranking_processes", "aversion_panel",
    "weak_consistency_case", "sce_counterexample", "jump_pair", "INVARIANCE_WEALTH",
]
