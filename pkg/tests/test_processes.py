import math

import numpy as np
import pytest

from riskdex import Discrete, Gamble, Normal, ShiftedLogNormal
from riskdex.errors import NotYetAGamble, UnsupportedHorizon
from riskdex.processes import (
    CIR, GBM, OU, ArithmeticBM, CompoundPoisson, cp_marginal, cp_marginal_with_bound, gamble_at,
    marginal, process_from_json, simulate_euler, t_grid,
)

CATALOG = {
    "gbm": GBM(1.0, 0.05, 0.2),
    "abm": ArithmeticBM(0.1, 0.3),
    "ou": OU(1.0, 0.08, 0.25, 0.0),
    "cir": CIR(2.0, 0.06, 0.45, 0.04),
}


def exact_moments(p, t):
    if isinstance(p, CIR):
        return p.mean_increment(t), p.variance_increment(t)
    d = p.exact_marginal(t)
    return d.mean(), d.variance()


# ---------------------------------------------------------------------------
# worked examples
# ---------------------------------------------------------------------------


def test_gbm_unit_horizon_marginal():
    m = marginal(GBM(1.0, 0.05, 0.2), 1.0)
    assert m.scheme == "exact" and isinstance(m.dist, ShiftedLogNormal)
    assert m.dist.mean() == pytest.approx(math.exp(0.05) - 1.0, rel=1e-14)


def test_abm_marginal():
    d = marginal(ArithmeticBM(1.0, 1.0), 0.01).dist
    assert isinstance(d, Normal)
    assert (d.mean(), d.variance()) == pytest.approx((0.01, 0.01), rel=1e-14)


def test_ou_marginal_against_transition_density():
    p = OU(kappa=1.0, theta=0.0, sigma=1.0, x0=-1.0)
    assert p.mu0 == 1.0
    for t in (0.01, 0.5, 2.0):
        d = marginal(p, t).dist
        assert d.mean() == pytest.approx(1.0 - math.exp(-t), rel=1e-13)
        assert d.variance() == pytest.approx((1.0 - math.exp(-2 * t)) / 2.0, rel=1e-13)


def test_construction_invariants():
    with pytest.raises(ValueError):
        OU(1.0, 0.0, 1.0, 1.0)  # mu0 = -1
    with pytest.raises(ValueError):
        GBM(1.0, 0.05, 0.0)
    with pytest.raises(ValueError):
        GBM(1.0, -0.05, 0.2)
    with pytest.raises(ValueError):
        ArithmeticBM(0.1, 0.3, floor=1.0)
    with pytest.raises(ValueError):
        CIR(1.0, 0.04, 0.5, 0.01)  # 2 kappa theta = 0.08 < 0.25


def test_gamble_at_examples():
    g = gamble_at(GBM(1.0, 0.05, 0.2), 0.01)
    assert g.mean == pytest.approx(math.expm1(0.0005), rel=1e-12)
    assert g.mean == pytest.approx(5.0e-4, rel=1e-3)
    for t in (1e-6, 1.0, 100.0):
        g = gamble_at(ArithmeticBM(1.0, 1.0), t)
        assert (g.mean, g.variance) == pytest.approx((t, t))


def test_gamble_at_large_horizon_is_not_a_gamble():
    # drift dominates: P[g_t < 0] underflows
    with pytest.raises(NotYetAGamble):
        gamble_at(ArithmeticBM(1.0, 0.01), 100.0)


def test_abm_floor_limits_horizon():
    p = ArithmeticBM(0.1, 0.3, floor=-1.0)
    t_max = p.t_max
    assert 0 < t_max < math.inf
    d = p.exact_marginal(t_max)
    from scipy.special import ndtr

    assert ndtr((-1.0 - d.mean()) / math.sqrt(d.variance())) == pytest.approx(1e-12, rel=1e-6)
    marginal(p, 0.999 * t_max)
    with pytest.raises(UnsupportedHorizon):
        marginal(p, 1.001 * t_max)


def test_process_json_round_trip():
    for p in list(CATALOG.values()) + [ArithmeticBM(0.1, 0.3, -2.0)]:
        assert process_from_json(p.to_json()) == p
    assert process_from_json({"kind": "gbm", "p0": 1.0, "mu": 0.05, "sigma": 0.2}) == CATALOG["gbm"]
    with pytest.raises(ValueError):
        process_from_json({"kind": "heston"})


def test_t_grid():
    g = t_grid()
    assert g.size == 15 and g[0] == 0.1
    assert g[-1] == pytest.approx(0.1 / 2**14)
    assert g[-1] == pytest.approx(6.1e-6, rel=1e-2)


# ---------------------------------------------------------------------------
# moment scaling: |E[g_t]/t - mu0| <= C t and |Var[g_t]/t - sigma0^2| <= C t
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("name", sorted(CATALOG))
def test_moment_scaling(name):
    p = CATALOG[name]
    grid = t_grid()
    for which, target in ((0, p.mu0), (1, p.sigma0**2)):
        c = np.array([abs(exact_moments(p, t)[which] / t - target) / t for t in grid])
        assert np.all(np.isfinite(c))
        # the first-order coefficient settles: the constant C is finite and the
        # small-t values agree with each other
        assert c.max() <= 2.0 * c[0] + 1e-6
        assert abs(c[-1] - c[-2]) <= 1e-3 * max(c[-2], 1e-12) + 1e-6


def test_moment_scaling_slopes_are_one():
    # log |E[g_t] - mu0 t| against log t has slope 2 (error O(t^2)), so the scaled error is O(t)
    p = CATALOG["gbm"]
    t = t_grid()[:8]
    err = np.array([abs(exact_moments(p, s)[0] - p.mu0 * s) for s in t])
    slope = np.polyfit(np.log(t), np.log(err), 1)[0]
    assert slope == pytest.approx(2.0, abs=0.01)


# ---------------------------------------------------------------------------
# simulation
# ---------------------------------------------------------------------------


def _pair_se(x):
    """Plain Monte Carlo standard errors of the sample mean and variance.

    The antithetic pairing makes the mean exact for drifts linear in the state,
    so the per-pair spread would be zero; the i.i.d. formula is the honest
    yardstick for a single path's noise.
    """
    n = x.size
    d = x - x.mean()
    return x.std() / math.sqrt(n), math.sqrt(max(np.mean(d**4) - np.mean(d**2) ** 2, 0.0) / n)


@pytest.mark.parametrize("name", ["gbm", "abm", "ou", "cir"])
@pytest.mark.parametrize("t", [0.1, 0.01])
def test_euler_matches_exact_moments(name, t):
    p = CATALOG[name]
    x = simulate_euler(p, t, n_paths=2**16, n_steps=1024, seed=11)
    m, v = exact_moments(p, t)
    se_m, se_v = _pair_se(x)
    assert abs(x.mean() - m) <= 4 * se_m
    assert abs(x.var() - v) <= 4 * se_v


def test_simulation_is_deterministic_per_seed():
    p = CATALOG["cir"]
    a = simulate_euler(p, 0.01, n_paths=1024, n_steps=64, seed=3)
    b = simulate_euler(p, 0.01, n_paths=1024, n_steps=64, seed=3)
    c = simulate_euler(p, 0.01, n_paths=1024, n_steps=64, seed=4)
    assert np.array_equal(a, b) and not np.array_equal(a, c)


def test_gbm_increments_bounded_below():
    p = GBM(1.0, 0.05, 0.8)
    d = marginal(p, 5.0).dist
    z = np.random.default_rng(5).standard_normal(1_000_000)
    assert d.transform(z).min() > -p.p0


def test_zero_drift_abm_is_a_martingale():
    # bypass the positive-drift invariant on purpose
    p = object.__new__(ArithmeticBM)
    object.__setattr__(p, "mu_0", 0.0)
    object.__setattr__(p, "sigma_0", 0.5)
    object.__setattr__(p, "floor", None)
    x = simulate_euler(p, 0.1, n_paths=2**16, n_steps=64, seed=2)
    se, _ = _pair_se(x)
    assert abs(x.mean()) <= 4 * max(se, 1e-15)
    assert p.exact_marginal(0.1).mean() == 0.0


def test_cir_marginal_is_mean_matched_and_bounded():
    p = CATALOG["cir"]
    m = marginal(p, 0.01, n_paths=2**14)
    s = m.dist.samples
    assert m.scheme == "euler" and m.provenance()["n_paths"] == 2**14
    assert s.mean() == pytest.approx(p.mean_increment(0.01), rel=1e-9)
    assert s.min() >= -p.x0


# ---------------------------------------------------------------------------
# compound Poisson
# ---------------------------------------------------------------------------

H = Discrete.from_pairs([(2.0, 0.5), (-1.0, 0.5)])


def test_cp_needs_positive_time():
    with pytest.raises(NotYetAGamble):
        cp_marginal(CompoundPoisson(1.0, H), 0.0)


def test_cp_mean_at_small_horizon():
    g = cp_marginal(CompoundPoisson(1.0, H), 0.01)
    assert g.mean == pytest.approx(0.01 * 0.5 * math.exp(-0.01), rel=0.02)
    assert g.mean == pytest.approx(0.005, rel=1e-6)  # truncation at three jumps is invisible here


def test_cp_two_jump_weight():
    x = 0.3
    g = cp_marginal(CompoundPoisson(1.0, H), x)
    values, probs = np.asarray(g.dist.values), np.asarray(g.dist.probs)
    # the value 4 arises only from two jumps of +2
    p4 = probs[np.isclose(values, 4.0)][0]
    assert p4 == pytest.approx(0.25 * x**2 * math.exp(-x) / 2, rel=1e-12)
    p0 = probs[np.isclose(values, 0.0)][0]
    # zero: no jump, or three jumps (+2, -1, -1) in some order, lumped with N >= 3
    from scipy.special import gammainc

    assert p0 == pytest.approx(math.exp(-x) + 3 * 0.125 * gammainc(3, x), rel=1e-12)


def test_cp_tail_bound_reported():
    _, bound = cp_marginal_with_bound(CompoundPoisson(2.0, H), 0.05)
    assert bound == pytest.approx(0.1**4 / 24)


def test_cp_validation():
    with pytest.raises(ValueError):
        CompoundPoisson(0.0, H)
    assert CompoundPoisson(1.0, Gamble(H)).jumps == H
