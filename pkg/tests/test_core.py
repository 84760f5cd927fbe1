import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from riskdex import (
    CARA, CRRA, Agent, DecisionValue, Discrete, Empirical, Gamble, Log, Normal, Quadratic,
    ShiftedLogNormal, Tabulated, arrow_pratt_absolute, arrow_pratt_relative, gamble_moments,
)
from riskdex.core import distribution_from_json, utility_from_json
from riskdex.errors import DomainError, InvalidGamble

from conftest import tabulated_log

PROBES = {
    "cara": (CARA(1.3), np.linspace(-5.0, 5.0, 1000)),
    "log": (Log(), np.geomspace(0.05, 50.0, 1000)),
    "crra_half": (CRRA(0.5), np.geomspace(0.05, 50.0, 1000)),
    "crra_3": (CRRA(3.0), np.geomspace(0.05, 50.0, 1000)),
    "quadratic": (Quadratic(0.05), np.linspace(-10.0, 19.0, 1000)),
}


@pytest.mark.parametrize("name", sorted(PROBES))
def test_utility_increasing_concave_and_derivatives_match_finite_differences(name):
    u, x = PROBES[name]
    u1, u2 = u.u1(x), u.u2(x)
    assert np.all(u1 > 0) and np.all(u2 < 0)
    h = 1e-4 * np.maximum(np.abs(x), 0.1)
    fd1 = (u.u(x + h) - u.u(x - h)) / (2 * h)
    fd2 = (u.u1(x + h) - u.u1(x - h)) / (2 * h)
    np.testing.assert_allclose(fd1, u1, rtol=1e-6)
    np.testing.assert_allclose(fd2, u2, rtol=1e-6)


def test_tabulated_is_increasing_concave_and_interpolates():
    t = tabulated_log()
    x = np.linspace(t.domain[0], t.domain[1], 1000)
    assert np.all(t.u1(x) > 0) and np.all(t.u2(x) < 0)
    np.testing.assert_allclose(t.u(np.array(t.x)), t.y, rtol=0, atol=1e-12)
    # C1: derivative continuous across the inserted knots
    k = t._knots[1:]
    np.testing.assert_allclose(t.u1(k - 1e-9), t.u1(k + 1e-9), rtol=1e-6)


def test_tabulated_rejects_non_concave_or_non_increasing_samples():
    with pytest.raises(ValueError, match="concavity"):
        Tabulated((0.0, 1.0, 2.0, 3.0), (0.0, 1.0, 2.0, 3.0))
    with pytest.raises(ValueError, match="increasing"):
        Tabulated((0.0, 1.0, 2.0), (0.0, 1.0, 0.5))


def test_tabulated_evaluation_outside_samples_is_an_error():
    with pytest.raises(DomainError):
        tabulated_log().u(25.0)


def test_log_and_crra_reject_nonpositive_wealth():
    with pytest.raises(DomainError):
        Log().u(-1.0)
    with pytest.raises(DomainError):
        Agent(CRRA(2.0), 0.0)


def test_quadratic_is_capped_below_bliss_point():
    q = Quadratic(0.5)
    assert q.domain[1] == pytest.approx(2.0 - 1e-9)
    with pytest.raises(DomainError):
        q.u(2.0)


@pytest.mark.parametrize("agent,expected", [
    (Agent(CARA(1.0), 0.0), 1.0),
    (Agent(Log(), 10.0), 0.1),
    (Agent(CARA(2.5), 100.0), 2.5),
])
def test_arrow_pratt_absolute_examples(agent, expected):
    assert arrow_pratt_absolute(agent) == pytest.approx(expected, rel=1e-14)


@pytest.mark.parametrize("agent,expected", [
    (Agent(Log(), 10.0), 1.0),
    (Agent(CARA(1.0), 3.0), 3.0),
    (Agent(CRRA(2.0), 7.0), 2.0),
])
def test_arrow_pratt_relative_examples(agent, expected):
    assert arrow_pratt_relative(agent) == pytest.approx(expected, rel=1e-14)


@given(rho=st.floats(0.01, 10.0), w=st.floats(-100.0, 100.0))
def test_relative_is_wealth_times_absolute_cara(rho, w):
    a = Agent(CARA(rho), w)
    assert arrow_pratt_relative(a) == w * arrow_pratt_absolute(a)


@given(gamma=st.floats(0.1, 8.0), w=st.floats(0.01, 1e3))
def test_relative_is_wealth_times_absolute_crra(gamma, w):
    a = Agent(CRRA(gamma), w)
    assert arrow_pratt_relative(a) == w * arrow_pratt_absolute(a)
    assert arrow_pratt_relative(a) == pytest.approx(gamma, rel=1e-12)


def test_crra_gamma_one_is_log():
    c, l = CRRA(1.0), Log()
    x = np.geomspace(0.1, 10, 7)
    np.testing.assert_allclose(c.u1(x), l.u1(x))
    np.testing.assert_allclose(c.du_scaled(2.0, x - 1.0), l.du_scaled(2.0, x - 1.0))


def test_arrow_pratt_outside_domain_raises():
    with pytest.raises(DomainError):
        Log().absolute_risk_aversion(-2.0)
    with pytest.raises(DomainError):
        Quadratic(0.5).absolute_risk_aversion(3.0)


@pytest.mark.parametrize("u,w", [(CARA(0.7), -3.0), (Log(), 2.0), (CRRA(0.5), 2.0),
                                 (CRRA(4.0), 2.0), (Quadratic(0.1), 1.0)])
def test_normalised_increments_match_direct_evaluation(u, w):
    d = np.array([-0.9, -0.3, -1e-3, 1e-3, 0.5, 2.0])
    direct = (u.u(w + d) - u.u(w)) / u.u1(w)
    np.testing.assert_allclose(u.du_scaled(w, d), direct, rtol=1e-9)
    np.testing.assert_allclose(u.u1_ratio(w, d), u.u1(w + d) / u.u1(w), rtol=1e-12)


@pytest.mark.parametrize("u,w", [(CARA(0.7), 1.0), (Log(), 2.0), (CRRA(3.0), 2.0), (Quadratic(0.1), 1.0)])
def test_normalised_increment_is_accurate_for_tiny_steps(u, w):
    # (u(w+d)-u(w))/u'(w) = d - rho d^2 / 2 + O(d^3); the remainder must survive at d = 1e-8
    d = 1e-8
    rho = float(u.absolute_risk_aversion(w))
    rem = float(u.du_scaled(w, d)) - d
    assert rem == pytest.approx(-0.5 * rho * d * d, rel=1e-6)


# ---------------------------------------------------------------------------
# gambles
# ---------------------------------------------------------------------------


def test_moments_normal():
    assert gamble_moments(Gamble.normal(1.0, 2.0)) == (1.0, 4.0)


def test_moments_discrete():
    m, v = gamble_moments(Gamble.discrete([(2.0, 0.5), (-1.0, 0.5)]))
    assert (m, v) == (0.5, 2.25)


def test_moments_gbm_increment_match_lognormal_oracle():
    g = Gamble(ShiftedLogNormal.gbm(1.0, 0.05, 0.2, 1.0))
    m, v = gamble_moments(g)
    # E[P1] = e^{mu}, Var[P1] = e^{2 mu}(e^{sigma^2} - 1)
    assert m == pytest.approx(math.exp(0.05) - 1.0, rel=1e-14)
    assert v == pytest.approx(math.exp(0.1) * (math.exp(0.04) - 1.0), rel=1e-13)


def test_moments_gbm_increment_match_monte_carlo():
    rng = np.random.default_rng(1)
    z = rng.standard_normal(2_000_000)
    p1 = np.exp((0.05 - 0.02) + 0.2 * z)
    g = Gamble(ShiftedLogNormal.gbm(1.0, 0.05, 0.2, 1.0))
    se_m = p1.std() / math.sqrt(z.size)
    assert abs((p1 - 1).mean() - g.mean) < 4 * se_m
    assert (p1 - 1).var() == pytest.approx(g.variance, rel=5e-3)


def test_moments_empirical_are_sample_moments():
    s = np.linspace(-1.0, 2.0, 301)
    m, v = gamble_moments(Gamble.empirical(s))
    assert m == pytest.approx(s.mean()) and v == pytest.approx(s.var())


@pytest.mark.parametrize("pairs", [
    [(1.0, 0.5), (2.0, 0.5)],            # no loss
    [(1.0, 0.5), (-1.0, 0.5)],           # zero mean
    [(-1.0, 0.5), (-2.0, 0.5)],          # negative mean
])
def test_gamble_rejects_non_gambles(pairs):
    with pytest.raises(InvalidGamble):
        Gamble.discrete(pairs)


def test_gamble_rejects_bad_probabilities_and_sigma():
    with pytest.raises(InvalidGamble):
        Gamble.discrete([(2.0, 0.5), (-1.0, 0.4)])
    with pytest.raises(InvalidGamble):
        Gamble.normal(1.0, 0.0)
    with pytest.raises(InvalidGamble):
        Gamble.normal(-1.0, 1.0)


def test_empirical_needs_enough_samples():
    with pytest.raises(InvalidGamble):
        Gamble.empirical(np.r_[np.ones(50), -np.ones(40)])


@given(st.lists(st.tuples(st.floats(-10, 10), st.floats(0.01, 1.0)), min_size=2, max_size=6))
def test_discrete_construction_matches_definition(raw):
    total = sum(p for _, p in raw)
    pairs = [(v, p / total) for v, p in raw]
    d = Discrete.from_pairs(pairs)
    if abs(math.fsum(d.probs) - 1.0) > 1e-12:
        return
    is_gamble = d.mean() > 0 and d.prob_negative() > 0
    try:
        Gamble(d)
        assert is_gamble
    except InvalidGamble:
        assert not is_gamble


def test_affine_moments():
    g = Gamble.discrete([(2.0, 0.5), (-1.0, 0.5)]).affine(0.1, 3.0)
    assert g.mean == pytest.approx(0.1 + 1.5) and g.variance == pytest.approx(9 * 2.25)


def test_json_round_trips():
    a = Agent.from_json({"utility": {"kind": "cara", "rho": 1.0}, "wealth": 10.0})
    assert a == Agent(CARA(1.0), 10.0)
    assert Agent.from_json(a.to_json()) == a
    g = Gamble.from_json({"dist": {"kind": "normal", "mu": 1.0, "sigma": 2.0}})
    assert g == Gamble.normal(1.0, 2.0)
    for dist in (Normal(1.0, 2.0), Discrete.from_pairs([(2.0, 0.5), (-1.0, 0.5)]),
                 ShiftedLogNormal.gbm(1.0, 0.05, 0.2, 0.5)):
        assert distribution_from_json(dist.to_json()) == dist
    for u in (CARA(2.0), Log(), CRRA(3.0), Quadratic(0.2), tabulated_log()):
        assert utility_from_json(u.to_json()) == u
    e = Empirical(np.linspace(-1, 2, 200))
    assert np.array_equal(distribution_from_json(e.to_json()).samples, e.samples)


def test_decision_value_tags():
    assert DecisionValue.finite(0.5).as_float() == 0.5
    assert DecisionValue.PLUS_INF.as_float() == math.inf
    assert DecisionValue.accept(True).to_json() == {"value": 1, "status": "accept"}
    with pytest.raises(ValueError):
        DecisionValue("finite")
    with pytest.raises(ValueError):
        DecisionValue("maybe")


def test_agent_wealth_must_be_inside_domain():
    with pytest.raises(DomainError):
        Agent(Log(), -1.0)
    with pytest.raises(DomainError):
        Agent(Quadratic(1.0), 1.0)
    with pytest.raises(DomainError):
        Agent(tabulated_log(), 0.5)  # on the closed edge


@settings(max_examples=50)
@given(st.floats(0.01, 5.0))
def test_agents_are_hashable_values(rho):
    assert hash(Agent(CARA(rho), 1.0)) == hash(Agent(CARA(rho), 1.0))
