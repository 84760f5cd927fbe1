import itertools

import pytest
from hypothesis import given
from hypothesis import strategies as st

from riskdex import CARA, Agent, Gamble, f_ca, f_ce, f_rp
from riskdex.closed_form import (
    CaraNormalCase, cara_normal_all, cara_normal_ar, cara_normal_ca, cara_normal_ce, cara_normal_rp, cara_normal_multiplicative_all,
)
from riskdex.indices import index
from riskdex.presets import cara_normal_grid


def test_rp_examples():
    assert cara_normal_rp(CaraNormalCase(1.0, 1.0, 2.0)) == -2.0
    assert cara_normal_rp(CaraNormalCase(2.0, 1.0, 1.0)) == -1.0
    assert abs(cara_normal_rp(CaraNormalCase(1.0, 1.0, 1e-8))) < 1e-15


def test_ar_examples():
    assert cara_normal_ar(CaraNormalCase(1.0, 1.0, 1.0)).tag == "accept"
    assert cara_normal_ar(CaraNormalCase(1.0, 1.0, 2.0)).tag == "reject"
    assert cara_normal_ar(CaraNormalCase(2.0, 1.0, 1.0)).tag == "accept"  # boundary


def test_ca_examples():
    assert cara_normal_ca(CaraNormalCase(1.0, 1.0, 2.0)) == 0.25
    assert cara_normal_ca(CaraNormalCase(1.0, 1.0, 1.0)) == 1.0
    assert cara_normal_ca(CaraNormalCase(4.0, 2.0, 1.0)) == 0.5


def test_ce_examples():
    assert cara_normal_ce(CaraNormalCase(1.0, 1.0, 2.0)) == 0.125
    assert cara_normal_ce(CaraNormalCase(2.0, 1.0, 1.0)) == 0.25
    assert cara_normal_ce(CaraNormalCase(1.0, 1e-9, 1.0)) < 1e-17


def test_all_bundle():
    out = cara_normal_all(CaraNormalCase(1.0, 1.0, 2.0))
    assert out == {"rp": -2.0, "ar": "reject", "ca": 0.25, "ce": 0.125, "sce": -1.0}


def test_case_validation():
    for bad in ((0.0, 1.0, 1.0), (1.0, -1.0, 1.0), (1.0, 1.0, 0.0)):
        with pytest.raises(ValueError):
            CaraNormalCase(*bad)


def test_grid_has_81_cases_and_boundary_cases():
    grid = cara_normal_grid()
    assert len(grid) == 81
    assert any(2 * c.mu == c.rho * c.sigma**2 for c in grid)


@given(st.floats(0.1, 5), st.floats(0.1, 5), st.floats(0.1, 5))
def test_multiplicative_reduces_to_additive_at_unit_wealth_zero_rate(rho, mu, sigma):
    c = CaraNormalCase(rho, mu, sigma, 1.0)
    one, two = cara_normal_all(c), cara_normal_multiplicative_all(c, 0.0)
    for k in ("rp", "ar", "ca", "ce"):
        assert two[k] == one[k]


def test_multiplicative_uses_relative_coefficient():
    c = CaraNormalCase(2.0, 0.1, 0.2, 3.0)
    out = cara_normal_multiplicative_all(c, 0.02)
    assert out["ca"] == pytest.approx(0.08 / (6.0 * 0.04))
    assert out["rp"] == pytest.approx(-0.5 * 2.0 * 3.0 * 0.04)
    with pytest.raises(ValueError):
        cara_normal_multiplicative_all(c, 0.2)
    with pytest.raises(ValueError):
        cara_normal_multiplicative_all(CaraNormalCase(1.0, 1.0, 1.0, 0.0), 0.0)


GAMBLES = [Gamble.normal(m, s) for m, s in itertools.product((0.5, 1.0, 2.0), (0.5, 1.0, 2.0))]
AGENTS = [Agent(CARA(r), 0.0) for r in (0.5, 1.0, 2.0)]


@pytest.mark.parametrize("fn,kind", [(f_ca, "vm"), (f_ce, "is"), (f_rp, "sd")])
def test_ranking_consistency_numeric(fn, kind):
    # every CARA agent orders normal gambles like the ascending index, up to ties in the index
    q = [index(kind, g) for g in GAMBLES]
    for a in AGENTS:
        v = [fn(a, g).value for g in GAMBLES]
        for i, j in itertools.combinations(range(len(GAMBLES)), 2):
            if abs(q[i] - q[j]) > 1e-12:
                assert (v[i] - v[j]) * (q[j] - q[i]) > 0


@pytest.mark.parametrize("fn", [f_ca, f_ce, f_rp])
def test_risk_aversion_consistency_numeric(fn):
    for g in GAMBLES:
        v = [fn(a, g).value for a in AGENTS]  # increasing rho
        assert all(b < a for a, b in zip(v, v[1:]))
