import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from polylog_lab.exponents import (
    DIVERGENT,
    INCONCLUSIVE,
    SUMMABLE,
    DecayEnvelope,
    DimensionFunction,
    DomainError,
    ExponentParams,
    beta,
    gamma,
    gamma_term,
    general_flip,
    log_gamma_term,
    log_gamma_term_general,
    log_pow_beta,
    polylog_exponent,
    polylog_flip,
    pow_beta,
    pow_gamma,
    pow_s,
    restriction_threshold,
    s_exponent,
    stm_threshold,
    summability_probe,
)

P22 = ExponentParams(2.0, 0.5)
EE = math.exp(math.e)

# frozen mpmath (40 digits) evaluations of the defining formulas
GAMMA_1E6_R2 = 0.3801223130277022811
POW_BETA_1E6 = 1.986851024327909265
GAMMA_TERM_K10 = 0.07109794386391473936


def test_params_validation():
    with pytest.raises(ValueError):
        ExponentParams(0.0, 1.0)
    with pytest.raises(ValueError):
        ExponentParams(1.0, -1.0)
    with pytest.raises(ValueError):
        ExponentParams(float("nan"), 1.0)
    with pytest.raises(ValueError):
        ExponentParams(1.0, 0.5).require_restriction()


def test_gamma_at_e_to_e():
    assert gamma(EE, ExponentParams(2, 1)) == pytest.approx(2 / math.e, rel=1e-14)
    assert gamma(EE, ExponentParams(1, 1)) == pytest.approx(1 / math.e, rel=1e-14)


def test_gamma_oracle_value():
    assert gamma(1e6, P22) == pytest.approx(GAMMA_1E6_R2, rel=1e-13)
    # the rounded value 0.38014 quoted alongside the formula is within 1e-4
    assert abs(gamma(1e6, P22) - 0.38014) < 1e-4


@pytest.mark.parametrize("bad", [0.0, -1.0, 1.0])
def test_gamma_domain(bad):
    with pytest.raises(DomainError):
        gamma(bad, P22)
    with pytest.raises(ValueError):
        pow_gamma(bad, P22)


def test_pow_closed_forms():
    assert pow_gamma(EE, ExponentParams(2, 1)) == pytest.approx(math.e**2, rel=1e-13)
    assert pow_beta(1e6, P22) == pytest.approx(POW_BETA_1E6, rel=1e-13)
    L = math.log(1e6)
    assert pow_s(1e6, P22) == pytest.approx(1e6 / L ** (P22.a * P22.r), rel=1e-13)


def test_beta_and_s_at_e_to_e():
    p = ExponentParams(1, 1)
    assert beta(EE, p) == pytest.approx(1 - 3 / math.e, rel=1e-13)
    assert s_exponent(EE, p) == pytest.approx(1 - 1 / math.e, rel=1e-13)


@settings(max_examples=100, deadline=None)
@given(st.floats(1.0001, 1e300), st.floats(0.1, 10), st.floats(0.01, 5))
def test_s_equals_beta_plus_two_gamma(x, r, a):
    p = ExponentParams(r, a)
    assert s_exponent(x, p) - beta(x, p) - 2 * gamma(x, p) == pytest.approx(0, abs=1e-12 * max(1, abs(gamma(x, p))))


@settings(max_examples=100, deadline=None)
@given(st.floats(0.001, 700), st.floats(0.1, 10))
def test_pow_gamma_reciprocal(logx, r):
    p = ExponentParams(r, 1.0)
    assert pow_gamma(log_x=logx, params=p) * pow_gamma(log_x=-logx, params=p) == pytest.approx(1.0, rel=1e-14)


def test_extreme_arguments_finite():
    x = mpmath.exp(mpmath.mpf(10) ** 8)
    v = pow_beta(x, P22)
    assert mpmath.isfinite(v) and v > 0
    assert np.isfinite(log_pow_beta(log_x=1e8, params=P22))
    assert np.isfinite(gamma(log_x=1e8, params=P22))


def test_gamma_term_at_p1():
    for k in (2, 5, 40):
        expected = math.log(k - 1) + math.log(math.log(2))
        assert log_gamma_term(k, 1.0, 0.0, P22) == pytest.approx(-P22.r * expected, rel=1e-13)
    assert gamma_term(2, 1.0, 0.0, P22) == pytest.approx(math.log(2) ** -2, rel=1e-13)


def test_gamma_term_oracle():
    assert gamma_term(10, 1.1, 0.0, P22) == pytest.approx(GAMMA_TERM_K10, rel=1e-12)


def test_gamma_term_errors():
    with pytest.raises(ValueError):
        gamma_term(10, 2.0, 0.0, P22)
    with pytest.raises(ValueError):
        gamma_term(10, 0.9, 0.0, P22)
    with pytest.raises(ValueError):
        gamma_term(1, 1.1, 0.0, P22)


def test_gamma_term_monotone_below_threshold():
    ks = np.unique(np.geomspace(2, 1e6, 2000).astype(np.int64))
    v = log_gamma_term(ks, 1.1, 0.0, P22)
    assert np.all(np.diff(v) < 0)


def test_gamma_term_huge_index():
    v = log_gamma_term(1 << 16384, 1.1, 0.0, P22)
    assert math.isfinite(v) and v < 0


def test_general_term_power_pair_closed_form():
    g = DecayEnvelope.power(0.5)
    h = DimensionFunction.power(0.5)
    for p in (1.0, 1.1, 1.5):
        for k in (2, 7, 30):
            expected = (-(k - 1) / 4 * (2 / p - 1) + k / 2 * (2 - 2 / p)) * math.log(2)
            assert log_gamma_term_general(k, p, g, h) == pytest.approx(expected, rel=1e-13, abs=1e-13)


def test_general_term_at_p1_is_envelope():
    g = DecayEnvelope.polylog(2.0)
    for h in (DimensionFunction.power(0.3), DimensionFunction.log_corrected(P22)):
        for k in (3, 9):
            assert log_gamma_term_general(k, 1.0, g, h) == pytest.approx(float(g.log_g(math.log(2.0 ** (k - 1)))))


def test_general_term_reproduces_polylog_term():
    eps = 0.05
    g = DecayEnvelope.polylog(P22.r, eps)
    h = DimensionFunction.log_corrected(P22, eps)
    for p in (1.05, 1.15, 1.4):
        for k in (4, 20, 200):
            assert log_gamma_term_general(k, p, g, h) == pytest.approx(log_gamma_term(k, p, eps, P22), rel=1e-12)


def test_envelope_and_gauge_shape():
    g = DecayEnvelope.polylog(2.0)
    assert g.is_nonincreasing(np.linspace(1.1, 50, 200))
    h = DimensionFunction.log_corrected(P22)
    t = np.geomspace(1e-12, 0.05, 200)
    assert np.all(np.diff(h(t)) > 0)
    assert h.doubling_constant(t) < 3
    with pytest.raises(ValueError):
        DecayEnvelope.power(0)
    with pytest.raises(ValueError):
        DecayEnvelope.polylog(1.0, 1.0)


def test_probe_trivial_cases():
    assert summability_probe(lambda k: 2.0**-k, 1 << 20).verdict == SUMMABLE
    assert summability_probe(lambda k: 1.0 / k, 1 << 20).verdict == DIVERGENT
    with pytest.raises(ValueError):
        summability_probe(lambda k: 1.0 / k, 4)


def test_probe_boundary_never_summable():
    v = summability_probe(lambda k: log_gamma_term(k, 1.2, 0.0, P22), 1 << 16384, log_terms=True).verdict
    assert v in (INCONCLUSIVE, DIVERGENT)
    assert polylog_exponent(1.2, 0.0, P22) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("r,a,expected", [(2, 0.5, 1.2), (1.5, 1, 1 + 0.5 / 5.5), (3, 0.1, 1 + 2 / 4.6)])
def test_restriction_threshold(r, a, expected):
    assert restriction_threshold(ExponentParams(r, a)) == pytest.approx(expected, rel=1e-14)


def test_threshold_limit_monotone():
    vals = [restriction_threshold(ExponentParams(r, 1e-3)) for r in (10, 100, 1000)]
    assert vals[0] < vals[1] < vals[2] < 2
    assert 2 - vals[2] < 5e-3


def test_stm_threshold():
    assert stm_threshold(0.5, 0.5) == pytest.approx(1.2)
    sup = max(stm_threshold(al, 0.5) for al in np.linspace(0.01, 0.9999, 400))
    assert sup == pytest.approx(2.0, abs=1e-3)
    assert stm_threshold(1e-9, 1e-9) == pytest.approx(1.0, abs=1e-6)
    with pytest.raises(ValueError):
        stm_threshold(1.0, 0.5)
    with pytest.raises(ValueError):
        stm_threshold(0.5, 0.0)


@pytest.mark.parametrize("r", [1.5, 2.0, 4.0])
@pytest.mark.parametrize("a", [0.2, 1.0])
def test_probe_brackets_threshold(r, a):
    p = ExponentParams(r, a)
    ps = restriction_threshold(p)

    def verdict(x):
        return summability_probe(lambda k: log_gamma_term(k, x, 0.0, p), 1 << 16384, log_terms=True).verdict

    assert verdict(ps - 0.01) == SUMMABLE
    assert verdict(ps + 0.01) == DIVERGENT


def test_flip_matches_threshold():
    assert polylog_flip(P22) == pytest.approx(1.2, abs=1e-3)


def test_general_flip_matches_stm():
    g = DecayEnvelope.power(0.5)
    h = DimensionFunction.power(0.5)
    assert general_flip(g, h) == pytest.approx(stm_threshold(0.5, 0.5), abs=1e-3)
