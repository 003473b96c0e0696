import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from polylog_lab.analysis import (
    SmoothWindow,
    box_counts,
    box_dimension,
    cantor_intervals,
    decay_profile,
    default_trig_window,
    divisor_bound_check,
    fit_log_exponent,
    frostman_profile,
    integer_envelope,
    lemma1_suite,
    lemma2_suite,
    offgrid_transform,
    product_discrepancy,
    psi_norm,
    sup_ball_mass,
    upper_envelope,
)
from polylog_lab.construction import divisor_count, f_coeff, level_from_q, levels_of, support_cover
from polylog_lab.exponents import ExponentParams
from polylog_lab.sequence import desk_adjust


@pytest.fixture(scope="module")
def level1(desk_seq):
    return levels_of(desk_seq, 1)[0]


def _planted(K, r, seed=0):
    """``|c(k)| = u_k / log^r k`` with ``u_k`` in ``[0.5, 1]`` and bin maxima near 1."""
    rng = np.random.default_rng(seed)
    k = np.arange(K + 1, dtype=float)
    c = np.zeros(K + 1, complex)
    u = rng.uniform(0.5, 1.0, K - 1)
    u[::7] = 1.0  # every log bin above k = 100 holds a planted maximum
    c[2:] = u * np.exp(1j * rng.uniform(0, 2 * np.pi, K - 1)) / np.log(k[2:]) ** r
    c[0] = 1.0
    return c


# -- decay


@pytest.mark.parametrize("r", [1.0, 2.0, 3.5])
def test_planted_envelope_recovered(r):
    c = _planted(200_000, r)
    ks = np.arange(100, c.size)
    fit = fit_log_exponent(ks, np.abs(c[ks]))
    assert fit.r_hat == pytest.approx(r, rel=0.01)
    assert fit.polylog
    rep = decay_profile(c, ExponentParams(r, 0.5), eps=0.25)
    assert rep.conforming and rep.ratio <= 1.0 + 1e-12


def test_planted_envelope_resolves_one_percent():
    ks = np.arange(100, 200_001)
    fits = [fit_log_exponent(ks, np.abs(_planted(200_000, r)[ks])).r_hat for r in (1.98, 2.0, 2.02)]
    assert fits[0] < fits[1] < fits[2]
    assert fits[2] - fits[0] == pytest.approx(0.04, rel=0.1)


def test_power_law_is_not_polylog():
    k = np.arange(100, 200_001, dtype=float)
    fit = fit_log_exponent(k, k**-0.5)
    assert not fit.polylog


@settings(max_examples=25, deadline=None)
@given(st.floats(1e-6, 1e6))
def test_decay_ratio_scale_invariant(s):
    c = _planted(5000, 2.0)
    p = ExponentParams(2.0, 0.5)
    a = decay_profile(c, p, fit=False)
    b = decay_profile(c * s, p, fit=False)
    assert b.ratio == pytest.approx(a.ratio, rel=1e-9)


def test_decay_profile_errors():
    c = _planted(5000, 2.0)
    p = ExponentParams(2.0, 0.5)
    with pytest.raises(ValueError):
        decay_profile(c, p, band=(10, 4000))
    with pytest.raises(ValueError):
        decay_profile(c, p, band=(1000, 10_000))
    with pytest.raises(ValueError):
        fit_log_exponent(np.arange(100, 120), np.ones(20))
    with pytest.raises(ValueError):
        fit_log_exponent(np.arange(100, 200), np.zeros(100))


def test_uniform_decay_is_degenerate(snap0, params):
    rep = decay_profile(snap0, params)
    assert not rep.conforming
    assert any("non-conforming" in n for n in rep.notes)


def test_level1_decay_products_finite(snap1, params):
    rep = decay_profile(snap1, params)
    assert np.all(np.isfinite(rep.products))
    assert math.isfinite(rep.ratio) and rep.ratio > 0


def test_upper_envelope_bins():
    rng = np.random.default_rng(1)
    ks = np.arange(10, 10_000)
    m = rng.random(ks.size)
    ek, em = upper_envelope(ks, m, 20)
    assert em.max() == m.max()
    assert np.all(np.diff(ek) > 0)
    assert set(ek.tolist()) <= set(ks.tolist())


# -- Frostman


def test_uniform_frostman_control(snap0, params):
    rep = frostman_profile(snap0, params)
    assert rep.monotone and rep.conforming


def test_small_radius_localises(snap2):
    rows = snap2.values @ snap2.node_weights
    s = sup_ball_mass(snap2, snap2.halfwidth * 1.001)
    assert rows.max() * (1 - 1e-9) <= s <= 2 * rows.max()


def test_level1_frostman(snap1, params):
    rep = frostman_profile(snap1, params)
    assert np.all(np.isfinite(rep.ratios)) and np.all(rep.ratios > 0)
    # regression bound at the measured 10.09
    assert rep.max_over_median < 12
    assert rep.refinement["max_relative_gain"] <= 0.02


def test_frostman_needs_a_radius(snap2, params):
    with pytest.raises(ValueError):
        frostman_profile(snap2, params, radii=[])


# -- divisor bound


def test_divisor_bound_desk_window(level1):
    rep = divisor_bound_check(level1, 100_000)
    assert rep.violations.size == 0 and rep.min_slack >= 0


def test_divisor_single_prime_and_floor(level1):
    for p in level1.primes:
        assert divisor_count(level1, int(p) * level1.Q) == 1
        assert p >= math.sqrt(level1.q_gamma)


def test_divisor_bound_rejects_trivial_Q(level1):
    with pytest.raises(ValueError):
        divisor_bound_check(dataclasses.replace(level1, Q=1), 100)


@pytest.mark.parametrize("q", [2e6, 3e6, 1e7])
def test_divisor_bound_other_windows(q, params):
    qq, Q = desk_adjust(q, params)
    rep = divisor_bound_check(level_from_q(qq, Q, params), 100_000)
    assert rep.violations.size == 0


# -- windows


@pytest.mark.parametrize("a,b,eps", [(0.3, 0.7, 0.1), (0.1, 0.9, 0.05), (0.45, 0.55, 0.02)])
def test_plateau_decay_and_shape(a, b, eps):
    w = SmoothWindow.plateau(a, b, eps)
    assert w.check_decay() <= 1.0
    assert w((a + b) / 2) == pytest.approx(1.0, abs=1e-12)
    assert w(a - eps - 1e-9) == pytest.approx(0.0, abs=1e-12)
    x = np.linspace(0, 1, 200_001)
    assert w.transform(0.0).real == pytest.approx(np.trapezoid(w(x), x), rel=1e-7)


def test_plateau_rejects_bad_geometry():
    with pytest.raises(ValueError):
        SmoothWindow.plateau(0.05, 0.5, 0.1)
    with pytest.raises(ValueError):
        SmoothWindow.trig({1: 1.0})


def test_constant_window_reproduces_coefficients(snap2):
    w = SmoothWindow.constant()
    for n in [0, 3, 77, 1234]:
        v = offgrid_transform(snap2, w, float(n))
        assert v.value == pytest.approx(complex(snap2.coeff(n)), abs=1e-15)
        assert v.tail_bound == 0.0


def test_offgrid_range_check(snap1):
    with pytest.raises(ValueError):
        offgrid_transform(snap1, SmoothWindow.plateau(0.3, 0.7, 0.1), snap1.K - 1.5)


def test_integer_envelope_monotone(snap1):
    E = integer_envelope(snap1)
    assert np.all(np.diff(E) <= 0)
    assert E[0] == pytest.approx(abs(snap1.coeffs).max())


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_psi_norm_below_bound(deg, seed):
    rng = np.random.default_rng(seed)
    c = {0: complex(rng.normal())}
    for j in range(1, deg + 1):
        v = complex(rng.normal(), rng.normal())
        c[j], c[-j] = v, v.conjugate()
    w = SmoothWindow.trig(c)
    n = psi_norm(w, ExponentParams(2.0, 0.5))
    assert n.value <= n.upper_bound * (1 + 1e-9)
    assert w.check_decay() <= 1.0 + 1e-9


def test_psi_norm_plateau():
    n = psi_norm(SmoothWindow.plateau(0.3, 0.7, 0.1), ExponentParams(2.0, 0.5))
    assert n.tail <= 1e-10
    assert n.value <= n.upper_bound


def test_discrepancy_envelopes_meet_at_q(params):
    qq, Q = desk_adjust(1e5, params)
    rep = product_discrepancy(default_trig_window(), level_from_q(qq, Q, params), params)
    assert rep.envelope_at_q[0] == pytest.approx(rep.envelope_at_q[1], rel=1e-12)
    assert rep.ratio_low > 0 and rep.ratio_high > 0


def test_discrepancy_matches_brute_force(params):
    qq, Q = desk_adjust(3e6, params)
    lev = level_from_q(qq, Q, params)
    w = SmoothWindow.trig({0: 1.0, 1: 0.5j, -1: -0.5j, 3: 0.2, -3: 0.2})
    rep = product_discrepancy(w, lev, params, k_high=1.5)
    ks = np.arange(0, int(1.5 * qq) + 1)
    disc = np.zeros(ks.size, complex)
    for j, cj in w._trig.items():
        l = ks - j
        ok = (l != 0) & (l % Q == 0)
        disc[ok] += cj * f_coeff(lev, l[ok])
    low = ks <= qq
    assert rep.sup_low == pytest.approx(np.abs(disc[low]).max(), rel=1e-12)
    kh = ks[~low | (ks == int(qq))].astype(float)
    env = rep.norm * np.log(np.log(np.maximum(kh, qq))) / np.log(np.maximum(kh, qq)) ** params.r
    assert rep.ratio_high == pytest.approx((np.abs(disc[~low | (ks == int(qq))]) / env).max(), rel=1e-12)


def test_discrepancy_rejects_plateau(level1, params):
    with pytest.raises(ValueError):
        product_discrepancy(SmoothWindow.plateau(0.3, 0.7, 0.1), level1, params)


# -- box counting


def test_cantor_slope():
    rep = box_dimension(cantor_intervals(14), 3.0 ** -np.arange(2, 13))
    assert rep.slope == pytest.approx(math.log(2) / math.log(3), abs=0.02)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(st.floats(0, 1), st.floats(0, 0.1)), min_size=1, max_size=30),
       st.floats(1e-4, 0.5))
def test_box_counts_monotone(ivs, delta):
    iv = np.array([[a, a + w] for a, w in ivs])
    n1 = box_counts(iv, delta)
    n2 = box_counts(iv, delta / 2)
    assert 1 <= n1 <= n2
    assert n2 <= 2 * n1 + iv.shape[0]


def test_box_counts_single_interval():
    assert box_counts(np.array([[0.0, 0.5]]), 0.125) == 5


@pytest.mark.xfail(strict=True, reason="the depth-2 cover is still far from full dimension at reachable scales")
def test_level2_box_slope_near_one(desk_seq, params):
    cov = support_cover(desk_seq, 2)
    deltas = 2.0 ** -np.arange(2, int(math.ceil(math.log2(desk_seq.q[0]))))
    rep = box_dimension(cov, deltas, params.a * params.r)
    assert 0.9 <= rep.slope <= 1.0


# -- lemma suites


def test_lemma1_small(snap2):
    rep = lemma1_suite(snap2, count=20, n_quadrature=2)
    assert rep.constant <= 3
    assert rep.integer_consistency < 1e-9
    assert rep.tail_bound < 1e-9
    assert rep.xi.size == 20 and np.all(rep.xi != np.floor(rep.xi))


def test_lemma2_spreads(params):
    levels = []
    for q in [1e6, 1e7, 1e8]:
        qq, Q = desk_adjust(q, params)
        levels.append(level_from_q(qq, Q, params))
    rep = lemma2_suite(params, levels)
    assert 1.0 <= rep.spread("low") < 10 and 1.0 <= rep.spread("high") < 10
    assert math.isfinite(rep.constant())
