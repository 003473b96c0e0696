import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import fft as sfft

from oracles import sampled_level_coeffs, sampled_phi_coeffs
from polylog_lab.bump import make_bump
from polylog_lab.construction import (
    CoeffTable,
    NyquistError,
    analytic_coeffs_at,
    build_measure,
    coeff_convolve,
    divisor_count,
    f_coeff,
    f_envelope,
    f_level,
    level_count,
    level_from_q,
    level_table,
    levels_of,
    min_samples,
    phi_ip_coeff,
    phi_ip_eval,
    snapshot_bytes,
    snapshot_from_bytes,
    support_cover,
)
from polylog_lab.sequence import check_L, desk_adjust, gen_desk

BUMP = make_bump()


@pytest.fixture(scope="module")
def level1(desk_seq):
    return levels_of(desk_seq, 1)[0]


def test_level_basics(level1):
    assert level1.Q == 2 and level1.n_primes == 19
    assert np.all(level1.primes > level1.q_gamma / 2) and np.all(level1.primes <= level1.q_gamma)
    assert level_count(level1, 0) == level1.n_primes
    assert f_coeff(level1, 0) == pytest.approx(1.0, abs=1e-12)


def test_phi_coefficient_branches(level1):
    p = int(level1.primes[3])
    Q, q = level1.Q, level1.q
    assert phi_ip_coeff(level1, p, 0) == pytest.approx(1 - 1 / p)
    assert phi_ip_coeff(level1, p, Q) == pytest.approx(-BUMP.transform(Q / q) / p, rel=1e-14)
    assert phi_ip_coeff(level1, p, p * Q * 7) == pytest.approx((1 - 1 / p) * BUMP.transform(7 * p * Q / q), rel=1e-14)
    assert phi_ip_coeff(level1, p, Q + 1) == 0.0
    ks = np.arange(-5000, 5001)
    assert np.all(phi_ip_coeff(level1, p, ks[ks % Q != 0]) == 0)


@pytest.mark.parametrize("which", [0, -1])
def test_phi_coefficients_match_fft(level1, which):
    p = int(level1.primes[which])
    N, ref = sampled_phi_coeffs(level1, p, 10**4, BUMP)
    assert N >= 8 * level1.q * level1.Q
    ks = np.arange(10**4 + 1)
    assert np.max(np.abs(ref - phi_ip_coeff(level1, p, ks))) <= 1e-6


def test_phi_support(level1):
    p = int(level1.primes[0])
    M = p * level1.Q
    x = np.random.default_rng(1).uniform(0, 1, 200000)
    v = np.round(x * M)
    # distance to the nearest admissible centre (v not divisible by p)
    d = np.where(v % p != 0, np.abs(x - v / M), np.minimum(np.abs(x - (v - 1) / M), np.abs(x - (v + 1) / M)))
    vals = phi_ip_eval(level1, p, x)
    assert np.all(vals[d >= 1 / level1.q] == 0)
    assert np.all(vals >= 0)


def test_level_coefficients(level1):
    t = level_table(level1, 1e-14, kmax=int(20 * level1.q))
    assert t.lookup(0) == pytest.approx(1.0, abs=1e-12)
    ks = np.arange(1, 40001)
    assert np.all(f_coeff(level1, ks[ks % level1.Q != 0]) == 0)
    nz = t.k[t.k > 0]
    env = f_envelope(level1, nz)
    assert np.all(np.abs(t.lookup(nz)) <= env * (1 + 1e-12) + 1e-15)


def test_envelope_on_a_larger_level(desk_seq):
    lev = levels_of(desk_seq, 2)[1]
    j = np.unique(np.geomspace(1, 50 * lev.q / lev.Q, 200000).astype(np.int64))
    hits = np.concatenate([int(p) * np.arange(1, 200) for p in lev.primes])  # multiples of p Q
    ks = lev.Q * np.unique(np.concatenate([j, hits]))
    assert np.all(np.abs(f_coeff(lev, ks)) <= f_envelope(lev, ks) * (1 + 1e-12) + 1e-15)


def test_level_density_matches_fft(level1):
    F = f_level(level1)
    N = sfft.next_fast_len(int(40 * level1.q), real=True)
    vals = F(np.arange(N) / N)
    assert np.all(vals >= 0)
    assert np.mean(vals) == pytest.approx(1.0, abs=1e-9)
    spec = sfft.rfft(vals, overwrite_x=True) / N
    ks = np.arange(5001)
    assert np.max(np.abs(spec[:5001] - F.coeff(ks))) < 1e-6


def test_divisor_count(level1):
    p = int(level1.primes[5])
    assert divisor_count(level1, p * level1.Q) == 1
    assert divisor_count(level1, level1.Q) == 0


def test_centre_gaps_exhaustive(desk_seq, params):
    assert check_L(desk_seq.q[0], params).get("L8").passed
    for lev in levels_of(desk_seq):
        assert lev.min_centre_gap() > 2 / lev.q


def test_disjoint_prime_supports(level1):
    p, pt = int(level1.primes[0]), int(level1.primes[1])
    x = np.linspace(0, 1, 4_000_001)
    both = (phi_ip_eval(level1, p, x) > 0) & (phi_ip_eval(level1, pt, x) > 0)
    assert not both.any()


def test_support_cover_nested(desk_seq):
    cov = support_cover(desk_seq, 2)
    outer, inner = cov.intersection
    j = np.searchsorted(outer[:, 0], inner[:, 0], side="right") - 1
    assert np.all(j >= 0)
    assert np.all(inner[:, 1] <= outer[j, 1] + 1e-15)
    assert all(g > 2 * r for g, r in zip(cov.min_gaps, cov.radii))


def test_cover_growth_two_nonempty(params):
    seq = gen_desk(params, 1e6, 2, growth=2.0)
    cov = support_cover(seq, 2)
    assert cov.intersection[1].shape[0] > 0
    assert cov.min_gaps[1] > 2 * cov.radii[1]


def _random_table(data, n, span):
    ks = sorted(set(data.draw(st.lists(st.integers(1, span), min_size=1, max_size=n))))
    vals = [complex(data.draw(st.floats(-1, 1)), data.draw(st.floats(-1, 1))) for _ in ks]
    return CoeffTable(np.array([0] + ks), np.array([data.draw(st.floats(-1, 1))] + vals), span)


def _dense(t, span):
    out = np.zeros(2 * span + 1, complex)
    ks, vs = t.symmetric()
    out[ks + span] = vs
    return out


@settings(max_examples=60, deadline=None)
@given(st.data())
def test_convolution_matches_direct(data):
    A = _random_table(data, 12, 40)
    B = _random_table(data, 12, 40)
    C = coeff_convolve(A, B, 60)
    direct = np.convolve(_dense(A, 40), _dense(B, 40))  # index 0 <-> k = -80
    assert np.allclose(C.to_dense(60), direct[80:141], atol=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.data())
def test_table_hermitian(data):
    A = _random_table(data, 10, 30)
    ks = np.arange(-30, 31)
    v = A.lookup(ks)
    assert np.allclose(v[::-1], np.conj(v))


def test_prune_records_mass():
    t = CoeffTable.from_dense(np.array([1.0, 0.5, 1e-9, 2e-9, 0.1]))
    p = t.prune(1e-6)
    assert p.k.tolist() == [0, 1, 4]
    assert p.pruned_l1 == pytest.approx(2 * 3e-9)
    assert p.tail_l1 >= p.pruned_l1


def test_convolution_tail_bound(level1):
    full = level_table(level1, 1e-14, kmax=int(4 * level1.q))
    cut = level_table(level1, 1e-14, kmax=int(1.5 * level1.q))
    exact = coeff_convolve(full, full, 10000).to_dense(10000)
    approx = coeff_convolve(cut, cut, 10000)
    assert np.max(np.abs(approx.to_dense(10000) - exact)) <= approx.tail_l1
    assert full.tail_l1 < cut.tail_l1


def test_table_tail_bound_shrinks(level1):
    tails = [level_table(level1, 1e-14, kmax=int(m * level1.q)).tail_l1 for m in (2, 20, 60)]
    assert tails[0] > tails[1] > tails[2]
    assert tails[2] < 2e-3


@pytest.mark.parametrize("kind", ["mollifier", "polynomial"])
@pytest.mark.parametrize("xi0", [0.3, 2.0, 7.5])
def test_majorant_integral(kind, xi0):
    b = make_bump(kind)
    hi = 1024.0 if kind == "mollifier" else 1e5
    grid = np.geomspace(xi0, hi, 2_000_001)
    numeric = np.trapezoid(b.majorant(grid), grid)
    assert b.majorant_integral(xi0) == pytest.approx(numeric, rel=2e-3, abs=1e-15)


def test_min_samples_and_nyquist(desk_seq):
    need = min_samples(desk_seq.q[0], 1 << 14, BUMP)
    assert need % 8 == 0 and need >= 16
    with pytest.raises(NyquistError):
        build_measure(desk_seq, 1, 1 << 14, samples=need // 2)
    assert issubclass(NyquistError, ValueError)


def test_level1_snapshot(snap1, desk_seq):
    assert snap1.coeffs[0] == pytest.approx(1.0, abs=1e-13)
    assert snap1.cross_check["max_abs_diff"] < 1e-10
    assert snap1.mass == pytest.approx(1.0, rel=1e-6)
    assert np.min(snap1.values) >= -1e-9


def test_level1_snapshot_matches_dense_fft(snap1, level1):
    _, spec = sampled_level_coeffs(level1, snap1.K, make_bump())
    assert np.max(np.abs(spec - snap1.coeffs)) < 1e-6


def test_level2_snapshot(snap2):
    assert snap2.m == 2 and snap2.K >= 10**6
    assert snap2.cross_check["max_abs_diff"] < 1e-9
    assert snap2.trunc_bound <= 1e-9
    assert snap2.coeffs[0].real > 0
    assert snap2.mass == pytest.approx(snap2.coeffs[0].real, rel=1e-6)
    assert np.min(snap2.values) >= -1e-9
    assert np.allclose(snap2.coeff(-5), np.conj(snap2.coeff(5)))
    with pytest.raises(ValueError):
        snap2.coeff(snap2.K + 1)


def test_level2_extra_convolution_points(snap2):
    ks = np.array([5, 17, 1234, 98765, 500001])
    ana = analytic_coeffs_at(snap2.levels(), ks, BUMP)
    assert np.max(np.abs(ana - snap2.coeffs[ks])) < 1e-9


def test_density_agrees_with_grid(snap2):
    idx = np.random.default_rng(0).integers(0, snap2.n_intervals, 50)
    X = snap2.nodes()[idx]
    v = snap2.values[idx]
    # absolute abscissae carry an ulp-sized shift, amplified by the steep bump flanks
    h = snap2.offsets[1] - snap2.offsets[0]
    shift = 16 * np.spacing(X) * np.abs(np.gradient(v, h, axis=1))
    assert np.all(np.abs(snap2.density(X.ravel()).reshape(X.shape) - v) <= shift + 1e-9 * np.abs(v) + 1e-15)


def test_ball_mass(snap2):
    assert snap2.ball_mass(0.5, 2.0) == pytest.approx(snap2.mass, rel=1e-12)
    c = snap2.centres[10]
    single = snap2.ball_mass(c, snap2.halfwidth * 1.0001)
    row = snap2.values[10] @ snap2.node_weights
    assert single == pytest.approx(row, rel=1e-9)
    with pytest.raises(ValueError):
        snap2.ball_mass(0.5, 0.0)
    ys = np.linspace(0, 1, 1001)
    assert np.all(np.diff(snap2.cdf(ys)) >= 0)


def test_uniform_snapshot(snap0):
    assert snap0.m == 0 and snap0.mass == pytest.approx(1.0)
    assert snap0.coeffs[0] == 1 and not np.any(snap0.coeffs[1:])


def test_snapshot_round_trip(snap1):
    data = snapshot_bytes(snap1, "abc")
    back = snapshot_from_bytes(data)
    assert np.array_equal(back.coeffs, snap1.coeffs)
    assert np.array_equal(back.values, snap1.values)
    assert back.q == snap1.q and back.m == snap1.m
    bad = bytearray(data)
    bad[-5] ^= 0xFF
    with pytest.raises(ValueError, match="checksum"):
        snapshot_from_bytes(bytes(bad))
    with pytest.raises(ValueError):
        snapshot_from_bytes(b"junk\n")


def test_level_from_q_consistent(params):
    q, Q = desk_adjust(2e6, params)
    lev = level_from_q(q, Q, params)
    assert lev.Q == Q and math.isfinite(lev.q_gamma)
    with pytest.raises(ValueError):
        levels_of(gen_desk(params, 1e6, 1), 2)
