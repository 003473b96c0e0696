"""Checks of the decay, growth and arithmetic estimates on built snapshots.

Every implicit constant is unknown, so the checks are calibrated: a
statistic is measured on a calibration band and the rest of the range is
compared against it.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .bump import Bump, make_bump
from .construction import Level, MeasureSnapshot, divisor_count
from .exponents import ExponentParams
from .sequence import log_weighted_zeta


# ---------------------------------------------------------------------------
# Fourier decay


@dataclass
class FitResult:
    """Least-squares exponent of ``|c(k)| ~ C log^{-r} k`` over upper-envelope points."""

    r_hat: float
    ci: tuple
    n_points: int
    residual: float
    polylog: bool
    r_lower_half: float
    r_upper_half: float


def upper_envelope(ks: np.ndarray, mags: np.ndarray, bins: int = 48):
    """Bin maxima of ``mags`` over log-spaced bins of ``ks`` (empty bins dropped)."""
    ks = np.asarray(ks)
    mags = np.asarray(mags)
    edges = np.unique(np.round(np.geomspace(ks.min(), ks.max() + 1, bins + 1)).astype(np.int64))
    idx = np.searchsorted(edges, ks, side="right") - 1
    out_k, out_m = [], []
    for b in range(edges.size - 1):
        sel = idx == b
        if not sel.any():
            continue
        j = np.argmax(mags[sel])
        out_k.append(ks[sel][j])
        out_m.append(mags[sel][j])
    return np.array(out_k), np.array(out_m)


def _slope(x, y):
    A = np.vstack([np.ones_like(x), x]).T
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    return coef, y - A @ coef


def fit_log_exponent(ks, mags, *, floor: float = 1e-14, bins: int = 48, n_boot: int = 400,
                     seed: int = 0, polylog_tol: float = 0.2) -> FitResult:
    """Fit ``log|c| = C - r log log k`` on the upper envelope.

    ``polylog`` is false when the exponents fitted on the lower and upper
    halves of the band (in ``log log k``) differ by more than ``polylog_tol``
    relative, as happens for power laws.
    """
    ks = np.asarray(ks, dtype=float)
    mags = np.abs(np.asarray(mags))
    if ks.size < 50:
        raise ValueError("need at least 50 coefficients in the band")
    live = mags > floor
    if not live.any():
        raise ValueError("degenerate band: every coefficient is below the floor")
    ek, em = upper_envelope(ks[live], mags[live], bins)
    if ek.size < 4:
        raise ValueError("degenerate band: too few envelope points")
    x = np.log(np.log(ek))
    y = np.log(em)
    coef, res = _slope(x, y)
    r_hat = -coef[1]
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    boots = []
    for _ in range(n_boot):
        i = rng.integers(0, x.size, x.size)
        if np.ptp(x[i]) == 0:
            continue
        boots.append(-_slope(x[i], y[i])[0][1])
    ci = (float(np.percentile(boots, 2.5)), float(np.percentile(boots, 97.5)))
    mid = np.median(x)
    lo, hi = x <= mid, x >= mid
    r_lo = -_slope(x[lo], y[lo])[0][1] if lo.sum() >= 2 else math.nan
    r_hi = -_slope(x[hi], y[hi])[0][1] if hi.sum() >= 2 else math.nan
    denom = max(abs(r_hat), 1e-12)
    polylog = bool(abs(r_hi - r_lo) / denom <= polylog_tol)
    return FitResult(float(r_hat), ci, int(ek.size), float(np.sqrt(np.mean(res**2))), polylog,
                     float(r_lo), float(r_hi))


@dataclass
class DecayReport:
    """Envelope products ``|G_hat(k)| log^{r-eps} k`` and their calibration.

    ``ratio`` is the band supremum divided by the calibration-band supremum;
    ``conforming`` requires ``ratio <= limit`` and a nondegenerate band.
    """

    band: tuple
    calibration_band: tuple
    eps: float
    exponent: float
    ks: np.ndarray
    magnitudes: np.ndarray
    products: np.ndarray
    calibration: float
    band_sup: float
    ratio: float
    limit: float
    fit: FitResult | None
    conforming: bool
    notes: list = field(default_factory=list)

    def csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["k", "abs_coeff", "envelope_product"])
        for k, m, p in zip(self.ks, self.magnitudes, self.products):
            w.writerow([int(k), repr(float(m)), repr(float(p))])
        return buf.getvalue()


def decay_profile(coeffs, params: ExponentParams, eps: float = 0.25, band=None,
                  calibration_band=(100, 1000), limit: float = 5.0, floor: float = 1e-14,
                  fit: bool = True) -> DecayReport:
    """Calibrated polylog-decay check on coefficients ``coeffs[k]``, ``k = 0..K``.

    ``coeffs`` may be a snapshot or an array indexed by ``k``.
    """
    arr = coeffs.coeffs if isinstance(coeffs, MeasureSnapshot) else np.asarray(coeffs)
    K = arr.size - 1
    band = (1000, K) if band is None else (int(band[0]), int(band[1]))
    k1, k2 = band
    c1, c2 = int(calibration_band[0]), int(calibration_band[1])
    if min(k1, c1) < 16:
        raise ValueError("bands must start at k >= 16")
    if k2 > K or c2 > K or k1 >= k2 or c1 >= c2:
        raise ValueError(f"bands must be nonempty and within the stored range 0..{K}")
    expo = params.r - eps
    ks = np.arange(k1, k2 + 1)
    mags = np.abs(arr[k1:k2 + 1])
    prods = mags * np.log(ks) ** expo
    cal_k = np.arange(c1, c2 + 1)
    cal = float(np.max(np.abs(arr[c1:c2 + 1]) * np.log(cal_k) ** expo))
    sup = float(np.max(prods))
    notes = []
    degenerate = cal <= floor or not np.any(mags > floor)
    if degenerate:
        notes.append("non-conforming: coefficients vanish on the bands, no polylogarithmic decay is observable")
        ratio = math.inf
    else:
        ratio = sup / cal
    fr = None
    if fit and not degenerate:
        try:
            fr = fit_log_exponent(ks, mags, floor=floor)
        except ValueError as exc:
            notes.append(f"fit unavailable: {exc}")
    conforming = (not degenerate) and ratio <= limit
    return DecayReport(band, (c1, c2), eps, expo, ks, mags, prods, cal, sup, ratio, limit, fr,
                       conforming, notes)


# ---------------------------------------------------------------------------
# Frostman profile


@dataclass
class FrostmanReport:
    radii: np.ndarray
    sup_mass: np.ndarray
    ratios: np.ndarray
    median: float
    max_over_median: float
    flagged: np.ndarray
    trend: float
    monotone: bool
    refinement: dict
    eps: float

    @property
    def conforming(self) -> bool:
        return bool(self.max_over_median <= 10.0)

    def csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["R", "sup_ball_mass", "ratio", "flagged"])
        for R, s, r, f in zip(self.radii, self.sup_mass, self.ratios, self.flagged):
            w.writerow([repr(float(R)), repr(float(s)), repr(float(r)), int(f)])
        return buf.getvalue()


def _support_span(snap: MeasureSnapshot):
    lo = snap.centres - snap.halfwidth
    hi = snap.centres + snap.halfwidth
    return lo, hi


def _candidate_centres(snap: MeasureSnapshot, R: float, step: float) -> np.ndarray:
    """Points with spacing ``step`` covering every ``R``-neighbourhood of the support."""
    lo, hi = _support_span(snap)
    a, b = lo - R, hi + R
    # merge overlapping neighbourhoods
    order = np.argsort(a)
    a, b = a[order], b[order]
    run_b = np.maximum.accumulate(b)
    start = np.concatenate([[True], a[1:] > run_b[:-1]])
    ms = a[start]
    me = run_b[np.concatenate([np.nonzero(start)[0][1:] - 1, [a.size - 1]])]
    counts = np.ceil((me - ms) / step).astype(np.int64) + 1
    offs = np.cumsum(counts) - counts
    idx = np.arange(int(counts.sum())) - np.repeat(offs, counts)
    return np.repeat(ms, counts) + idx * step


def sup_ball_mass(snap: MeasureSnapshot, R: float, step: float | None = None, chunk: int = 4_000_000) -> float:
    """``sup_x mu(B(x, R))`` over candidate centres of spacing ``max(1/(4 q_m), R/32)``."""
    if step is None:
        step = max(snap.halfwidth / 4, R / 32)
    xs = _candidate_centres(snap, R, step)
    best = 0.0
    for i in range(0, xs.size, chunk):
        best = max(best, float(np.max(snap.ball_mass(xs[i:i + chunk], R))))
    return best


def frostman_profile(snap: MeasureSnapshot, params: ExponentParams, eps: float = 0.1, radii=None,
                     refine_at: int = 3) -> FrostmanReport:
    """Normalised sup ball masses ``sup mu(B(x,R)) / (R log^{ar+eps}(1/R))`` over dyadic ``R``.

    The refinement cross-check repeats ``refine_at`` radii on a 10x finer
    candidate grid and records the worst relative change.
    """
    lo_R = snap.halfwidth if snap.m > 0 else 1e-6
    if radii is None:
        j0 = math.ceil(math.log2(3))
        j1 = math.floor(-math.log2(lo_R))
        radii = 2.0 ** -np.arange(j0, j1 + 1)
        radii = radii[(radii > lo_R) & (radii < 1 / 3)]
    radii = np.asarray(radii, dtype=float)
    if radii.size == 0:
        raise ValueError("no dyadic radius in range")
    sups = np.array([sup_ball_mass(snap, R) for R in radii])
    expo = params.a * params.r + eps
    ratios = sups / (radii * np.log(1 / radii) ** expo)
    med = float(np.median(ratios))
    mom = float(np.max(ratios) / med) if med > 0 else math.inf
    flagged = ratios > 10 * med
    # trend: slope of log ratio against log(1/R)
    trend = float(np.polyfit(np.log(1 / radii), np.log(ratios), 1)[0]) if radii.size > 1 else 0.0
    order = np.argsort(radii)
    rs = ratios[order]
    monotone = bool(np.all(np.diff(rs) >= -1e-12 * rs[1:]) or np.all(np.diff(rs) <= 1e-12 * rs[1:]))
    refine = {}
    if refine_at:
        pick = radii[np.linspace(0, radii.size - 1, min(refine_at, radii.size)).astype(int)]
        worst = 0.0
        for R in pick:
            step = max(snap.halfwidth / 4, R / 32)
            fine = sup_ball_mass(snap, R, step / 10)
            coarse = sup_ball_mass(snap, R, step)
            worst = max(worst, (fine - coarse) / fine if fine > 0 else 0.0)
        refine = {"radii": [float(r) for r in pick], "max_relative_gain": worst}
    return FrostmanReport(radii, sups, ratios, med, mom, flagged, trend, monotone, refine, eps)


# ---------------------------------------------------------------------------
# divisor bound


@dataclass
class DivisorReport:
    min_slack: float
    violations: np.ndarray
    n_checked: int
    kmax: int


def divisor_bound_check(level: Level, kmax: int) -> DivisorReport:
    """Brute force ``#{p : pQ | k} <= max(2 log(|k|/Q) / log q^gamma, 0)`` for ``1 <= |k| <= kmax``.

    Counts and bounds are even in ``k``, so ``k > 0`` covers both signs.
    Indices not divisible by ``Q`` have count 0 and nonnegative bound.
    """
    if level.Q < 2:
        raise ValueError("Q must be at least 2")
    if not math.isfinite(level.q_gamma):
        raise ValueError("level has no q ** gamma(q) recorded")
    ks = np.arange(level.Q, kmax + 1, level.Q, dtype=np.int64)
    lP = math.log(level.q_gamma)
    bound = np.maximum(2 * np.log(ks / level.Q) / lP, 0.0)
    count = divisor_count(level, ks)
    slack = bound - count
    min_slack = float(slack.min()) if ks.size else math.inf
    if kmax >= 1:
        min_slack = min(min_slack, 0.0 if level.Q > 1 else math.inf) if ks.size == 0 else min_slack
    return DivisorReport(min_slack, ks[slack < 0], int(kmax), int(kmax))


# ---------------------------------------------------------------------------
# smooth windows


@dataclass
class SmoothWindow:
    """Smooth ``psi`` on ``[0, 1]`` with real-line transform ``psi_hat``.

    ``degree`` is the spectral degree for trigonometric polynomials (``None``
    otherwise); ``coeff`` and ``transform`` coincide at integers because the
    windows are supported in ``[0, 1]`` or are trigonometric polynomials.
    """

    kind: str
    params: dict
    degree: int | None
    sup: float
    sup_second: float
    _trig: dict = field(default_factory=dict, repr=False)

    # -- constructors
    @classmethod
    def trig(cls, coeffs: dict) -> "SmoothWindow":
        """Trigonometric polynomial ``sum_j c_j e^{2 pi i j x}``; ``coeffs`` must be Hermitian for real ``psi``."""
        coeffs = {int(j): complex(v) for j, v in coeffs.items() if v != 0}
        for j, v in coeffs.items():
            if abs(coeffs.get(-j, 0) - np.conj(v)) > 1e-14:
                raise ValueError("coefficients must be Hermitian")
        deg = max((abs(j) for j in coeffs), default=0)
        x = np.linspace(0, 1, 4096 * max(deg, 1) + 1)
        vals = sum(v * np.exp(2j * np.pi * j * x) for j, v in coeffs.items()) if coeffs else 0 * x
        d2 = sum(-(2 * np.pi * j) ** 2 * v * np.exp(2j * np.pi * j * x) for j, v in coeffs.items()) if coeffs else 0 * x
        return cls("trig", {"coeffs": coeffs}, deg, float(np.max(np.abs(vals))),
                   float(np.max(np.abs(d2))), coeffs)

    @classmethod
    def constant(cls) -> "SmoothWindow":
        return cls.trig({0: 1.0})

    @classmethod
    def plateau(cls, a: float, b: float, eps: float, bump_kind: str = "mollifier") -> "SmoothWindow":
        """``1_{[a,b]} * phi_eps``: 1 on ``[a+eps, b-eps]``, supported in ``[a-eps, b+eps]``."""
        if not (0 <= a - eps and b + eps <= 1 and a < b and eps > 0):
            raise ValueError("plateau must satisfy 0 <= a - eps < b + eps <= 1")
        bump = make_bump(bump_kind)
        # psi'' = (phi_eps'(x - a) - phi_eps'(x - b)); sup |phi_eps'| = sup|phi'| / eps^2
        return cls("plateau", {"a": a, "b": b, "eps": eps, "bump": bump_kind}, None, 1.0,
                   bump.sup_norms[1] / eps**2)

    # -- evaluation
    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "trig":
            out = np.zeros(x.shape, complex)
            for j, v in self._trig.items():
                out += v * np.exp(2j * np.pi * j * x)
            return out.real
        p = self.params
        bump = make_bump(p["bump"])
        return bump.cdf((x - p["a"]) / p["eps"]) - bump.cdf((x - p["b"]) / p["eps"])

    def transform(self, xi):
        """Real-line ``psi_hat(xi) = int psi(x) e^{-2 pi i x xi} dx`` (integer ``xi``: the coefficient)."""
        xi = np.asarray(xi, dtype=float)
        if self.kind == "trig":
            out = np.zeros(xi.shape, complex)
            for j, v in self._trig.items():
                out += v * np.where(xi == j, 1.0, 0.0)
            return out
        p = self.params
        bump = make_bump(p["bump"])
        L = p["b"] - p["a"]
        with np.errstate(invalid="ignore", divide="ignore"):
            box = np.where(xi == 0, L, np.sin(np.pi * xi * L) / (np.pi * np.where(xi == 0, 1, xi)))
        return box * np.exp(-1j * np.pi * xi * (p["a"] + p["b"])) * bump.transform(p["eps"] * xi)

    coeff = transform

    def tail_reach(self, tol: float) -> float:
        """``U`` with ``|psi_hat(u)| < tol`` for ``|u| > U``."""
        if self.kind == "trig":
            return float(self.degree)
        p = self.params
        return make_bump(p["bump"]).xi_cut(tol) / p["eps"]

    def tail_l1(self, U: float) -> float:
        """Bound on ``sum_{|u| > U} |psi_hat(xi - k)|`` over integer shifts (any real ``xi``)."""
        if self.kind == "trig":
            return 0.0 if U >= self.degree else math.inf
        p = self.params
        bump = make_bump(p["bump"])
        eps = p["eps"]
        n = int(min(math.ceil(bump.xi_cut(1e-300) / eps) + 2, 10**6))
        u = U + np.arange(0, n)
        head = float(np.sum(bump.majorant(eps * u) / (np.pi * u)))
        # remaining shifts: monotone majorant, so the sum is at most the first term plus the integral
        ue = U + n
        rest = (float(bump.majorant(eps * ue)) + bump.majorant_integral(eps * ue) / eps) / (np.pi * ue)
        return 2 * (head + rest)

    def check_decay(self, lmax: int = 2000) -> float:
        """Largest ``|psi_hat(l)| (2 pi l)^2 / ||psi''||_inf`` over ``1 <= |l| <= lmax`` (must be <= 1)."""
        ls = np.arange(1, lmax + 1)
        return float(np.max(np.abs(self.coeff(ls)) * (2 * np.pi * ls) ** 2 / self.sup_second))


@dataclass
class PsiNorm:
    value: float
    upper_bound: float
    constant: float
    t: float
    tail: float


def psi_norm(window: SmoothWindow, params: ExponentParams, lmax: int | None = None,
             tail_tol: float = 1e-10) -> PsiNorm:
    """``sum_{|j|<=2} |psi_hat(j)| + sum_{l != 0} |psi_hat(l)| log^t|l|`` with ``t = max(1, r)``.

    The comparison bound is ``5 ||psi||_inf + c ||psi''||_inf sum log^t|l|/l^2``
    with ``c = 1/(4 pi^2)`` (integration by parts twice on ``[0, 1]``).
    """
    t = max(1.0, params.r)
    c = 1 / (4 * math.pi**2)
    if window.kind == "trig":
        L = window.degree
        tail = 0.0
    else:
        eps = window.params["eps"]
        bump = make_bump(window.params["bump"])
        L = lmax or max(16, int(math.ceil(window.tail_reach(1e-16))))
        # |psi_hat(l)| <= majorant(eps l) / (pi l); the mollifier majorant vanishes past its table
        far = int(min(math.ceil(bump.xi_cut(1e-300) / eps), 10**7))
        if far > L:
            ls = np.arange(L + 1, far + 1, dtype=float)
            tail = 2 * float(np.sum(np.log(ls) ** t * bump.majorant(eps * ls) / (np.pi * ls)))
        else:
            tail = 0.0
        if far >= 10**7 or bump.kind != "mollifier":
            # fallback: |psi_hat(l)| <= c ||psi''|| / l^2 and int_L^inf log^t x / x^2 dx
            from scipy import special
            tail = 2 * c * window.sup_second * float(special.gammaincc(t + 1, math.log(L)) * special.gamma(t + 1))
        if tail > tail_tol:
            raise ValueError(f"coefficient range {L} leaves a weighted tail of {tail:.3g} > {tail_tol:g}")
    js = np.arange(-2, 3)
    head = float(np.sum(np.abs(window.coeff(js))))
    if L >= 1:
        ls = np.arange(1, L + 1)
        w = np.log(ls) ** t
        mags = np.abs(window.coeff(ls)) + np.abs(window.coeff(-ls))
        body = float(np.sum(mags * w))
    else:
        body = 0.0
    upper = 5 * window.sup + c * window.sup_second * log_weighted_zeta(t)
    return PsiNorm(head + body + tail, upper, c, t, tail)


# ---------------------------------------------------------------------------
# product discrepancy


@dataclass
class DiscrepancyReport:
    """Envelope-normalised discrepancy maxima; ``sup_*`` is ``|disc|`` at the maximising ``k``."""

    q: float
    Q: int
    sup_low: float
    sup_high: float
    ratio_low: float
    ratio_high: float
    norm: float
    envelope_at_q: tuple
    k_argmax_low: int
    k_argmax_high: int


def _discrepancy_at(ks, window: SmoothWindow, level: Level, bump: Bump, S: float, exc_l, exc_w):
    """``sum_j psi_hat(j) F_hat(k - j)`` at ``ks``, excluding ``k - j = 0`` and ``k - j`` off ``QZ``."""
    disc = np.zeros(ks.size, complex)
    for j, cj in window._trig.items():
        l = ks - j
        ok = (l != 0) & (l % level.Q == 0)
        lo = l[ok]
        pos = np.clip(np.searchsorted(exc_l, lo), 0, exc_l.size - 1)
        w = np.where(exc_l[pos] == lo, exc_w[pos], 0.0) - S
        disc[ok] += cj * w * bump.transform(lo / level.q) / level.n_primes
    return np.abs(disc)


def product_discrepancy(window: SmoothWindow, level: Level, params: ExponentParams,
                        k_high: float = 8.0, bump: Bump | None = None, blocks: int = 64,
                        chunk: int = 1 << 21) -> DiscrepancyReport:
    """``sup_k |(psi F)^(k) - psi_hat(k)|`` split at ``|k| = q``, each divided by its envelope.

    Envelopes: ``||psi|| loglog q / log^r q`` for ``|k| <= q`` and
    ``||psi|| loglog|k| / log^r|k|`` for ``q <= |k| <= k_high * q``. The window
    must be a trigonometric polynomial, so ``(psi F)^(k) - psi_hat(k) =
    sum_j psi_hat(j) F_hat(k - j)`` over ``k - j in QZ \\ {0}``.

    On ``QZ`` away from the multiples of ``pQ``, ``#P F_hat(l) = -S phi_hat(l/q)``
    with ``S = sum_p 1/(p-1)``. The suprema are exact: every ``k`` within the
    window degree of a multiple of ``pQ`` is evaluated, and a block of the
    remaining ``k`` is scanned only when the bound
    ``(S/#P) sum|psi_hat(j)| majorant`` over it could exceed the running maximum.
    """
    if window.kind != "trig":
        raise ValueError("product_discrepancy needs a trigonometric-polynomial window")
    bump = bump or make_bump()
    D = window.degree
    norm = psi_norm(window, params).value
    q, Q, r = level.q, level.Q, params.r
    kmax = int(k_high * q)
    P = level.n_primes
    S = float(np.sum(1.0 / (level.primes.astype(float) - 1)))
    exc_l, exc_w = [], []
    for p in level.primes:
        step = int(p) * Q
        m = np.arange(-(D // step) - 1, (kmax + D) // step + 2, dtype=np.int64) * step
        exc_l.append(m)
        exc_w.append(np.full(m.size, 1 + 1 / (int(p) - 1)))
    exc_l, inv = np.unique(np.concatenate(exc_l), return_inverse=True)
    exc_w = np.bincount(inv, weights=np.concatenate(exc_w))
    env_low = norm * math.log(math.log(q)) / math.log(q) ** r

    def env(ks):
        kh = np.maximum(ks.astype(float), q)
        return np.where(ks <= q, env_low, norm * np.log(np.log(kh)) / np.log(kh) ** r)

    best = {"low": [0.0, 0.0, 0], "high": [0.0, 0.0, 0]}  # ratio, |disc| there, argmax

    def absorb(ks):
        if ks.size == 0:
            return
        mag = _discrepancy_at(ks, window, level, bump, S, exc_l, exc_w)
        rat = mag / env(ks)
        for name, sel in (("low", ks <= q), ("high", ks >= q)):
            if not sel.any():
                continue
            b = best[name]
            i = int(np.argmax(rat[sel]))
            if rat[sel][i] > b[0]:
                b[0], b[1], b[2] = float(rat[sel][i]), float(mag[sel][i]), int(ks[sel][i])

    near = np.unique((exc_l[:, None] + np.arange(-D, D + 1)[None, :]).ravel())
    absorb(near[(near >= 0) & (near <= kmax)])
    cabs = float(sum(abs(v) for v in window._trig.values()))
    edges = np.unique(np.concatenate([np.linspace(0, q, blocks + 1),
                                      np.geomspace(q, max(kmax, q * (1 + 1e-9)), blocks + 1)]))
    for k0, k1 in zip(edges[:-1], edges[1:]):
        lo_k, hi_k = int(math.floor(k0)), int(math.ceil(k1))
        # generic part bound over the block; the majorant is non-increasing, the envelope too for k >= q
        reach = float(bump.majorant(max(lo_k - D, 0) / q))
        lim = (S / P) * cabs * reach / float(env(np.array([min(hi_k, kmax)]))[0])
        regimes = [n for n, hit in (("low", lo_k <= q), ("high", hi_k >= q)) if hit]
        if all(lim <= best[n][0] for n in regimes):
            continue
        for a in range(lo_k, min(hi_k, kmax) + 1, chunk):
            absorb(np.arange(a, min(a + chunk, hi_k + 1, kmax + 1), dtype=np.int64))
    env_q_high = norm * math.log(math.log(q)) / math.log(q) ** r
    return DiscrepancyReport(q, Q, best["low"][1], best["high"][1], best["low"][0], best["high"][0],
                             norm, (env_low, env_q_high), best["low"][2], best["high"][2])


# ---------------------------------------------------------------------------
# off-grid transform


@dataclass
class OffGridValue:
    value: complex
    tail_bound: float
    n_terms: int


def offgrid_transform(snap: MeasureSnapshot, window: SmoothWindow, xi: float, tol: float = 1e-12) -> OffGridValue:
    """``nu_hat(xi) = sum_k mu_hat(k) psi_hat(xi - k)`` for ``nu = psi mu``.

    The sum runs over ``|xi - k| <= U`` with ``|psi_hat| < tol`` beyond ``U``;
    the rest is bounded by ``mass * sum_{|u| > U} |psi_hat(u)|``.
    """
    U = window.tail_reach(tol)
    lo = math.ceil(xi - U)
    hi = math.floor(xi + U)
    if max(abs(lo), abs(hi)) > snap.K:
        raise ValueError(f"needs coefficients up to |k| = {max(abs(lo), abs(hi))} > K = {snap.K}")
    ks = np.arange(lo, hi + 1)
    val = complex(np.sum(snap.coeff(ks) * window.transform(xi - ks)))
    mass = abs(snap.coeffs[0])
    tail = mass * window.tail_l1(U)
    return OffGridValue(val, tail, int(ks.size))


def integer_envelope(snap: MeasureSnapshot) -> np.ndarray:
    """``E(n) = max_{n/2 <= |k| <= K} |mu_hat(k)|`` for ``n = 0..K``."""
    mags = np.abs(snap.coeffs)
    suffix = np.maximum.accumulate(mags[::-1])[::-1]
    n = np.arange(snap.K + 1)
    return suffix[np.ceil(n / 2).astype(np.int64)]


def window_coeff_by_quadrature(snap: MeasureSnapshot, window: SmoothWindow, n: int) -> complex:
    """``int psi G_m e^{-2 pi i n x}`` by quadrature over the snapshot grid (independent of the coefficients)."""
    X = snap.nodes()
    w = snap.node_weights
    vals = snap.values * window(X) * np.exp(-2j * np.pi * n * X)
    return complex(np.sum(vals @ w))


# ---------------------------------------------------------------------------
# box-counting dimension


@dataclass
class BoxReport:
    deltas: np.ndarray
    counts: np.ndarray
    slope: float
    power_residual: float
    log_corrected_residual: float
    log_exponent: float


def box_counts(intervals: np.ndarray, delta: float) -> int:
    """Number of cells ``[j delta, (j+1) delta)`` meeting the union of closed intervals."""
    iv = np.asarray(intervals, dtype=float)
    a = np.floor(iv[:, 0] / delta).astype(np.int64)
    b = np.floor(iv[:, 1] / delta).astype(np.int64)
    o = np.argsort(a)
    a, b = a[o], b[o]
    run = np.maximum.accumulate(b)
    start = np.concatenate([[True], a[1:] > run[:-1]])
    ends = run[np.concatenate([np.nonzero(start)[0][1:] - 1, [a.size - 1]])]
    return int(np.sum(ends - a[start] + 1))


def cantor_intervals(depth: int) -> np.ndarray:
    """Closed intervals of the middle-thirds construction at ``depth``."""
    iv = np.array([[0.0, 1.0]])
    for _ in range(depth):
        L = (iv[:, 1] - iv[:, 0]) / 3
        iv = np.concatenate([np.stack([iv[:, 0], iv[:, 0] + L], 1), np.stack([iv[:, 1] - L, iv[:, 1]], 1)])
    return iv[np.argsort(iv[:, 0])]


def box_dimension(intervals, deltas, log_exponent: float = 0.0) -> BoxReport:
    """Slope of ``log N(delta)`` against ``log(1/delta)`` and a log-corrected comparison.

    The corrected model ``N = C delta^{-1} / log^{log_exponent}(1/delta)``
    has one free constant; its residual is compared with the two-parameter
    power fit.
    """
    if hasattr(intervals, "intersection"):
        intervals = intervals.intersection[-1]
    deltas = np.asarray(deltas, dtype=float)
    counts = np.array([box_counts(intervals, d) for d in deltas])
    x = np.log(1 / deltas)
    y = np.log(counts)
    coef, res = _slope(x, y)
    z = y - x + log_exponent * np.log(x)
    res2 = z - z.mean()
    return BoxReport(deltas, counts, float(coef[1]), float(np.sqrt(np.mean(res**2))),
                     float(np.sqrt(np.mean(res2**2))), log_exponent)


# ---------------------------------------------------------------------------
# lemma suites


@dataclass
class Lemma1Report:
    xi: np.ndarray
    values: np.ndarray
    envelope: np.ndarray
    ratios: np.ndarray
    c_integer: float
    c_offgrid: float
    integer_consistency: float
    tail_bound: float

    @property
    def constant(self) -> float:
        return max(self.c_integer, self.c_offgrid)


def lemma1_suite(snap: MeasureSnapshot, window: SmoothWindow | None = None, count: int = 100,
                 band=(10.0, 1e4), seed: int = 0, n_quadrature: int = 6) -> Lemma1Report:
    """Off-grid transform against the integer envelope ``E(n) = max_{|k| >= n/2} |mu_hat(k)|``.

    ``C`` is calibrated on the integers of the band (``max |nu_hat(n)| / E(n)``)
    and the seeded non-integer points are compared against ``E(floor(xi))``.
    Integer consistency compares the coefficient-space value with direct
    quadrature of ``psi G_m`` on the grid.
    """
    window = window or SmoothWindow.plateau(0.3, 0.7, 0.1)
    env = integer_envelope(snap)
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    xi = rng.uniform(band[0], band[1], count)
    xi = np.where(xi == np.floor(xi), xi + 0.5, xi)
    vals, tails = [], []
    for x in xi:
        r = offgrid_transform(snap, window, float(x))
        vals.append(r.value)
        tails.append(r.tail_bound)
    vals = np.array(vals)
    e_off = env[np.floor(xi).astype(np.int64)]
    ints = np.unique(np.round(np.geomspace(band[0], band[1], 200)).astype(np.int64))
    ivals = np.array([offgrid_transform(snap, window, float(n)).value for n in ints])
    c_int = float(np.max(np.abs(ivals) / env[ints]))
    ratios = np.abs(vals) / e_off
    probe = ints[np.linspace(0, ints.size - 1, n_quadrature).astype(int)]
    cons = 0.0
    for n in probe:
        direct = window_coeff_by_quadrature(snap, window, int(n))
        cons = max(cons, abs(direct - offgrid_transform(snap, window, float(n)).value))
    return Lemma1Report(xi, vals, e_off, ratios, c_int, float(np.max(ratios)), cons, float(max(tails)))


@dataclass
class Lemma2Report:
    reports: list

    def spread(self, regime: str) -> float:
        vals = [getattr(r, f"ratio_{regime}") for r in self.reports]
        return float(max(vals) / min(vals))

    def constant(self) -> float:
        return float(max(max(r.ratio_low, r.ratio_high) for r in self.reports))


def default_trig_window() -> SmoothWindow:
    """Real even trigonometric polynomial ``psi_hat(j) = 1 / (1 + j^2)``, ``|j| <= 4``."""
    return SmoothWindow.trig({j: 1.0 / (1 + j * j) for j in range(-4, 5)})


def lemma2_suite(params: ExponentParams, levels: list, window: SmoothWindow | None = None) -> Lemma2Report:
    window = window or default_trig_window()
    return Lemma2Report([product_discrepancy(window, lev, params) for lev in levels])
