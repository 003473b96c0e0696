"""Restriction quotients ``||f_hat||_{L^2(mu_m)} / ||f||_{L^p}`` on snapshots.

Test functions are finite sums of modulated Gaussians

    f(x) = sum_j A_j exp(-pi ((x - c_j) / w_j)^2) exp(2 pi i theta_j x),

whose transforms are explicit:
``f_hat(xi) = sum_j A_j w_j exp(-pi w_j^2 (xi - theta_j)^2) exp(-2 pi i c_j (xi - theta_j))``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .construction import MeasureSnapshot
from .exponents import ExponentParams, restriction_threshold

RNG_ALGORITHM = "numpy PCG64 seeded through SeedSequence"


@dataclass(frozen=True)
class TestFunction:
    """Sum of modulated Gaussians (arrays of amplitude, centre, width, frequency)."""

    amplitude: tuple
    centre: tuple
    width: tuple
    frequency: tuple
    label: str = ""

    __test__ = False  # not a pytest class

    def __post_init__(self):
        n = len(self.amplitude)
        if not (len(self.centre) == len(self.width) == len(self.frequency) == n) or n == 0:
            raise ValueError("atom arrays must be nonempty and of equal length")
        if any(w <= 0 for w in self.width):
            raise ValueError("widths must be positive")

    @classmethod
    def gaussian(cls, amplitude=1.0, centre=0.0, width=1.0, frequency=0.0, label="") -> "TestFunction":
        return cls((complex(amplitude),), (float(centre),), (float(width),), (float(frequency),), label)

    def _arrays(self):
        return (np.asarray(self.amplitude, complex), np.asarray(self.centre, float),
                np.asarray(self.width, float), np.asarray(self.frequency, float))

    def __call__(self, x):
        A, c, w, th = self._arrays()
        x = np.asarray(x, dtype=float)[..., None]
        return np.sum(A * np.exp(-np.pi * ((x - c) / w) ** 2) * np.exp(2j * np.pi * th * x), axis=-1)

    def transform(self, xi):
        A, c, w, th = self._arrays()
        xi = np.asarray(xi, dtype=float)
        out = np.zeros(xi.shape, complex)
        for a, cc, ww, t in zip(A, c, w, th):
            u = xi - t
            out += a * ww * np.exp(-np.pi * (ww * u) ** 2) * np.exp(-2j * np.pi * cc * u)
        return out

    def modulate(self, theta: float) -> "TestFunction":
        """``f(x) e^{2 pi i theta x}`` (transform shifted by ``theta``)."""
        A, c, w, th = self._arrays()
        # e^{2 pi i theta x} commutes with the atoms; the amplitude is unchanged
        return TestFunction(tuple(A), tuple(c), tuple(w), tuple(th + theta), self.label)

    def scale(self, factor: float) -> "TestFunction":
        A, c, w, th = self._arrays()
        return TestFunction(tuple(A * factor), tuple(c), tuple(w), tuple(th), self.label)

    def dilate(self, lam: float) -> "TestFunction":
        """``x -> f(lam x)``."""
        A, c, w, th = self._arrays()
        return TestFunction(tuple(A), tuple(c / lam), tuple(w / lam), tuple(th * lam), self.label)


_GL_X, _GL_W = np.polynomial.legendre.leggauss(16)


def _composite_gl(g, edges: np.ndarray, chunk: int = 1 << 15) -> float:
    total = 0.0
    for i in range(0, edges.size - 1, chunk):
        e = edges[i:i + chunk + 1]
        mid = 0.5 * (e[1:] + e[:-1])
        half = 0.5 * (e[1:] - e[:-1])
        x = mid[:, None] + half[:, None] * _GL_X[None, :]
        total += float(np.sum(g(x) @ _GL_W * half))
    return total


def _separated(c: np.ndarray, w: np.ndarray, gap: float = 16.0) -> bool:
    o = np.argsort(c)
    c, w = c[o], w[o]
    return bool(np.all(np.diff(c) >= gap * np.maximum(w[1:], w[:-1])))


def lp_norm(f: TestFunction, p: float, rtol: float = 1e-8, max_pieces: int = 1 << 21) -> float:
    """``||f||_{L^p(R)}`` for ``p in [1, 2]``.

    One atom has the closed form ``|A| w^{1/p} p^{-1/(2p)}``, and so do sums
    of atoms at least 16 widths apart. Other sums use
    composite 16-point Gauss-Legendre on pieces no longer than the smallest
    width or the shortest beat period ``1 / |theta_i - theta_j|``, doubling
    the piece count until two successive values agree to ``rtol`` (the
    Richardson-style error estimate).
    """
    if not 1 <= p <= 2:
        raise ValueError("p must lie in [1, 2]")
    A, c, w, th = f._arrays()
    if A.size == 1 or _separated(c, w):
        # disjoint atoms: overlaps are below exp(-64 pi) relative
        return float(np.sum(np.abs(A) ** p * w) ** (1 / p) * p ** (-1 / (2 * p)))
    lo = float(np.min(c - 8 * w))
    hi = float(np.max(c + 8 * w))
    beat = float(np.max(np.abs(th[:, None] - th[None, :])))
    piece = min(float(np.min(w)), 1 / beat if beat > 0 else math.inf)
    n = max(4, int(math.ceil((hi - lo) / piece)))
    g = lambda x: np.abs(f(x)) ** p
    prev = _composite_gl(g, np.linspace(lo, hi, n + 1))
    while True:
        n *= 2
        if n > max_pieces:
            raise ValueError("L^p quadrature did not converge")
        cur = _composite_gl(g, np.linspace(lo, hi, n + 1))
        if abs(cur - prev) <= rtol * abs(cur):
            return float(cur ** (1 / p))
        prev = cur


def l2mu_norm(f: TestFunction, snap: MeasureSnapshot, reach: float = 9.0) -> float:
    """``(int |f_hat|^2 G_m)^{1/2}`` by trapezoid quadrature on the snapshot grid.

    Only nodes within ``reach / w`` of some atom frequency are evaluated;
    beyond that every Gaussian factor is below ``exp(-pi reach^2)``. Panels
    wider than an eighth of the narrowest transform width ``1 / w`` are
    subdivided, with ``G_m`` interpolated linearly as in the cumulative mass.
    """
    A, c, w, th = f._arrays()
    h = snap.offsets[1] - snap.offsets[0]
    sub = max(1, int(math.ceil(8 * h * float(np.max(w)))))
    offsets = snap.offsets
    values = snap.values
    if sub > 1:
        t = np.arange(sub) / sub
        offsets = np.concatenate([(snap.offsets[:-1, None] + h * t[None, :]).ravel(), snap.offsets[-1:]])
        v0, v1 = values[:, :-1, None], values[:, 1:, None]
        inner = (v0 + (v1 - v0) * t[None, None, :]).reshape(values.shape[0], -1)
        values = np.concatenate([inner, values[:, -1:]], axis=1)
    hf = offsets[1] - offsets[0]
    nw = np.full(offsets.size, hf)
    nw[0] = nw[-1] = hf / 2
    X = (snap.centres[:, None] + offsets[None, :]).ravel()
    vals = values.ravel()
    wts = np.tile(nw, snap.n_intervals)
    lo = np.searchsorted(X, th - reach / w)
    hi = np.searchsorted(X, th + reach / w, side="right")
    mask = np.zeros(X.size + 1, np.int64)
    np.add.at(mask, lo, 1)
    np.add.at(mask, hi, -1)
    sel = np.cumsum(mask[:-1]) > 0
    total = float(np.sum(np.abs(f.transform(X[sel])) ** 2 * vals[sel] * wts[sel]))
    return float(math.sqrt(max(total, 0.0)))


def l2mu_monte_carlo(f: TestFunction, snap: MeasureSnapshot, n: int, seed: int = 0):
    """Monte-Carlo estimate of ``int |f_hat|^2 d mu_m`` and its standard error.

    Points are drawn from ``mu_m / mass`` by inverting the cumulative mass.
    """
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    cum = snap._cumulative().ravel()
    X = snap.nodes().ravel()
    mass = cum[-1]
    u = rng.random(n) * mass
    x = np.interp(u, cum, X)
    vals = np.abs(f.transform(x)) ** 2 * mass
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(n))


def knapp_family(centre: float, delta: float) -> TestFunction:
    """``f(x) = delta exp(-pi delta^2 x^2) e^{2 pi i centre x}``, so ``f_hat = exp(-pi ((xi - centre)/delta)^2)``."""
    if not 0 <= centre <= 1:
        raise ValueError("centre must lie in [0, 1]")
    if not 0 < delta < 0.25:
        raise ValueError("delta must lie in (0, 1/4)")
    return TestFunction.gaussian(delta, 0.0, 1 / delta, centre, label="knapp")


def random_gaussian_sum(rng: np.random.Generator, delta: float, atoms: int = 4) -> TestFunction:
    """Random sum of Knapp-type atoms with frequencies in ``[0, 1]``.

    The atoms sit 20 widths apart in space, so their transforms interfere on
    ``[0, 1]`` while the ``L^p`` norm keeps its closed form.
    """
    amp = rng.normal(size=atoms) + 1j * rng.normal(size=atoms)
    freq = rng.uniform(0, 1, size=atoms)
    centre = 20.0 / delta * np.arange(atoms)
    return TestFunction(tuple(amp * delta), tuple(centre), tuple(np.full(atoms, 1 / delta)), tuple(freq), "random")


def off_support(delta: float, frequency: float = 3.0) -> TestFunction:
    """Negative control: transform concentrated near ``frequency`` outside ``[0, 1]``."""
    return TestFunction.gaussian(delta, 0.0, 1 / delta, frequency, label="control")


@dataclass
class RestrictionReport:
    p_grid: list
    deltas: list
    rows: list
    threshold: float
    seed: int
    algorithm: str = RNG_ALGORITHM
    spreads: dict = field(default_factory=dict)
    a_priori_ok: bool = True

    def csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["family", "member", "centre", "delta", "p", "l2mu", "lp", "quotient"])
        for row in self.rows:
            w.writerow([row[0], row[1], repr(row[2]), repr(row[3]), repr(row[4]), repr(row[5]),
                        repr(row[6]), repr(row[7])])
        return buf.getvalue()

    def summary(self) -> dict:
        return {
            "threshold_p_star": self.threshold,
            "seed": self.seed,
            "generator": self.algorithm,
            "a_priori_p1_ok": self.a_priori_ok,
            "knapp_spread": {repr(p): v for p, v in self.spreads.items()},
            "claims": {repr(p): ("spread checked" if p < self.threshold else "reported only")
                       for p in self.p_grid},
        }


def knapp_centres(snap: MeasureSnapshot, count: int, rng: np.random.Generator) -> np.ndarray:
    if snap.m == 0:
        return np.sort(rng.uniform(0.1, 0.9, count))
    idx = rng.choice(snap.n_intervals, size=min(count, snap.n_intervals), replace=False)
    return np.sort(snap.centres[idx])


def threshold_sweep(snap: MeasureSnapshot, params: ExponentParams, p_grid, deltas, seed: int = 0,
                    families=("knapp", "random", "control"), n_centres: int = 4, n_random: int = 2) -> RestrictionReport:
    """Quotients for every ``(p, family member, delta)`` and the per-``p`` Knapp spread.

    The spread is the worst ratio, over Knapp centres, of the largest to the
    smallest quotient across ``deltas``.
    """
    p_grid = [float(p) for p in p_grid]
    deltas = [float(d) for d in deltas]
    if not p_grid or not deltas or not families:
        raise ValueError("p grid, deltas and families must be nonempty")
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    members = []
    if "knapp" in families:
        for i, c in enumerate(knapp_centres(snap, n_centres, rng)):
            members.append(("knapp", i, float(c), lambda d, c=c: knapp_family(c, d)))
    if "random" in families:
        for i in range(n_random):
            sub = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(1, i))))
            members.append(("random", i, math.nan,
                            lambda d, s=sub.bit_generator.state: random_gaussian_sum(_restore(s), d)))
    if "control" in families:
        members.append(("control", 0, 3.0, lambda d: off_support(d)))
    rows = []
    mass = snap.mass
    a_priori = True
    knapp_q = {}
    for fam, i, c, make in members:
        for d in deltas:
            f = make(d)
            l2 = l2mu_norm(f, snap)
            for p in p_grid:
                lp = lp_norm(f, p)
                qv = l2 / lp
                rows.append((fam, i, c, d, p, l2, lp, qv))
                if p == 1.0:
                    # ||f_hat||_inf <= ||f||_1, so the quotient is at most sqrt(mass)
                    if qv > math.sqrt(mass) * (1 + 1e-12):
                        a_priori = False
                if fam == "knapp":
                    knapp_q.setdefault((p, i), []).append(qv)
    spreads = {}
    for p in p_grid:
        vals = [max(v) / min(v) for (pp, _), v in knapp_q.items() if pp == p and min(v) > 0]
        if vals:
            spreads[p] = float(max(vals))
    return RestrictionReport(p_grid, deltas, rows, restriction_threshold(params), seed,
                             spreads=spreads, a_priori_ok=a_priori)


def _restore(state) -> np.random.Generator:
    bg = np.random.PCG64()
    bg.state = state
    return np.random.Generator(bg)
