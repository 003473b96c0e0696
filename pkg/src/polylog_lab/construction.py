"""Level densities, their Fourier coefficients and the finite-depth measure.

Level ``i`` of a desk sequence has scale ``q``, integer ``Q = q ** beta(q)``
and prime window ``P``. For each prime ``p`` the density

    Phi_p(x) = sum_{v not in pZ} (q / (pQ)) phi(q (x - v / (pQ)))

places a bump of mass ``1 / (pQ)`` at every lattice point ``v / (pQ)`` with
``p`` not dividing ``v``; the level density averages them,
``F = (1/#P) sum_p p/(p-1) Phi_p``, and the depth-``m`` density is the
product ``G_m = F_1 ... F_m`` (``G_0 = 1`` on ``[0, 1]``).

Because ``G_m`` lives on roughly ``#atoms * 2 / q_m`` of the unit interval,
a uniform grid with ``8 q_m Q_m`` points is out of reach once ``m >= 2``.
:class:`MeasureSnapshot` instead samples ``G_m`` on every surviving
finest-level interval (a support-adapted grid). Its coefficients come from
exact quadrature of those samples, organised per prime as FFTs over the
centre lattice, and are cross-checked against the coefficient-space
convolution of the level coefficients.
"""

from __future__ import annotations

import hashlib
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .bump import Bump, make_bump
from .exponents import ExponentParams, pow_gamma
from .primes import prime_window
from .sequence import DeskSequence

SNAPSHOT_VERSION = 1
SNAPSHOT_MAGIC = b"PLSNAP"


class NyquistError(ValueError):
    """Raised when the sampling is too coarse for the requested coefficient range."""


# ---------------------------------------------------------------------------
# levels


@dataclass(frozen=True)
class Level:
    """Scale ``q``, lattice integer ``Q`` and prime window of one level."""

    q: float
    Q: int
    primes: np.ndarray
    q_gamma: float = math.nan

    def __post_init__(self):
        if self.primes.size == 0:
            raise ValueError("empty prime window")
        if self.Q < 1:
            raise ValueError("Q must be a positive integer")

    @property
    def n_primes(self) -> int:
        return int(self.primes.size)

    def weights(self) -> np.ndarray:
        """Per-prime bump heights ``(1/#P) (p/(p-1)) (q/(pQ))``."""
        p = self.primes.astype(float)
        return (1.0 / self.n_primes) * (p / (p - 1)) * (self.q / (p * self.Q))

    def centres(self, p: int, lo: float = 0.0, hi: float = 1.0) -> np.ndarray:
        """Lattice indices ``v`` with ``lo <= v/(pQ) <= hi`` and ``p`` not dividing ``v``."""
        M = int(p) * self.Q
        v = np.arange(max(0, math.ceil(lo * M)), min(M, math.floor(hi * M)) + 1, dtype=np.int64)
        return v[v % p != 0]

    def min_centre_gap(self) -> float:
        """Smallest distance between two centres of this level, over all primes (exhaustive)."""
        allc = np.concatenate([self.centres(int(p)) / (int(p) * self.Q) for p in self.primes])
        allc.sort()
        return float(np.min(np.diff(allc)))


def levels_of(seq: DeskSequence, m: int | None = None) -> list:
    m = len(seq.q) if m is None else m
    if m > len(seq.q):
        raise ValueError(f"depth {m} exceeds sequence length {len(seq.q)}")
    return [Level(float(seq.q[i]), int(seq.Q[i]), np.asarray(seq.windows[i]), pow_gamma(seq.q[i], seq.params))
            for i in range(m)]


def level_from_q(q: float, Q: int, params: ExponentParams) -> Level:
    qg = pow_gamma(q, params)
    return Level(float(q), int(Q), prime_window(qg), qg)


# ---------------------------------------------------------------------------
# analytic coefficients


def phi_ip_coeff(level: Level, p: int, k, bump: Bump | None = None) -> np.ndarray:
    """Coefficients of ``Phi_p``: ``(1-1/p) phi_hat(k/q)`` on ``pQZ``, ``-(1/p) phi_hat(k/q)`` on ``QZ \\ pQZ``."""
    bump = bump or make_bump()
    k = np.asarray(k, dtype=np.int64)
    on_q = k % level.Q == 0
    on_pq = k % (p * level.Q) == 0
    fac = np.where(on_pq, 1 - 1 / p, np.where(on_q, -1 / p, 0.0))
    return fac * bump.transform(k / level.q)


def level_count(level: Level, k) -> np.ndarray:
    """``#{p : pQ | k} - sum_{p : Q | k, pQ not | k} 1/(p-1)`` (exactly ``#P`` at ``k = 0``)."""
    k = np.asarray(k, dtype=np.int64)
    on_q = k % level.Q == 0
    count = np.zeros(k.shape)
    neg = np.zeros(k.shape)
    for p in level.primes:
        p = int(p)
        on_pq = k % (p * level.Q) == 0
        count += on_pq
        neg += (on_q & ~on_pq) / (p - 1)
    return count - neg


def f_coeff(level: Level, k, bump: Bump | None = None) -> np.ndarray:
    """``F_hat(k) = (1/#P) * level_count(k) * phi_hat(k/q)``."""
    bump = bump or make_bump()
    k = np.asarray(k, dtype=np.int64)
    return level_count(level, k) / level.n_primes * bump.transform(k / level.q)


def f_envelope(level: Level, k, bump: Bump | None = None) -> np.ndarray:
    """Coefficient envelope for ``k != 0`` with ``P = q ** gamma(q)``:

    ``2 (log P / P) (max(2 log(|k|/Q) / log P, 0) + 1) |phi_hat(k/q)|``.
    """
    bump = bump or make_bump()
    if not math.isfinite(level.q_gamma):
        raise ValueError("level has no q ** gamma(q) recorded")
    k = np.abs(np.asarray(k, dtype=np.int64)).astype(float)
    lP = math.log(level.q_gamma)
    with np.errstate(divide="ignore"):
        div = np.maximum(2 * np.log(k / level.Q) / lP, 0.0)
    return 2 * (lP / level.q_gamma) * (div + 1) * np.abs(bump.transform(k / level.q))


def divisor_count(level: Level, k) -> np.ndarray:
    """``#{p in P : pQ | k}``."""
    k = np.asarray(k, dtype=np.int64)
    out = np.zeros(k.shape, dtype=np.int64)
    for p in level.primes:
        out += k % (int(p) * level.Q) == 0
    return out


# ---------------------------------------------------------------------------
# real-space evaluation


def phi_ip_eval(level: Level, p: int, x, bump: Bump | None = None) -> np.ndarray:
    """``Phi_p(x)`` on ``[0, 1]`` (the two nearest lattice bumps)."""
    bump = bump or make_bump()
    x = np.asarray(x, dtype=float)
    M = int(p) * level.Q
    v0 = np.floor(x * M).astype(np.int64)
    out = np.zeros_like(x)
    for dv in (0, 1):
        v = v0 + dv
        ok = (v % p != 0) & (v > 0) & (v < M)
        out += np.where(ok, bump(level.q * (x - v / M)), 0.0)
    return out * (level.q / M)


@dataclass
class Atoms:
    """Intervals ``[c - 1/q, c + 1/q]`` of one level, sorted by centre."""

    centre: np.ndarray
    prime: np.ndarray
    v: np.ndarray
    weight: np.ndarray
    q: float

    @property
    def size(self) -> int:
        return int(self.centre.size)

    def evaluate(self, x, bump: Bump) -> np.ndarray:
        """The level density restricted to these atoms (exact at points they cover)."""
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        if self.size == 0:
            return out
        i = np.searchsorted(self.centre, x)
        for j in (i - 1, i):
            ok = (j >= 0) & (j < self.size)
            jj = np.clip(j, 0, self.size - 1)
            out += np.where(ok, self.weight[jj] * bump(self.q * (x - self.centre[jj])), 0.0)
        return out


def _sorted_atoms(c, p, v, w, q) -> Atoms:
    o = np.argsort(c, kind="stable")
    return Atoms(c[o], p[o], v[o], w[o], q)


def level_atoms(level: Level, parent: Atoms | None = None) -> Atoms:
    """All atoms of ``level`` meeting the support of the parent atoms (all atoms if no parent)."""
    cs, ps, vs, ws = [], [], [], []
    wts = level.weights()
    rad = 1.0 / level.q
    for p, w in zip(level.primes, wts):
        p = int(p)
        M = p * level.Q
        if parent is None:
            v = level.centres(p)
        else:
            prad = 1.0 / parent.q
            lo = np.ceil((parent.centre - prad - rad) * M).astype(np.int64)
            hi = np.floor((parent.centre + prad + rad) * M).astype(np.int64)
            cnt = np.maximum(hi - lo + 1, 0)
            start = np.cumsum(cnt) - cnt
            v = np.repeat(lo, cnt) + (np.arange(int(cnt.sum())) - np.repeat(start, cnt))
            v = np.unique(v)
            v = v[(v % p != 0) & (v > 0) & (v < M)]
            c = v / M
            # keep atoms whose closed interval meets an open parent interval
            j = np.searchsorted(parent.centre, c)
            dl = np.abs(c - parent.centre[np.clip(j - 1, 0, parent.size - 1)])
            dr = np.abs(c - parent.centre[np.clip(j, 0, parent.size - 1)])
            v = v[np.minimum(dl, dr) < prad + rad]
        cs.append(v / M)
        ps.append(np.full(v.size, p, dtype=np.int64))
        vs.append(v)
        ws.append(np.full(v.size, w))
    return _sorted_atoms(np.concatenate(cs), np.concatenate(ps), np.concatenate(vs), np.concatenate(ws), level.q)


def surviving_atoms(levels: list) -> list:
    """Atoms per level, each level restricted to the support of the previous one."""
    out = []
    parent = None
    for lev in levels:
        parent = level_atoms(lev, parent)
        out.append(parent)
    return out


# ---------------------------------------------------------------------------
# coefficient tables and sparse convolution


@dataclass
class CoeffTable:
    """Sparse Hermitian coefficient map stored on ``k >= 0`` (``c(-k) = conj(c(k))``).

    ``tail_l1`` bounds the l1 mass of everything not stored: entries beyond
    ``cutoff`` plus pruned entries below ``floor``.
    """

    k: np.ndarray
    values: np.ndarray
    cutoff: int
    tail_l1: float = 0.0
    pruned_l1: float = 0.0
    floor: float = 0.0

    def __post_init__(self):
        self.k = np.asarray(self.k, dtype=np.int64)
        self.values = np.asarray(self.values, dtype=complex)
        if self.k.size and (np.any(np.diff(self.k) <= 0) or self.k[0] < 0):
            raise ValueError("indices must be sorted, unique and non-negative")

    @classmethod
    def from_dense(cls, values, tail_l1: float = 0.0, floor: float = 0.0) -> "CoeffTable":
        values = np.asarray(values, dtype=complex)
        keep = np.abs(values) >= floor if floor > 0 else np.ones(values.size, bool)
        keep[0] = True
        pruned = float(2 * np.sum(np.abs(values[~keep])))
        k = np.nonzero(keep)[0]
        return cls(k, values[k], values.size - 1, tail_l1 + pruned, pruned, floor)

    def lookup(self, ks) -> np.ndarray:
        ks = np.asarray(ks, dtype=np.int64)
        a = np.abs(ks)
        i = np.searchsorted(self.k, a)
        ic = np.clip(i, 0, max(self.k.size - 1, 0))
        hit = (i < self.k.size) & (self.k[ic] == a) if self.k.size else np.zeros(a.shape, bool)
        v = np.where(hit, self.values[ic] if self.k.size else 0, 0)
        return np.where(ks < 0, np.conj(v), v)

    def to_dense(self, K: int) -> np.ndarray:
        out = np.zeros(K + 1, dtype=complex)
        sel = self.k <= K
        out[self.k[sel]] = self.values[sel]
        return out

    def symmetric(self):
        """All stored entries as ``(indices, values)`` over both signs."""
        pos = self.k > 0
        ks = np.concatenate([-self.k[pos][::-1], self.k])
        vs = np.concatenate([np.conj(self.values[pos][::-1]), self.values])
        return ks, vs

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values))) if self.values.size else 0.0

    def prune(self, floor: float) -> "CoeffTable":
        keep = np.abs(self.values) >= floor
        if self.k.size and self.k[0] == 0:
            keep[0] = True
        pruned = float(2 * np.sum(np.abs(self.values[~keep])))
        return CoeffTable(self.k[keep], self.values[keep], self.cutoff, self.tail_l1 + pruned,
                          self.pruned_l1 + pruned, max(floor, self.floor))


def level_table(level: Level, floor: float = 1e-14, bump: Bump | None = None, kmax: int | None = None) -> CoeffTable:
    """``F_hat`` on ``QZ`` up to where ``|phi_hat(k/q)|`` drops below ``floor`` (or ``kmax``).

    The tail bound uses the bump's non-increasing transform majorant and the
    fact that ``|F_hat(k)| <= |phi_hat(k/q)|`` (the normalised count is at most 1
    in absolute value).
    """
    bump = bump or make_bump()
    K = int(math.ceil(bump.xi_cut(floor) * level.q))
    if kmax is not None:
        K = min(K, int(kmax))
    ks = np.arange(0, K + 1, level.Q, dtype=np.int64)
    vals = f_coeff(level, ks, bump)
    # tail beyond K on QZ, both signs: the majorant is non-increasing, so the
    # lattice sum is at most (q / Q) times its integral from K / q
    tail = 2 * (level.q / level.Q) * bump.majorant_integral(K / level.q)
    t = CoeffTable(ks, vals.astype(complex), K, tail_l1=tail)
    return t.prune(floor)


def coeff_convolve(A: CoeffTable, B: CoeffTable, K: int, floor: float = 0.0, budget: float = 4e8) -> CoeffTable:
    """``C(k) = sum_l A(k - l) B(l)`` for ``0 <= k <= K``.

    Dense FFT convolution over the index span when that is affordable,
    otherwise a direct sparse double loop (vectorised over ``B``). The
    returned ``tail_l1`` bounds the error from entries missing in either
    input: ``tail_A * max|B| + tail_B * max|A| + tail_A * tail_B``.
    """
    ka, va = A.symmetric()
    kb, vb = B.symmetric()
    span_a = int(ka.max() - ka.min()) if ka.size else 0
    span_b = int(kb.max() - kb.min()) if kb.size else 0
    nfft = 1 << int(math.ceil(math.log2(span_a + span_b + 2)))
    if nfft <= 1 << 26:
        da = np.zeros(nfft, complex)
        db = np.zeros(nfft, complex)
        da[ka - ka.min()] = va
        db[kb - kb.min()] = vb
        conv = np.fft.ifft(np.fft.fft(da) * np.fft.fft(db))
        off = int(ka.min() + kb.min())
        idx = np.arange(0, K + 1) - off
        ok = (idx >= 0) & (idx < nfft)
        out = np.zeros(K + 1, complex)
        out[ok] = conv[idx[ok]]
    else:
        if ka.size * kb.size > budget:
            raise ValueError("sparse convolution exceeds the work budget; lower K or prune harder")
        out = np.zeros(K + 1, complex)
        for a_idx, a_val in zip(ka, va):
            tgt = a_idx + kb
            sel = (tgt >= 0) & (tgt <= K)
            np.add.at(out, tgt[sel], a_val * vb[sel])
    tail = A.tail_l1 * B.max_abs() + B.tail_l1 * A.max_abs() + A.tail_l1 * B.tail_l1
    res = CoeffTable.from_dense(out, tail_l1=tail, floor=floor)
    return res


# ---------------------------------------------------------------------------
# level density objects


@dataclass
class LevelDensity:
    """One level ``F_i``: pointwise evaluator and analytic coefficients."""

    level: Level
    bump: Bump

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        w = self.level.weights()
        out = np.zeros_like(x)
        for p, wp in zip(self.level.primes, w):
            out += wp * (int(p) * self.level.Q / self.level.q) * phi_ip_eval(self.level, int(p), x, self.bump)
        return out

    def coeff(self, k) -> np.ndarray:
        return f_coeff(self.level, k, self.bump)

    def table(self, floor: float = 1e-14, kmax: int | None = None) -> CoeffTable:
        return level_table(self.level, floor, self.bump, kmax)


def f_level(level: Level, bump: Bump | None = None) -> LevelDensity:
    return LevelDensity(level, bump or make_bump())


# ---------------------------------------------------------------------------
# measure snapshot


def min_samples(q: float, K: int, bump: Bump, tol: float = 1e-12) -> int:
    """Samples per finest interval needed for coefficients up to ``K``.

    The trapezoid rule on ``n`` panels of ``[-1/q, 1/q]`` aliases frequency
    ``k`` onto ``k +- n q / 2``; the bump transform must be below ``tol``
    there, so ``n >= 2 (xi_tol + K / q)``. At least 16 panels (spacing
    ``1/(8q)``) are always used.
    """
    n = 2 * (bump.xi_cut(tol) + K / q)
    return max(16, int(8 * math.ceil(n / 8)))


@dataclass
class MeasureSnapshot:
    """Depth-``m`` measure on a support-adapted grid plus its coefficients ``0..K``.

    Attributes
    ----------
    centres : (S,) array
        Centres of the surviving finest-level intervals (sorted).
    halfwidth : float
        ``1 / q_m`` (``1/2`` for ``m = 0``).
    offsets : (n+1,) array
        Node offsets shared by every interval.
    values : (S, n+1) array
        ``G_m`` at the nodes.
    coeffs : (K+1,) complex array
        ``G_hat(k)`` for ``k = 0..K``.
    """

    params: ExponentParams
    q: list
    Q: list
    m: int
    K: int
    bump_kind: str
    floor: float
    centres: np.ndarray
    halfwidth: float
    offsets: np.ndarray
    values: np.ndarray
    coeffs: np.ndarray
    coeff_source: str
    trunc_bound: float
    cross_check: dict = field(default_factory=dict)
    _cum: np.ndarray = field(default=None, repr=False)

    # -- quadrature
    @property
    def node_weights(self) -> np.ndarray:
        h = self.offsets[1] - self.offsets[0]
        w = np.full(self.offsets.size, h)
        w[0] = w[-1] = h / 2
        return w

    @property
    def mass(self) -> float:
        return float(np.sum(self.values @ self.node_weights))

    @property
    def n_intervals(self) -> int:
        return int(self.centres.size)

    def nodes(self) -> np.ndarray:
        return self.centres[:, None] + self.offsets[None, :]

    def coeff(self, k) -> np.ndarray:
        k = np.asarray(k, dtype=np.int64)
        if np.any(np.abs(k) > self.K):
            raise ValueError("coefficient index beyond the stored range")
        v = self.coeffs[np.abs(k)]
        return np.where(k < 0, np.conj(v), v)

    # -- cumulative mass
    def _cumulative(self):
        if self._cum is None:
            h = self.offsets[1] - self.offsets[0]
            inc = 0.5 * (self.values[:, 1:] + self.values[:, :-1]) * h
            seg = np.concatenate([np.zeros((self.n_intervals, 1)), np.cumsum(inc, axis=1)], axis=1)
            before = np.concatenate([[0.0], np.cumsum(seg[:, -1])[:-1]])
            self._cum = (before[:, None] + seg)
        return self._cum

    def cdf(self, y) -> np.ndarray:
        """``mu([0, y])`` with linear interpolation inside each panel.

        Intervals of one level never overlap, so the node abscissae are
        sorted globally and one ``np.interp`` answers every query.
        """
        cum = self._cumulative()
        X = self.nodes().ravel()
        return np.interp(np.asarray(y, dtype=float), X, cum.ravel(), left=0.0, right=float(cum[-1, -1]))

    def ball_mass(self, x, R) -> np.ndarray:
        """``mu(B(x, R))`` for arrays ``x`` and radius ``R``."""
        if np.any(np.asarray(R) <= 0):
            raise ValueError("radius must be positive")
        x = np.asarray(x, dtype=float)
        return self.cdf(x + R) - self.cdf(x - R)

    def density(self, x, bump: Bump | None = None) -> np.ndarray:
        """Exact ``G_m(x)`` from the level products (not interpolated)."""
        bump = bump or make_bump(self.bump_kind)
        x = np.asarray(x, dtype=float)
        out = np.ones_like(x)
        if self.m == 0:
            return np.where((x >= 0) & (x <= 1), 1.0, 0.0)
        atoms = surviving_atoms(self.levels())
        for a in atoms:
            out *= a.evaluate(x, bump)
        return out

    def levels(self) -> list:
        return [level_from_q(q, Q, self.params) for q, Q in zip(self.q[: self.m], self.Q[: self.m])]

    def mass_drift(self) -> float:
        return float(abs(self.coeffs[0].real - 1.0))


def _grid_values(levels: list, atoms: list, offsets: np.ndarray, bump: Bump) -> np.ndarray:
    fin = atoms[-1]
    X = fin.centre[:, None] + offsets[None, :]
    vals = fin.weight[:, None] * bump(fin.q * offsets)[None, :] * np.ones_like(X)
    for a in atoms[:-1]:
        vals *= a.evaluate(X.ravel(), bump).reshape(X.shape)
    return vals


def _transform_level1(level: Level, atoms: Atoms, offsets: np.ndarray, K: int, bump: Bump) -> np.ndarray:
    """Quadrature transform when ``G_0 = 1``: a shared bump shape times a lattice sum per prime."""
    w = np.full(offsets.size, offsets[1] - offsets[0])
    w[0] = w[-1] = w[0] / 2
    shape = w * bump(level.q * offsets)
    ks = np.arange(K + 1, dtype=float)
    S = np.zeros(K + 1)
    half = offsets.size // 2
    for j in range(half + 1):  # offsets are symmetric; the bump is even
        mult = 1.0 if j == half and offsets.size % 2 == 1 else 2.0
        S += mult * shape[j] * np.cos(2 * np.pi * ks * offsets[j])
    out = np.zeros(K + 1, complex)
    for p, hp in zip(level.primes, level.weights()):
        p = int(p)
        M = p * level.Q
        sel = atoms.prime == p
        arr = np.zeros(M)
        arr[atoms.v[sel] % M] = 1.0
        D = np.fft.fft(arr)
        reps = (K + 1 + M - 1) // M
        out += hp * np.tile(D, reps)[: K + 1]
    return out * S


def _transform_moments(fin: Atoms, level: Level, offsets: np.ndarray, values: np.ndarray, K: int,
                       tol: float = 1e-15) -> tuple[np.ndarray, int]:
    """Quadrature transform via the expansion of ``exp(-2 pi i k t)`` on each interval.

    With ``z = 2 pi K / q <= 1/2`` the truncation after ``n`` terms is below
    ``z^n / n!`` times the mass.
    """
    z = 2 * np.pi * K / level.q
    if z > 0.5:
        raise NyquistError("moment expansion needs 2 pi K / q_m <= 1/2")
    n_mom = 1
    while z**n_mom / math.factorial(n_mom) > tol:
        n_mom += 1
    w = np.full(offsets.size, offsets[1] - offsets[0])
    w[0] = w[-1] = w[0] / 2
    s = offsets * level.q
    weighted = values * w[None, :]
    acc = [np.zeros(K + 1, complex) for _ in range(n_mom)]
    for p in level.primes:
        p = int(p)
        M = p * level.Q
        sel = fin.prime == p
        if not sel.any():
            continue
        idx = fin.v[sel] % M
        reps = (K + 1 + M - 1) // M
        for n in range(n_mom):
            mu = weighted[sel] @ (s**n)
            arr = np.zeros(M)
            np.add.at(arr, idx, mu)
            acc[n] += np.tile(np.fft.fft(arr), reps)[: K + 1]
    zk = -2j * np.pi * np.arange(K + 1) / level.q
    out = acc[n_mom - 1]
    for n in range(n_mom - 2, -1, -1):
        out = out * (zk / (n + 1)) + acc[n]
    return out, n_mom


def analytic_coeffs_at(levels: list, ks, bump: Bump, floor: float = 1e-13, chunk: int = 4_000_000) -> np.ndarray:
    """``G_hat_m(k)`` at the given ``k`` by coefficient-space convolution (``m <= 2``).

    For ``m = 2``: ``sum_{l in Q_2 Z} F2_hat(l) F1_hat(k - l)`` over ``|k - l| <= xi q_1``
    where ``|phi_hat| < floor`` beyond ``xi``.
    """
    ks = np.asarray(ks, dtype=np.int64)
    if len(levels) == 0:
        return (ks == 0).astype(complex)
    if len(levels) == 1:
        return f_coeff(levels[0], ks, bump).astype(complex)
    if len(levels) > 2:
        raise ValueError("direct analytic convolution is implemented for depth <= 2")
    l1, l2 = levels
    reach = int(math.ceil(bump.xi_cut(floor) * l1.q))
    out = np.zeros(ks.size, complex)
    for i, k in enumerate(ks):
        jlo = math.ceil((k - reach) / l2.Q)
        jhi = math.floor((k + reach) / l2.Q)
        total = 0.0
        for a in range(jlo, jhi + 1, chunk):
            b = min(jhi, a + chunk - 1)
            ls = np.arange(a, b + 1, dtype=np.int64) * l2.Q
            f1 = f_coeff(l1, k - ls, bump)
            nz = f1 != 0
            total += float(np.sum(f1[nz] * f_coeff(l2, ls[nz], bump)))
        out[i] = total
    return out


def build_measure(seq: DeskSequence, m: int, K: int, *, samples: int | None = None,
                  bump: Bump | None = None, floor: float = 1e-14, n_uniform: int = 4096,
                  cross_check_ks=None, tol: float = 1e-9) -> MeasureSnapshot:
    """Depth-``m`` snapshot of ``G_m`` with coefficients ``0..K``.

    Parameters
    ----------
    seq : DeskSequence
    m : int
        Depth (``0 <= m <= len(seq)``).
    K : int
        Largest coefficient index.
    samples : int, optional
        Panels per finest interval; defaults to :func:`min_samples`.
        Coarser sampling raises :class:`NyquistError`.
    cross_check_ks : array, optional
        Indices for the analytic cross-check at depth 2 (defaults to a spread
        of 16 indices including the smallest ones).
    tol : float
        Largest accepted bound on the coefficient truncation error.
    """
    bump = bump or make_bump()
    if m < 0 or m > len(seq.q):
        raise ValueError(f"depth must lie in [0, {len(seq.q)}]")
    if K < 1:
        raise ValueError("K must be positive")
    if m == 0:
        offsets = np.linspace(-0.5, 0.5, n_uniform + 1)
        values = np.ones((1, n_uniform + 1))
        coeffs = np.zeros(K + 1, complex)
        coeffs[0] = 1.0
        return MeasureSnapshot(seq.params, list(seq.q), list(seq.Q), 0, K, bump.kind, floor,
                               np.array([0.5]), 0.5, offsets, values, coeffs, "analytic", 0.0,
                               {"route": "exact", "max_abs_diff": 0.0})
    levels = levels_of(seq, m)
    fin_level = levels[-1]
    need = min_samples(fin_level.q, K, bump)
    n = need if samples is None else int(samples)
    if n < need:
        raise NyquistError(f"{n} panels per interval < {need} needed for K={K} at q={fin_level.q:.4g}")
    if n % 2:
        n += 1
    offsets = np.linspace(-1.0, 1.0, n + 1) / fin_level.q
    atoms = surviving_atoms(levels)
    values = _grid_values(levels, atoms, offsets, bump)
    if m == 1:
        coeffs = f_coeff(fin_level, np.arange(K + 1), bump).astype(complex)
        transform = _transform_level1(fin_level, atoms[0], offsets, K, bump)
        diff = float(np.max(np.abs(coeffs - transform)))
        cross = {"route": "sample quadrature (all k)", "max_abs_diff": diff, "n_checked": K + 1}
        source = "analytic"
        trunc = 0.0
    else:
        coeffs, n_mom = _transform_moments(atoms[-1], fin_level, offsets, values, K)
        z = 2 * np.pi * K / fin_level.q
        trunc = float(z**n_mom / math.factorial(n_mom) * np.sum(values @ np.full(n + 1, offsets[1] - offsets[0])))
        source = "sample quadrature"
        if trunc > tol:
            raise NyquistError(f"moment truncation bound {trunc:.3g} exceeds tolerance {tol:.3g}")
        cross = {"route": "none (depth > 2)", "max_abs_diff": float("nan"), "n_checked": 0}
        if m == 2:
            if cross_check_ks is None:
                cross_check_ks = np.unique(np.concatenate([
                    np.arange(0, 4),
                    np.round(np.logspace(1, math.log10(K), 12)).astype(np.int64),
                ]))
            ks = np.asarray(cross_check_ks, dtype=np.int64)
            ana = analytic_coeffs_at(levels, ks, bump)
            diff = float(np.max(np.abs(ana - coeffs[ks])))
            cross = {"route": "coefficient convolution (sampled k)", "max_abs_diff": diff,
                     "n_checked": int(ks.size)}
    order = np.argsort(atoms[-1].centre)
    return MeasureSnapshot(seq.params, list(seq.q), list(seq.Q), m, K, bump.kind, floor,
                           atoms[-1].centre[order], 1.0 / fin_level.q, offsets, values[order],
                           coeffs, source, trunc, cross)


# ---------------------------------------------------------------------------
# support cover


@dataclass
class SupportCover:
    """Per-level atom intervals and their running intersection.

    ``level_centres[i]`` lists every centre of level ``i + 1`` (before
    intersecting), ``intersection[i]`` the closed intervals of the running
    intersection after level ``i + 1`` as an ``(n, 2)`` array.
    """

    radii: list
    level_centres: list
    intersection: list
    min_gaps: list

    def intervals(self, level: int) -> np.ndarray:
        return self.intersection[level - 1]


def support_cover(seq: DeskSequence, m: int, full_level_limit: int = 20_000_000) -> SupportCover:
    levels = levels_of(seq, m)
    radii, centres, inter, gaps = [], [], [], []
    atoms = surviving_atoms(levels)
    prev = np.array([[0.0, 1.0]])
    for lev, at in zip(levels, atoms):
        rad = 1.0 / lev.q
        total = sum((int(p) - 1) * lev.Q for p in lev.primes)
        if total <= full_level_limit:
            allc = np.sort(np.concatenate([lev.centres(int(p)) / (int(p) * lev.Q) for p in lev.primes]))
            centres.append(allc)
            gaps.append(float(np.min(np.diff(allc))) if allc.size > 1 else math.inf)
        else:
            centres.append(None)
            gaps.append(float(np.min(np.diff(at.centre))) if at.size > 1 else math.inf)
        lo = at.centre - rad
        hi = at.centre + rad
        # clip against the previous intersection (each child meets at most two parents)
        j = np.searchsorted(prev[:, 0], at.centre)
        pieces = []
        for jj in (j - 1, j):
            jc = np.clip(jj, 0, prev.shape[0] - 1)
            a = np.maximum(lo, prev[jc, 0])
            b = np.minimum(hi, prev[jc, 1])
            ok = (jj >= 0) & (jj < prev.shape[0]) & (a <= b)
            pieces.append(np.stack([a[ok], b[ok]], axis=1))
        cur = np.concatenate(pieces)
        cur = np.unique(cur, axis=0)
        radii.append(rad)
        inter.append(cur)
        prev = cur
    return SupportCover(radii, centres, inter, gaps)


# ---------------------------------------------------------------------------
# persistence


def _array_block(name: str, arr: np.ndarray):
    arr = np.ascontiguousarray(arr)
    raw = arr.tobytes()
    return {"name": name, "dtype": arr.dtype.str, "shape": list(arr.shape),
            "nbytes": len(raw), "sha256": hashlib.sha256(raw).hexdigest()}, raw


def snapshot_bytes(snap: MeasureSnapshot, config_fingerprint: str = "") -> bytes:
    """Versioned binary: magic line, JSON header length line, JSON header, raw array blocks."""
    blocks, raws = [], []
    for name in ("centres", "offsets", "values", "coeffs"):
        meta, raw = _array_block(name, getattr(snap, name))
        blocks.append(meta)
        raws.append(raw)
    header = {
        "format_version": SNAPSHOT_VERSION,
        "r": snap.params.r, "a": snap.params.a,
        "q": [float(v) for v in snap.q], "Q": [int(v) for v in snap.Q],
        "m": snap.m, "K": snap.K, "bump": snap.bump_kind, "floor": snap.floor,
        "halfwidth": snap.halfwidth, "n_panels": int(snap.offsets.size - 1),
        "coeff_source": snap.coeff_source, "trunc_bound": snap.trunc_bound,
        "cross_check": snap.cross_check, "config_fingerprint": config_fingerprint,
        "blocks": blocks,
    }
    text = json.dumps(header, sort_keys=True, allow_nan=True).encode()
    return SNAPSHOT_MAGIC + b" %d\n" % SNAPSHOT_VERSION + b"%d\n" % len(text) + text + b"".join(raws)


def snapshot_from_bytes(data: bytes) -> MeasureSnapshot:
    buf = io.BytesIO(data)
    magic = buf.readline().split()
    if not magic or magic[0] != SNAPSHOT_MAGIC:
        raise ValueError("not a snapshot file")
    if int(magic[1]) != SNAPSHOT_VERSION:
        raise ValueError(f"unsupported snapshot version {int(magic[1])}")
    n = int(buf.readline())
    header = json.loads(buf.read(n))
    arrays = {}
    for b in header["blocks"]:
        raw = buf.read(b["nbytes"])
        if hashlib.sha256(raw).hexdigest() != b["sha256"]:
            raise ValueError(f"checksum mismatch in block {b['name']}")
        arrays[b["name"]] = np.frombuffer(raw, dtype=np.dtype(b["dtype"])).reshape(b["shape"]).copy()
    return MeasureSnapshot(
        ExponentParams(header["r"], header["a"]), header["q"], header["Q"], header["m"], header["K"],
        header["bump"], header["floor"], arrays["centres"], header["halfwidth"], arrays["offsets"],
        arrays["values"], arrays["coeffs"], header["coeff_source"], header["trunc_bound"],
        header["cross_check"],
    )


def save_snapshot(snap: MeasureSnapshot, path, config_fingerprint: str = "") -> None:
    with open(path, "wb") as fh:
        fh.write(snapshot_bytes(snap, config_fingerprint))


def load_snapshot(path) -> MeasureSnapshot:
    with open(path, "rb") as fh:
        return snapshot_from_bytes(fh.read())
