"""Smooth bumps on ``(-1, 1)`` with unit mass and their Fourier transforms.

Two kinds are provided:

``mollifier``
    ``C exp(-1 / (1 - x^2))``. Its transform is tabulated once by a padded
    FFT of trapezoid samples (spectrally accurate because every derivative
    vanishes at the endpoints) and read back by 8-point Lagrange
    interpolation. ``scipy.integrate.quad`` with a cosine weight serves as
    the independent check in the tests.
``polynomial``
    ``C (1 - x^2)^m``. Its transform has the closed form
    ``Gamma(m + 3/2) 2^{m+1} / sqrt(pi) * j_m(w) / w^m`` with
    ``w = 2 pi xi`` and ``j_m`` the spherical Bessel function.

The transform convention is ``phi_hat(xi) = int phi(x) exp(-2 pi i x xi) dx``;
both bumps are even, so their transforms are real and even.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, special

_H = 1.0 / 4096  # sample spacing in x for the tables
_TABLE_STEP = 1.0 / 256  # spacing in xi
_TABLE_XI_MAX = 1024.0
_LAGRANGE = 8


def _mollifier_raw(x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    m = np.abs(x) < 1
    xm = x[m]
    out[m] = np.exp(-1.0 / (1.0 - xm * xm))
    return out


def _mollifier_derivs(x, order: int):
    """Derivatives of ``exp(-1/(1-x^2))`` (unnormalised) up to order 2."""
    x = np.asarray(x, dtype=float)
    f = _mollifier_raw(x)
    if order == 0:
        return f
    out = np.zeros_like(x)
    m = np.abs(x) < 1
    xm = x[m]
    u = 1.0 - xm * xm
    if order == 1:
        out[m] = f[m] * (-2 * xm / u**2)
    elif order == 2:
        out[m] = f[m] * (4 * xm**2 / u**4 - 2 / u**2 - 8 * xm**2 / u**3)
    else:
        raise ValueError("derivative order must be 0, 1 or 2")
    return out


@dataclass
class Bump:
    """Unit-mass even bump supported in ``[-1, 1]``.

    Attributes
    ----------
    kind : str
        ``"mollifier"`` or ``"polynomial"``.
    degree : int
        Exponent ``m`` of the polynomial bump (ignored for the mollifier).
    sup_norms : tuple of float
        Measured ``(||phi||_inf, ||phi'||_inf, ||phi''||_inf)``.
    l1_second : float
        ``||phi''||_1``.
    c2 : float
        Constant in ``|phi_hat(xi)| <= c2 / xi^2``, namely ``||phi''||_1 / (4 pi^2)``.
    """

    kind: str = "mollifier"
    degree: int = 8
    normaliser: float = field(init=False)
    sup_norms: tuple = field(init=False)
    l1_second: float = field(init=False)
    c2: float = field(init=False)
    _table: np.ndarray = field(init=False, repr=False)
    _tail_max: np.ndarray = field(init=False, repr=False)
    _cdf_x: np.ndarray = field(init=False, repr=False)
    _cdf: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.kind not in ("mollifier", "polynomial"):
            raise ValueError(f"unknown bump kind {self.kind!r}")
        if self.kind == "polynomial" and self.degree < 4:
            raise ValueError("polynomial bump needs degree >= 4 for the decay bounds")
        x = np.linspace(-1.0, 1.0, int(round(2 / _H)) + 1)
        raw = self._raw(x, 0)
        # trapezoid and closed-form masses agree to rounding for both kinds
        self.normaliser = float(np.sum(raw) * _H)
        grid = np.linspace(-1, 1, 400001)
        self.sup_norms = tuple(float(np.max(np.abs(self._raw(grid, j)))) / self.normaliser for j in range(3))
        d2 = self._raw(x, 2) / self.normaliser
        self.l1_second = float(np.sum(np.abs(d2)) * _H)
        self.c2 = self.l1_second / (4 * math.pi**2)
        vals = raw / self.normaliser
        cdf = np.concatenate(([0.0], np.cumsum(0.5 * (vals[1:] + vals[:-1]) * _H)))
        self._cdf_x, self._cdf = x, cdf / cdf[-1]
        if self.kind == "mollifier":
            self._table = self._fft_table(vals)
        else:
            xi = np.arange(int(_TABLE_XI_MAX / _TABLE_STEP) + 1) * _TABLE_STEP
            self._table = self._poly_transform(xi)
        self._tail_max = np.maximum.accumulate(np.abs(self._table)[::-1])[::-1]

    # -- real space
    def _raw(self, x, order):
        if self.kind == "mollifier":
            return _mollifier_derivs(x, order)
        x = np.asarray(x, dtype=float)
        m = self.degree
        out = np.zeros_like(x)
        inside = np.abs(x) < 1
        xm = x[inside]
        u = 1 - xm * xm
        if order == 0:
            out[inside] = u**m
        elif order == 1:
            out[inside] = -2 * m * xm * u ** (m - 1)
        elif order == 2:
            out[inside] = -2 * m * u ** (m - 1) + 4 * m * (m - 1) * xm**2 * u ** (m - 2)
        else:
            raise ValueError("derivative order must be 0, 1 or 2")
        return out

    def __call__(self, x):
        return self._raw(x, 0) / self.normaliser

    def derivative(self, x, order: int = 1):
        return self._raw(x, order) / self.normaliser

    def cdf(self, x):
        """``int_{-1}^{x} phi``."""
        return np.interp(np.asarray(x, dtype=float), self._cdf_x, self._cdf, left=0.0, right=1.0)

    # -- Fourier side
    @staticmethod
    def _fft_table(vals):
        n_pad = int(round(1 / (_H * _TABLE_STEP)))
        buf = np.zeros(n_pad)
        idx = np.arange(vals.size) - (vals.size // 2)
        buf[idx % n_pad] = vals * _H
        spec = np.fft.rfft(buf).real
        n_keep = int(_TABLE_XI_MAX / _TABLE_STEP) + 1
        return spec[:n_keep].copy()

    def _poly_transform(self, xi):
        m = self.degree
        w = 2 * math.pi * np.abs(np.asarray(xi, dtype=float))
        pref = math.exp(special.gammaln(m + 1.5)) * 2 ** (m + 1) / math.sqrt(math.pi)
        out = np.empty_like(w)
        small = w < 1e-2
        ws = w[small]
        dfact = float(special.factorial2(2 * m + 1, exact=True))
        out[small] = pref / dfact * (1 - ws**2 / (2 * (2 * m + 3)) + ws**4 / (8 * (2 * m + 3) * (2 * m + 5)))
        wl = w[~small]
        out[~small] = pref * special.spherical_jn(m, wl) / wl**m
        return out

    def transform(self, xi):
        """``phi_hat(xi)`` (real, even)."""
        xi = np.abs(np.asarray(xi, dtype=float))
        if self.kind == "polynomial":
            return self._poly_transform(xi)
        out = np.zeros_like(xi)
        inside = xi < _TABLE_XI_MAX - _LAGRANGE * _TABLE_STEP
        out[inside] = _lagrange(self._table, xi[inside] / _TABLE_STEP)
        return out

    def majorant(self, xi):
        """Non-increasing upper bound for ``|phi_hat|`` beyond ``|xi|``."""
        xi = np.abs(np.asarray(xi, dtype=float))
        if self.kind == "polynomial":
            m = self.degree
            pref = math.exp(special.gammaln(m + 1.5)) * 2 ** (m + 1) / math.sqrt(math.pi)
            w = 2 * math.pi * np.maximum(xi, 1e-300)
            return np.minimum(1.0, pref / w ** (m + 1))
        i = np.clip(np.floor(xi / _TABLE_STEP).astype(np.int64), 0, self._tail_max.size - 1)
        # pad by the interpolation error scale
        return np.where(xi >= _TABLE_XI_MAX, 0.0, self._tail_max[i] * 1.001 + 1e-17)

    def majorant_integral(self, xi0: float) -> float:
        """``int_{xi0}^inf majorant(xi) dxi`` for ``xi0 >= 0``."""
        xi0 = abs(float(xi0))
        if self.kind == "polynomial":
            m = self.degree
            pref = math.exp(special.gammaln(m + 1.5)) * 2 ** (m + 1) / math.sqrt(math.pi)
            x1 = (pref ** (1 / (m + 1))) / (2 * math.pi)  # where the power bound meets 1
            flat = max(x1 - xi0, 0.0)
            start = max(xi0, x1)
            return flat + pref / (2 * math.pi) ** (m + 1) * start ** (-m) / m
        if xi0 >= _TABLE_XI_MAX:
            return 0.0
        vals = self._tail_max * 1.001 + 1e-17
        i = int(xi0 // _TABLE_STEP)
        first = vals[i] * ((i + 1) * _TABLE_STEP - xi0)
        return float(first + _TABLE_STEP * np.sum(vals[i + 1:]))

    def xi_cut(self, floor: float) -> float:
        """Smallest ``xi`` beyond which ``|phi_hat| < floor``."""
        if floor <= 0:
            raise ValueError("floor must be positive")
        if self.kind == "polynomial":
            m = self.degree
            pref = math.exp(special.gammaln(m + 1.5)) * 2 ** (m + 1) / math.sqrt(math.pi)
            return (pref / floor) ** (1 / (m + 1)) / (2 * math.pi)
        above = np.nonzero(self._tail_max * 1.001 + 1e-17 >= floor)[0]
        if above.size == 0:
            return 0.0
        return float((above[-1] + 1) * _TABLE_STEP)


_BARY = np.array([1.0 / math.prod(j - k for k in range(_LAGRANGE) if k != j) for j in range(_LAGRANGE)])


def _lagrange(table, u):
    """Local ``_LAGRANGE``-point Lagrange interpolation of ``table`` at fractional index ``u``.

    Uses the barycentric form ``prod_k t_k * sum_j w_j v_j / t_j`` on the
    stencil ``floor(u) - 3 .. floor(u) + 4``; even symmetry supplies the
    values left of the origin.
    """
    half = _LAGRANGE // 2
    base = np.floor(u).astype(np.int64)
    i0 = base - (half - 1)
    frac = u - base
    out = np.zeros(u.size)
    prod = np.ones(u.size)
    for j in range(_LAGRANGE):
        prod *= frac + (half - 1) - j
    exact = frac == 0
    safe = np.where(exact, 0.5, frac)
    for j in range(_LAGRANGE):
        t = safe + (half - 1) - j
        out += _BARY[j] * table[np.abs(i0 + j)] / t
    res = np.where(exact, 0.0, prod) * out
    if exact.any():
        res[exact] = table[np.abs(base[exact])]
    return res


@functools.lru_cache(maxsize=8)
def make_bump(kind: str = "mollifier", degree: int = 8) -> Bump:
    """Cached bump factory."""
    return Bump(kind=kind, degree=degree)


def quad_transform(bump: Bump, xi: float) -> float:
    """Independent ``phi_hat(xi)`` by adaptive cosine-weighted quadrature."""
    f = lambda x: float(bump(np.array([x]))[0])
    val, _ = integrate.quad(f, 0, 1, weight="cos", wvar=2 * math.pi * xi, epsabs=1e-15, limit=500)
    return 2 * val
