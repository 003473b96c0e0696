"""Exponent functions, restriction terms and the summability probe.

The three exponent functions of the construction are

    gamma(x) = r * log|log x| / |log x|
    beta(x)  = 1 - (2 + a) * gamma(x)
    s(x)     = 1 - a * gamma(x)

and their powers have closed forms that never need ``x ** gamma(x)``
to be formed directly, e.g. ``x ** gamma(x) = log(x) ** r`` for ``x > 1``.
All powers are evaluated through these closed forms, in the log domain,
so that inputs as large as ``exp(1e8)`` (passed as :class:`mpmath.mpf`
or through ``log_x``) stay finite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import mpmath
import numpy as np

LN2 = math.log(2.0)


class DomainError(ValueError):
    """Raised when an exponent function is evaluated outside its domain."""


@dataclass(frozen=True)
class ExponentParams:
    """Decay exponent ``r`` and dimension-correction exponent ``a``."""

    r: float
    a: float

    def __post_init__(self):
        for name in ("r", "a"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be a finite positive real, got {v!r}")

    def require_restriction(self) -> "ExponentParams":
        """Return self, or raise if the restriction regime ``r > 1`` is not met."""
        if self.r <= 1:
            raise ValueError(f"restriction estimates need r > 1, got r={self.r}")
        return self


# ---------------------------------------------------------------------------
# log |log x| helpers


def _is_mp(v) -> bool:
    return isinstance(v, (mpmath.mpf, mpmath.mpc))


def _resolve_log(x, log_x):
    """Return ``log x`` from either argument, validating the domain."""
    if log_x is None:
        if x is None:
            raise ValueError("either x or log_x is required")
        if _is_mp(x):
            if x <= 0:
                raise DomainError("x must be positive")
            L = mpmath.log(x)
        else:
            xa = np.asarray(x, dtype=float)
            if np.any(~(xa > 0)):
                raise DomainError("x must be positive")
            L = np.log(xa)
    else:
        L = log_x if _is_mp(log_x) else np.asarray(log_x, dtype=float)
    if _is_mp(L):
        if L == 0:
            raise DomainError("x = 1 is outside the domain")
    elif np.any(L == 0) or np.any(~np.isfinite(L)):
        raise DomainError("x = 1 (or a non-finite log) is outside the domain")
    return L


def _signed_loglog(L):
    """Return ``(sign(log x), log|log x|)``."""
    if _is_mp(L):
        return (1 if L > 0 else -1), mpmath.log(abs(L))
    return np.sign(L), np.log(np.abs(L))


def _out(v):
    if _is_mp(v):
        return v
    v = np.asarray(v)
    return float(v) if v.ndim == 0 else v


def gamma(x=None, params: ExponentParams = None, *, log_x=None):
    """``r log|log x| / |log x|`` for ``x > 0``, ``x != 1``."""
    L = _resolve_log(x, log_x)
    _, ll = _signed_loglog(L)
    return _out(params.r * ll / abs(L))


def beta(x=None, params: ExponentParams = None, *, log_x=None):
    """``1 - (2 + a) gamma(x)``."""
    return _out(1 - (2 + params.a) * gamma(x, params, log_x=log_x))


def s_exponent(x=None, params: ExponentParams = None, *, log_x=None):
    """``1 - a gamma(x)``; equals ``beta(x) + 2 gamma(x)``."""
    return _out(1 - params.a * gamma(x, params, log_x=log_x))


def log_pow_gamma(x=None, params: ExponentParams = None, *, log_x=None):
    """``log(x ** gamma(x)) = sign(log x) * r * log|log x|``."""
    L = _resolve_log(x, log_x)
    sg, ll = _signed_loglog(L)
    return _out(sg * params.r * ll)


def log_pow_beta(x=None, params: ExponentParams = None, *, log_x=None):
    """``log(x ** beta(x)) = log x - (2 + a) * log(x ** gamma(x))``."""
    L = _resolve_log(x, log_x)
    sg, ll = _signed_loglog(L)
    return _out(L - (2 + params.a) * sg * params.r * ll)


def log_pow_s(x=None, params: ExponentParams = None, *, log_x=None):
    """``log(x ** s(x)) = log x - a * log(x ** gamma(x))``."""
    L = _resolve_log(x, log_x)
    sg, ll = _signed_loglog(L)
    return _out(L - params.a * sg * params.r * ll)


def _exp(v):
    return mpmath.exp(v) if _is_mp(v) else _out(np.exp(v))


def pow_gamma(x=None, params: ExponentParams = None, *, log_x=None):
    """``x ** gamma(x)``: ``log^r x`` for ``x > 1`` and ``1 / log^r(1/x)`` for ``x < 1``."""
    return _exp(log_pow_gamma(x, params, log_x=log_x))


def pow_beta(x=None, params: ExponentParams = None, *, log_x=None):
    """``x ** beta(x)``: ``x / log^{(2+a)r} x`` for ``x > 1``, ``x log^{(2+a)r}(1/x)`` below."""
    return _exp(log_pow_beta(x, params, log_x=log_x))


def pow_s(x=None, params: ExponentParams = None, *, log_x=None):
    """``x ** s(x)``: ``x / log^{ar} x`` for ``x > 1``, ``x log^{ar}(1/x)`` below."""
    return _exp(log_pow_s(x, params, log_x=log_x))


# ---------------------------------------------------------------------------
# decay envelopes and dimension functions


def _check_monotone(fn, grid, increasing: bool) -> bool:
    v = fn(np.asarray(grid, dtype=float))
    d = np.diff(v)
    tol = 1e-12 * np.maximum(1.0, np.abs(v[1:]))
    return bool(np.all(d >= -tol)) if increasing else bool(np.all(d <= tol))


@dataclass(frozen=True)
class DecayEnvelope:
    """Non-increasing decay function ``g`` given through ``log g`` as a function of ``log xi``.

    Working in ``(log xi) -> log g`` coordinates lets the restriction terms
    use ``xi = 2**k`` for very large ``k`` without overflow.
    """

    log_g: Callable
    label: str
    xi0: float = 1.0

    def __call__(self, xi):
        return np.exp(self.log_g(np.log(np.asarray(xi, dtype=float))))

    def is_nonincreasing(self, log_grid) -> bool:
        return _check_monotone(self.log_g, log_grid, increasing=False)

    @classmethod
    def power(cls, beta_exp: float) -> "DecayEnvelope":
        """``g(xi) = xi ** (-beta / 2)`` (Fourier dimension ``beta``)."""
        if beta_exp <= 0:
            raise ValueError("beta must be positive")
        return cls(lambda L: -0.5 * beta_exp * np.asarray(L), f"power(beta={beta_exp:g})")

    @classmethod
    def polylog(cls, r: float, eps: float = 0.0) -> "DecayEnvelope":
        """``g(xi) = 1 / log^{r - eps}(xi)``, defined for ``xi > 1``."""
        if r - eps <= 0:
            raise ValueError("need r > eps")
        return cls(lambda L: -(r - eps) * np.log(np.asarray(L)), f"polylog(r={r:g}, eps={eps:g})", xi0=math.e)


@dataclass(frozen=True)
class DimensionFunction:
    """Non-decreasing gauge ``h`` with ``h(2t) <= C h(t)``, given through ``log h(log t)``."""

    log_h: Callable
    label: str
    t_max: float = 1.0

    def __call__(self, t):
        return np.exp(self.log_h(np.log(np.asarray(t, dtype=float))))

    def doubling_constant(self, t_grid) -> float:
        """Measured ``max h(2t) / h(t)`` over ``t_grid`` (points with ``2t`` in range)."""
        t = np.asarray(t_grid, dtype=float)
        t = t[2 * t < self.t_max]
        if t.size == 0:
            raise ValueError("grid leaves no room for doubling")
        return float(np.max(np.exp(self.log_h(np.log(2 * t)) - self.log_h(np.log(t)))))

    @classmethod
    def power(cls, alpha: float) -> "DimensionFunction":
        if not 0 < alpha:
            raise ValueError("alpha must be positive")
        return cls(lambda L: alpha * np.asarray(L), f"power(alpha={alpha:g})", t_max=np.inf)

    @classmethod
    def log_corrected(cls, params: ExponentParams, eps: float = 0.0) -> "DimensionFunction":
        """``h(t) = t * log^{ar + eps}(1/t)`` on ``(0, 1/e)``."""
        e = params.a * params.r + eps
        return cls(
            lambda L: np.asarray(L) + e * np.log(-np.asarray(L)),
            f"log_corrected(ar+eps={e:g})",
            t_max=math.exp(-e) if e > 0 else 1.0,
        )


# ---------------------------------------------------------------------------
# restriction terms


def _log_int(k):
    """``log k`` for a Python int of any size, or an array."""
    if isinstance(k, (int, np.integer)):
        return math.log(int(k))
    return np.log(np.asarray(k, dtype=float))


def _check_p(p):
    if not (1 <= p < 2):
        raise ValueError(f"p must lie in [1, 2), got {p}")


def log_gamma_term(k, p: float, eps: float, params: ExponentParams):
    """Natural log of the dyadic restriction term for the polylogarithmic pair.

    The term is ``[1/log^{r-eps}(2^{k-1})]^{2/p-1} * [log^{ar+eps}(2^k)]^{2-2/p}``.
    ``k`` may be an arbitrarily large Python int.
    """
    _check_p(p)
    if isinstance(k, (int, np.integer)):
        if k < 2:
            raise ValueError("k must be >= 2")
    elif np.any(np.asarray(k) < 2):
        raise ValueError("k must be >= 2")
    log_ln2 = math.log(LN2)
    lk1 = _log_int(k - 1) + log_ln2
    lk = _log_int(k) + log_ln2
    return -(params.r - eps) * (2 / p - 1) * lk1 + (params.a * params.r + eps) * (2 - 2 / p) * lk


def gamma_term(k, p: float, eps: float, params: ExponentParams):
    return _exp(log_gamma_term(k, p, eps, params))


def log_gamma_term_general(k, p: float, envelope: DecayEnvelope, dimfn: DimensionFunction, n: int = 1):
    """Log of ``g(2^{k-1})^{2/p-1} (2^{nk} h(2^{-k}))^{2-2/p}`` for a general pair."""
    _check_p(p)
    lk = float(k) * LN2 if isinstance(k, (int, np.integer)) else np.asarray(k, float) * LN2
    return (2 / p - 1) * envelope.log_g(lk - LN2) + (2 - 2 / p) * (n * lk + dimfn.log_h(-lk))


def restriction_threshold(params: ExponentParams) -> float:
    """Critical exponent ``1 + (r - 1) / (1 + r + 2ar)`` below which the dyadic series converges."""
    params.require_restriction()
    r, a = params.r, params.a
    return 1 + (r - 1) / (1 + r + 2 * a * r)


def stm_threshold(alpha: float, beta_exp: float, n: int = 1) -> float:
    """Classical threshold ``2(2n - 2alpha + beta) / (4(n - alpha) + beta)`` for power-type pairs."""
    if not (0 < alpha < n) or beta_exp <= 0:
        raise ValueError("need 0 < alpha < n and beta > 0")
    return 2 * (2 * n - 2 * alpha + beta_exp) / (4 * (n - alpha) + beta_exp)


def polylog_exponent(p: float, eps: float, params: ExponentParams) -> float:
    """Power of ``k`` governing the polylogarithmic terms; the series converges iff it exceeds 1."""
    return (params.r - eps) * (2 / p - 1) - (params.a * params.r + eps) * (2 - 2 / p)


# ---------------------------------------------------------------------------
# summability probe


SUMMABLE = "Summable"
DIVERGENT = "Divergent"
INCONCLUSIVE = "Inconclusive"


class ProbeResult(NamedTuple):
    verdict: str
    partial_sum: float
    tail_bound: float
    log_ratio: float
    depth: int


def summability_probe(term, kmax: int, rtol: float = 1e-3, *, log_terms: bool = False) -> ProbeResult:
    """Decide convergence of ``sum_k term(k)`` by Cauchy condensation.

    The condensed sequence ``b_j = 2^j term(2^j)`` is examined for
    ``j <= log2(kmax)``. The verdict is

    * ``Summable`` when the condensed terms decay geometrically over the
      trailing window and the geometric tail bound is below ``rtol`` times
      the partial sum,
    * ``Divergent`` when the condensed terms stop decreasing (they are
      bounded below, so the series diverges for monotone terms),
    * ``Inconclusive`` otherwise, which covers slowly decaying boundary cases
      such as ``1 / (k log k)``.

    Parameters
    ----------
    term : callable
        ``k -> term(k)`` for Python ints ``k >= 2``; returns ``log term(k)``
        when ``log_terms`` is true.
    kmax : int
        Largest index examined. May be a huge Python int (``2**16384``).
    """
    kmax = int(kmax)
    if kmax < 8:
        raise ValueError("kmax must be at least 8")
    if not 0 < rtol < 1:
        raise ValueError("rtol must lie in (0, 1)")
    J = kmax.bit_length() - 1

    def lb(j):
        k = 1 << j
        v = term(k)
        if not log_terms:
            v = math.log(v) if v > 0 else -math.inf
        return j * LN2 + v

    vals = []
    j = 1
    checkpoint = 16
    flat_hits = 0
    while j <= J:
        vals.append(lb(j))
        if len(vals) >= min(checkpoint, J):
            arr = np.asarray(vals)
            w = max(4, len(arr) // 4)
            w = min(w, len(arr) - 1)
            tail = arr[-w - 1:]
            if not np.isfinite(arr[-1]) and arr[-1] < 0:
                # condensed terms underflowed: the tail is exactly negligible
                return ProbeResult(SUMMABLE, math.exp(_logsumexp(arr)), 0.0, -math.inf, j)
            slope = (tail[-1] - tail[0]) / w
            lmax = float(np.max(np.diff(tail)))
            if lmax < 0:
                log_s = _logsumexp(arr)
                log_tail = arr[-1] + lmax - math.log(-math.expm1(lmax))
                if log_tail - log_s <= math.log(rtol):
                    return ProbeResult(SUMMABLE, math.exp(log_s), math.exp(log_tail), slope, j)
            if slope >= -1e-12:
                flat_hits += 1
                if flat_hits >= 2 or len(arr) >= J:
                    return ProbeResult(DIVERGENT, math.exp(min(_logsumexp(arr), 700.0)), math.inf, slope, j)
            else:
                flat_hits = 0
            checkpoint *= 2
        j += 1
    arr = np.asarray(vals)
    return ProbeResult(INCONCLUSIVE, math.exp(min(_logsumexp(arr), 700.0)), math.inf, float(arr[-1] - arr[-2]), J)


def _logsumexp(arr) -> float:
    arr = np.asarray(arr, dtype=float)
    m = float(np.max(arr))
    if not np.isfinite(m):
        return m
    return m + math.log(float(np.sum(np.exp(arr - m))))


def summability_flip(verdict_at: Callable[[float], str], lo: float, hi: float, resolution: float = 1e-3) -> float:
    """Bisect for the exponent where ``verdict_at(p)`` stops being ``Summable``.

    ``verdict_at(lo)`` must be ``Summable`` and ``verdict_at(hi)`` must not be.
    """
    if verdict_at(lo) != SUMMABLE:
        raise ValueError("lower end is not summable")
    if verdict_at(hi) == SUMMABLE:
        raise ValueError("upper end is summable")
    while hi - lo > resolution / 4:
        mid = 0.5 * (lo + hi)
        if verdict_at(mid) == SUMMABLE:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


FLIP_KMAX = 1 << 16384


def polylog_flip(params: ExponentParams, eps: float = 0.0, resolution: float = 1e-3, kmax: int = FLIP_KMAX) -> float:
    """Exponent at which the polylogarithmic dyadic series stops being summable (numerical)."""
    params.require_restriction()

    def verdict(p):
        return summability_probe(lambda k: log_gamma_term(k, p, eps, params), kmax, log_terms=True).verdict

    return summability_flip(verdict, 1.0, 1.999, resolution)


def general_flip(envelope: DecayEnvelope, dimfn: DimensionFunction, n: int = 1,
                 resolution: float = 1e-3, kmax: int = 1 << 200) -> float:
    """Exponent at which the general dyadic series stops being summable (numerical).

    Power-type pairs give geometric terms, so condensation settles long
    before ``2**200``; the index then still fits in a float.
    """

    def verdict(p):
        return summability_probe(
            lambda k: float(log_gamma_term_general(k, p, envelope, dimfn, n)), kmax, log_terms=True
        ).verdict

    return summability_flip(verdict, 1.0, 1.999, resolution)
