"""Prime sieves, prime windows and the prime-count sandwich threshold."""

from __future__ import annotations

import functools
import math

import numpy as np


def sieve(n: int) -> np.ndarray:
    """All primes ``<= n`` as an int64 array (sieve of Eratosthenes on odd numbers)."""
    n = int(n)
    if n < 2:
        return np.zeros(0, dtype=np.int64)
    odd = np.ones((n - 1) // 2, dtype=bool)  # odd[i] <-> 2i + 3
    for i in range((math.isqrt(n) - 1) // 2):
        if odd[i]:
            p = 2 * i + 3
            odd[(p * p - 3) // 2::p] = False
    return np.concatenate(([2], 2 * np.nonzero(odd)[0] + 3)).astype(np.int64)


def primes_in(lo: int, hi: int) -> np.ndarray:
    """Primes in the closed range ``[lo, hi]`` by a segmented sieve."""
    lo, hi = max(int(lo), 2), int(hi)
    if hi < lo:
        return np.zeros(0, dtype=np.int64)
    base = sieve(math.isqrt(hi))
    seg = np.ones(hi - lo + 1, dtype=bool)
    for p in base:
        p = int(p)
        start = max(p * p, ((lo + p - 1) // p) * p)
        seg[start - lo::p] = False
    return (np.nonzero(seg)[0] + lo).astype(np.int64)


def prime_window(x: float) -> np.ndarray:
    """Primes in the half-open window ``(x/2, x]``."""
    if not x > 0:
        raise ValueError("window size must be positive")
    lo = math.floor(x / 2) + 1
    return primes_in(lo, math.floor(x))


# ---------------------------------------------------------------------------
# prime-count sandwich: 1/2 <= #{p in [x/2, x]} / (x / log x) <= 2 for x >= lambda
#
# Above a crossover the explicit bounds
#     pi(x) >= x/log x (1 + 1/log x)                     (x >= 599)
#     pi(x) <= x/log x (1 + 1/log x + 2.51/log^2 x)      (x >= 355991)
# settle the sandwich; below it the sieve decides exactly.


def _explicit_lower_ratio(L: np.ndarray) -> np.ndarray:
    L2 = L - math.log(2)
    return (1 + 1 / L) - (L / (2 * L2)) * (1 + 1 / L2 + 2.51 / L2**2)


def _explicit_upper_ratio(L: np.ndarray) -> np.ndarray:
    L2 = L - math.log(2)
    return (1 + 1 / L + 2.51 / L**2) - (L / (2 * L2)) * (1 + 1 / L2) + L * np.exp(-L)


def explicit_crossover() -> float:
    """Smallest ``x`` (>= 2 * 355991) from which the explicit bounds prove the sandwich.

    The lower-ratio bound tends to 1/2 from above like ``0.153 / log x``;
    it is checked on a dense grid in ``log x`` up to ``log x = 1e4`` and is
    increasing towards its limit beyond the last crossing.
    """
    L = np.linspace(math.log(2 * 355991), 1e4, 400001)
    ok = (_explicit_lower_ratio(L) >= 0.5) & (_explicit_upper_ratio(L) <= 2.0)
    bad = np.nonzero(~ok)[0]
    if bad.size == 0:
        return float(np.exp(L[0]))
    return float(np.exp(L[bad[-1] + 1]))


@functools.lru_cache(maxsize=1)
def sandwich_threshold() -> float:
    """Least ``lambda`` with the prime-count sandwich for every real ``x >= lambda``.

    Between consecutive events (a prime entering at ``x = p`` or leaving once
    ``x > 2p``) the count is constant while ``x / log x`` increases, so the
    lower bound is tightest at the right end of each interval and the upper
    bound at its left end. The returned value is the right end of the last
    interval showing a violation.
    """
    X0 = explicit_crossover()
    P = sieve(int(X0) + 2)
    events = np.unique(np.concatenate([P, 2 * P, [3]]))
    events = events[events <= X0]
    left, right = events[:-1].astype(float), events[1:].astype(float)
    mid = 0.5 * (left + right)
    # count on the open interval: primes p with mid/2 < p <= mid (no event inside)
    count = np.searchsorted(P, mid, side="right") - np.searchsorted(P, mid / 2, side="right")
    lower = count * np.log(right) / right
    upper = count * np.log(left) / left
    # the event points themselves
    at = events.astype(float)
    cnt_at = np.searchsorted(P, at, side="right") - np.searchsorted(P, at / 2, side="left")
    ratio_at = cnt_at * np.log(at) / at
    viol = (lower < 0.5) | (upper > 2.0)
    lam = float(right[np.nonzero(viol)[0][-1]]) if viol.any() else 3.0
    bad_at = at[(ratio_at < 0.5) | (ratio_at > 2.0)]
    if bad_at.size:
        lam = max(lam, float(bad_at[-1]))
    return lam


def count_ratio(x: float) -> float:
    """``#{p in [x/2, x]} / (x / log x)`` for a real ``x > e``."""
    n = len(primes_in(math.ceil(x / 2), math.floor(x)))
    return n * math.log(x) / x
