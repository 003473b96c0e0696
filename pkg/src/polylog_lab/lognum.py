"""Iterated-exponential numbers for astronomically large sequence terms.

A :class:`LogTower` stands for ``exp^n(M)`` (``n`` nested exponentials of
the mantissa ``M``). The normal form is unique:

* ``n == 0`` holds the values in ``(0, e)`` directly, ``M`` being the value;
* ``n >= 1`` requires ``1 <= M < e``, so level ``n`` covers
  ``[exp^n(1), exp^{n+1}(1))``.

Mantissas live in a private mpmath context at :data:`PRECISION` bits, which
keeps global ``mpmath.mp`` settings untouched. Operations descend to a log
depth where both operands are explicit multiprecision reals. When an operand
is smaller than the larger one by more than the working precision it is
absorbed and the result is flagged ``approximate``; the level at which that
happened is tracked in ``absorption_level``.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, replace
from typing import NamedTuple

from mpmath.ctx_mp import MPContext

PRECISION = 192
MAX_EXPLICIT_LEVEL = 3  # exp^3(M) < exp(3.9e6) is still an explicit mpf

ctx = MPContext()
ctx.prec = PRECISION
_E = ctx.e
_SNAP = ctx.ldexp(ctx.mpf(1), -(PRECISION - 24))


def _mpf(x):
    if isinstance(x, LogTower):
        raise TypeError("expected a real, got a LogTower")
    return ctx.mpf(x)


def _min_level(*levels):
    vals = [v for v in levels if v is not None]
    return min(vals) if vals else None


@functools.total_ordering
@dataclass(frozen=True, eq=False)
class LogTower:
    """Positive real ``exp^level(mantissa)`` in normal form."""

    level: int
    mantissa: object
    approximate: bool = False
    absorption_level: int | None = None

    # -- comparisons ignore the bookkeeping flags
    def __eq__(self, other):
        if not isinstance(other, LogTower):
            other = lt_from_real(other)
        return lt_compare(self, other).order == 0

    def __lt__(self, other):
        if not isinstance(other, LogTower):
            other = lt_from_real(other)
        return lt_compare(self, other).order < 0

    def __hash__(self):
        return hash((self.level, str(self.mantissa)))

    def __repr__(self):
        flag = ", approximate" if self.approximate else ""
        return f"LogTower({render(self)}{flag})"

    # convenience operators
    def __mul__(self, other):
        return lt_mul(self, other if isinstance(other, LogTower) else lt_from_real(other))

    __rmul__ = __mul__

    def __add__(self, other):
        return lt_add(self, other if isinstance(other, LogTower) else lt_from_real(other))

    __radd__ = __add__

    def __pow__(self, e):
        return lt_pow(self, e)

    def is_explicit(self) -> bool:
        return self.level <= MAX_EXPLICIT_LEVEL

    def to_mpf(self):
        """The value as an mpf; only for ``level <= MAX_EXPLICIT_LEVEL``."""
        return _descend(self, 0)

    def to_float(self) -> float:
        v = self.to_mpf()
        return float(v)


def _normalize(level: int, M, approximate=False, absorption_level=None) -> LogTower:
    M = _mpf(M)
    if level == 0 and M <= 0:
        raise ValueError("LogTower values must be positive")
    while True:
        if level >= 1 and M < 1:
            if 1 - M <= _SNAP:
                M = ctx.mpf(1)
                continue
            M = ctx.exp(M)
            level -= 1
            continue
        if M >= _E or (M > 1 and _E - M <= _SNAP * _E):
            M = ctx.log(M)
            level += 1
            if abs(M - 1) <= _SNAP:
                M = ctx.mpf(1)
            continue
        break
    return LogTower(level, M, approximate, absorption_level)


def lt_from_real(x) -> LogTower:
    """Normalize a positive real (int, float, string or mpf)."""
    M = _mpf(x)
    if not M > 0:
        raise ValueError(f"LogTower values must be positive, got {x!r}")
    return _normalize(0, M)


def lt_from_log(log_value) -> LogTower:
    """The tower whose natural log is the given positive real or tower."""
    if isinstance(log_value, LogTower):
        return lt_exp(log_value)
    return _normalize(1, _mpf(log_value))


def _descend(t: LogTower, depth: int):
    """``log^depth(t)`` as an mpf, or ``+inf`` when it is not explicit."""
    if depth > t.level:
        v = t.mantissa
        for _ in range(depth - t.level):
            if v <= 0:
                raise ValueError("log of a non-positive value")
            v = ctx.log(v)
        return v
    k = t.level - depth
    if k > MAX_EXPLICIT_LEVEL:
        return ctx.inf
    v = t.mantissa
    for _ in range(k):
        v = ctx.exp(v)
    return v


def _flags(*ts):
    return any(t.approximate for t in ts), _min_level(*(t.absorption_level for t in ts))


def lt_log(t: LogTower) -> LogTower:
    approx, al = _flags(t)
    if t.level >= 1:
        return _normalize(t.level - 1, t.mantissa, approx, al)
    if t.mantissa <= 1:
        raise ValueError("log of a value <= 1 is not a positive LogTower")
    return _normalize(0, ctx.log(t.mantissa), approx, al)


def lt_exp(t: LogTower) -> LogTower:
    approx, al = _flags(t)
    return _normalize(t.level + 1, t.mantissa, approx, al)


class Comparison(NamedTuple):
    order: int
    margin: object
    depth: int


def lt_compare(s: LogTower, t: LogTower, depth: int | None = None) -> Comparison:
    """Order of ``s`` against ``t`` and the signed gap ``log^d s - log^d t``.

    The default depth is one below the smaller level, where both values are
    explicit and the gap reads naturally (``exp(exp(3))`` against
    ``exp(exp(2.9))`` gives a gap of ``0.1`` at depth 2). Gaps below the
    working precision snap to zero and count as equality.
    """
    if depth is None:
        depth = max(min(s.level, t.level) - 1, 0)
    a = _descend(s, depth)
    b = _descend(t, depth)
    if ctx.isinf(a) and ctx.isinf(b):
        # both beyond explicit range at this depth: fall back to normal forms
        if s.level != t.level:
            order = 1 if s.level > t.level else -1
        else:
            d = s.mantissa - t.mantissa
            order = 0 if abs(d) <= _SNAP * 4 else (1 if d > 0 else -1)
        return Comparison(order, ctx.inf * order if order else ctx.mpf(0), depth)
    if ctx.isinf(a) or ctx.isinf(b):
        order = 1 if ctx.isinf(a) else -1
        return Comparison(order, ctx.inf * order, depth)
    margin = a - b
    scale = max(abs(a), abs(b), ctx.mpf(1))
    if abs(margin) <= _SNAP * scale:
        return Comparison(0, ctx.mpf(0), depth)
    return Comparison(1 if margin > 0 else -1, margin, depth)


def _absorbed(big: LogTower, *others: LogTower) -> LogTower:
    approx, al = _flags(big, *others)
    return replace(big, approximate=True, absorption_level=_min_level(al, big.level))


def lt_add(s: LogTower, t: LogTower) -> LogTower:
    """``s + t`` for positive towers."""
    if lt_compare(s, t).order < 0:
        s, t = t, s
    approx, al = _flags(s, t)
    if s.level <= MAX_EXPLICIT_LEVEL:
        a, b = s.to_mpf(), t.to_mpf()
        if b < a * ctx.ldexp(1, -PRECISION + 1):
            return _absorbed(s, t)
        return _normalize(0, a + b, approx, al)
    ls = lt_log(s)
    if ls.level > MAX_EXPLICIT_LEVEL:
        return _absorbed(s, t)
    ls_m = ls.to_mpf()
    lt_m = ctx.log(t.mantissa) if t.level == 0 else _descend(t, 1)
    if ctx.isinf(lt_m):
        return _absorbed(s, t)
    delta = ctx.log1p(ctx.exp(lt_m - ls_m))
    if delta < ls_m * ctx.ldexp(1, -PRECISION + 1):
        return _absorbed(s, t)
    return _normalize(1, ls_m + delta, approx, al)


def _log_signed(t: LogTower):
    """``log t`` as either a LogTower (t > 1) or an explicit signed mpf."""
    if t.level == 0:
        return ctx.log(t.mantissa)
    return lt_log(t)


def lt_mul(s: LogTower, t: LogTower) -> LogTower:
    """``s * t``."""
    approx, al = _flags(s, t)
    if s.level <= MAX_EXPLICIT_LEVEL and t.level <= MAX_EXPLICIT_LEVEL:
        return _normalize(0, s.to_mpf() * t.to_mpf(), approx, al)
    if lt_compare(s, t).order < 0:
        s, t = t, s
    ls = lt_log(s)
    lt_ = _log_signed(t)
    if isinstance(lt_, LogTower):
        return lt_exp(lt_add(ls, lt_))
    if lt_ == 0:
        return replace(s, approximate=approx, absorption_level=al)
    # t <= e: shift log s by a modest signed amount
    if ls.level > MAX_EXPLICIT_LEVEL:
        return _absorbed(s, t)
    ls_m = ls.to_mpf()
    if abs(lt_) < ls_m * ctx.ldexp(1, -PRECISION + 1):
        return _absorbed(s, t)
    return _normalize(1, ls_m + lt_, approx, al)


def lt_pow(t: LogTower, e) -> LogTower:
    """``t ** e`` for a real exponent ``e``."""
    e = _mpf(e)
    approx, al = _flags(t)
    if e == 0:
        return lt_from_real(1)
    if t.level <= MAX_EXPLICIT_LEVEL - 1 or (t.level == 0):
        v = t.to_mpf()
        return _normalize(0, ctx.power(v, e), approx, al)
    if e < 0:
        inv = lt_pow(t, -e)
        if inv.level > MAX_EXPLICIT_LEVEL:
            raise OverflowError("reciprocal of a non-explicit tower")
        return _normalize(0, 1 / inv.to_mpf(), inv.approximate, inv.absorption_level)
    L = lt_log(t)
    return lt_exp(lt_mul(L, lt_from_real(e)))


def lt_max(*ts: LogTower) -> LogTower:
    best = ts[0]
    for t in ts[1:]:
        if lt_compare(t, best).order > 0:
            best = t
    return best


# ---------------------------------------------------------------------------
# rendering and exact serialization


def render(t: LogTower, digits: int = 20) -> str:
    """``exp^n(M)`` with ``M`` to ``digits`` significant digits."""
    return f"exp^{t.level}({ctx.nstr(t.mantissa, digits)})"


def log_depth_table(t: LogTower, digits: int = 15) -> list[tuple[int, str]]:
    """Rows ``(d, log^d t)`` for ``d = 0 .. level``; non-explicit rows stay symbolic."""
    rows = []
    for d in range(t.level + 1):
        k = t.level - d
        if k <= 2:
            rows.append((d, ctx.nstr(_descend(t, d), digits)))
        else:
            rows.append((d, f"exp^{k}({ctx.nstr(t.mantissa, digits)})"))
    return rows


def to_exact_string(t: LogTower) -> str:
    """Bit-exact text form ``level;mantissa_man;mantissa_exp;approx;absorption``."""
    man, exp = t.mantissa.man_exp
    al = "" if t.absorption_level is None else str(t.absorption_level)
    return f"{t.level};{int(man)};{int(exp)};{int(t.approximate)};{al}"


def from_exact_string(text: str) -> LogTower:
    parts = text.strip().split(";")
    if len(parts) != 5:
        raise ValueError(f"malformed tower string {text!r}")
    level, man, exp, approx, al = parts
    M = ctx.ldexp(ctx.mpf(int(man)), int(exp))
    return LogTower(int(level), M, bool(int(approx)), int(al) if al else None)
