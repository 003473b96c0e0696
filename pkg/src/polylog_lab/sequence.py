"""Scale sequences ``q_1 < q_2 < ...``: growth conditions, certified and desk generation.

Two modes exist and are never mixed:

certified
    Terms are :class:`~polylog_lab.lognum.LogTower` numbers chosen as the
    smallest values meeting every initial condition (L1-L10) and growth
    condition (F1-F5), times a safety factor. They are far too large to
    build a measure from; they exist to show the conditions are satisfiable
    and to record the margins.
desk
    Terms are floats reachable on a desk (``q`` up to about ``1e9``) with
    ``q ** beta(q)`` an integer and a non-empty prime window. The growth
    conditions are reported but do not hold at this scale.

The explicit constants of the growth conditions are gathered in
:class:`SequenceConstants`; their derivation is documented there.
"""

from __future__ import annotations

import configparser
import functools
import io
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy import optimize, special

from . import lognum
from .bump import Bump, make_bump
from .exponents import ExponentParams, log_pow_beta, pow_gamma
from .lognum import LogTower, ctx, lt_compare, lt_exp, lt_from_real, lt_log, lt_max, lt_mul, lt_pow
from .primes import prime_window, sandwich_threshold

FORMAT_VERSION = 1
SAFETY = 1e-6

L_NAMES = tuple(f"L{i}" for i in range(1, 11))
F_NAMES = tuple(f"F{i}" for i in range(1, 6))


# ---------------------------------------------------------------------------
# constants


def log_weighted_zeta(t: float) -> float:
    """``sum_{l != 0} log^t|l| / l^2`` (direct sum plus incomplete-gamma tail)."""
    n = 10**6
    ls = np.arange(2, n + 1, dtype=float)
    head = float(np.sum(np.log(ls) ** t / ls**2))
    # int_n^inf log^t x / x^2 dx = Gamma(t + 1, log n)
    tail = float(special.gammaincc(t + 1, math.log(n)) * special.gamma(t + 1))
    return 2 * (head + tail)


@functools.lru_cache(maxsize=4)
def plateau_hat_l1(bump_kind: str = "mollifier") -> float:
    """``||psi_hat||_1`` for the plateau ``psi = 1_{[-3/2, 3/2]} * phi_{1/2}``.

    ``psi`` equals 1 on ``[-1, 1]``, lies in ``(0, 1)`` for ``1 < |x| < 2``
    and vanishes beyond, and ``psi_hat(xi) = sin(3 pi xi) / (pi xi) * phi_hat(xi / 2)``.
    """
    b = make_bump(bump_kind)
    xi = np.linspace(-300, 300, 240001)
    with np.errstate(invalid="ignore", divide="ignore"):
        sinc = np.where(xi == 0, 3.0, np.sin(3 * np.pi * xi) / (np.pi * xi))
    vals = np.abs(sinc * b.transform(xi / 2))
    return float(np.sum(0.5 * (vals[1:] + vals[:-1]) * np.diff(xi)))


@dataclass(frozen=True)
class SequenceConstants:
    """Explicit constants entering the growth conditions.

    * ``norm_base``, ``norm_ratio``: the weighted-norm constant at depth ``m`` is
      ``norm_base * norm_ratio ** m``. It comes from
      ``||psi|| <= 5 ||psi||_inf + c_r ||psi''||_inf`` with
      ``c_r = sum log^t|l| / l^2 / (4 pi^2)`` (two integrations by parts), and
      the per-level sup bounds ``||F^{(j)}||_inf <= 8 r max_j ||phi^{(j)}||_inf
      q^j log^{ar} q loglog q``; so ``norm_base = 5 + c_r`` and
      ``norm_ratio = 8 r max_j ||phi^{(j)}||_inf``.
    * ``mass``: the coefficient-envelope constant ``6 r sup|phi_hat|`` (divisor
      count at most 2 below ``q``, prime count at least half its asymptotic size).
    * ``close``: the same envelope constant, used with ``psi_hat_l1``.
    * ``frostman_ratio``: the ball-mass constant at depth ``m`` is
      ``16 * frostman_ratio ** m`` with ``frostman_ratio = 4 ||phi||_inf``.
    """

    norm_base: float
    norm_ratio: float
    mass: float
    close: float
    psi_hat_l1: float
    frostman_ratio: float
    bump_kind: str = "mollifier"

    def norm(self, m: int) -> float:
        return self.norm_base * self.norm_ratio**m

    def frostman(self, m: int) -> float:
        return 16 * self.frostman_ratio**m

    @classmethod
    def from_bump(cls, bump: Bump, params: ExponentParams) -> "SequenceConstants":
        t = max(1.0, params.r)
        c_r = log_weighted_zeta(t) / (4 * math.pi**2)
        mass = 6 * params.r
        return cls(
            norm_base=5 + c_r,
            norm_ratio=8 * params.r * max(bump.sup_norms),
            mass=mass,
            close=mass,
            psi_hat_l1=plateau_hat_l1(bump.kind),
            frostman_ratio=4 * bump.sup_norms[0],
            bump_kind=bump.kind,
        )


# ---------------------------------------------------------------------------
# initial conditions


def _upper_root(fn, lo: float) -> float:
    """Largest root of an eventually positive increasing ``fn`` on ``(lo, inf)``."""
    hi = max(2 * lo, lo + 1)
    while fn(hi) <= 0:
        hi *= 2
    return optimize.brentq(fn, lo, hi, xtol=1e-14, rtol=1e-14, maxiter=500)


def _log_power_crossing(c: float) -> float:
    """Least ``u0`` with ``log u <= c u`` for all ``u >= u0`` (0 when it always holds)."""
    if c >= 1 / math.e:
        return 0.0
    return _upper_root(lambda u: c * u - math.log(u), 1 / c)


@functools.lru_cache(maxsize=64)
def l_thresholds(params: ExponentParams) -> dict:
    """Per-condition thresholds on ``log q_1`` for L1-L10 (strict inequalities).

    L5 and L9 bound ``q_1`` itself; their entries are ``log`` of the stated
    threshold so that all ten compare against ``log q_1``.
    """
    r, a = params.r, params.a
    lam3 = sandwich_threshold()
    c5 = (2 + a) * r + 1
    # x / log x >= c5 beyond the upper root (x / log x is increasing on (e, inf))
    lam5 = _upper_root(lambda x: x / math.log(x) - c5, math.e) if c5 > math.e else math.e
    u9 = _log_power_crossing(1 / (2 * a * r))  # log x <= x^{1/(2ar)}  <=>  log u <= u / (2ar), u = log x
    lam10 = math.exp(_log_power_crossing(r / 4)) if _log_power_crossing(r / 4) > 0 else 0.0
    return {
        "L1": 2 ** (1 / ((1 + a) * r)),
        "L2": math.e,
        "L3": lam3 ** (1 / r),
        "L4": 4 ** (1 / r),
        "L5": math.log(lam5),
        "L6": r,
        "L7": math.exp(1 / r),
        "L8": 2 ** (1 / (a * r)),
        "L9": u9,
        "L10": lam10,
    }


def _exact_thresholds(params: ExponentParams) -> dict:
    """The thresholds of :func:`l_thresholds` at tower precision where they have closed forms."""
    r, a = ctx.mpf(params.r), ctx.mpf(params.a)
    th = {k: ctx.mpf(v) for k, v in l_thresholds(params).items()}
    th.update({
        "L1": ctx.power(2, 1 / ((1 + a) * r)),
        "L2": +ctx.e,
        "L3": ctx.power(ctx.mpf(sandwich_threshold()), 1 / r),
        "L4": ctx.power(4, 1 / r),
        "L6": r,
        "L7": ctx.exp(1 / r),
        "L8": ctx.power(2, 1 / (a * r)),
    })
    return th


def minimal_log_q1(params: ExponentParams) -> float:
    """Least ``log q_1`` passing L1-L10 (the largest per-condition threshold)."""
    return max(l_thresholds(params).values())


class ConditionResult(NamedTuple):
    name: str
    passed: bool
    margin: float
    depth: int
    approximate: bool
    detail: str = ""


@dataclass
class ConditionReport:
    results: list

    @property
    def all_passed(self) -> bool:
        return all(r.passed for r in self.results)

    def get(self, name: str) -> ConditionResult:
        for r in self.results:
            if r.name == name:
                return r
        raise KeyError(name)

    def failures(self) -> list:
        return [r for r in self.results if not r.passed]

    def __iter__(self):
        return iter(self.results)

    def __len__(self):
        return len(self.results)


def _as_tower(q) -> LogTower:
    return q if isinstance(q, LogTower) else lt_from_real(q)


def _margin_float(m) -> float:
    try:
        return float(m)
    except (OverflowError, ValueError):
        return math.inf if m > 0 else -math.inf


def check_L(q1, params: ExponentParams, *, terms=None) -> ConditionReport:
    """Evaluate L1-L10 at depth 1 (``log q - threshold``).

    When ``terms`` is given every term is checked and the smallest margin is
    reported, so a sequence passes only if each of its terms would.
    """
    qs = [_as_tower(q) for q in (terms if terms is not None else [q1])]
    th = _exact_thresholds(params)
    out = []
    for name in L_NAMES:
        worst = None
        for q in qs:
            logq = lognum._descend(q, 1)
            t = th[name]
            m = logq - t
            if abs(m) <= lognum._SNAP * max(abs(t), 1):
                m = ctx.mpf(0)
            res = ConditionResult(name, bool(m > 0), _margin_float(m), 1, q.approximate,
                                  f"log q > {ctx.nstr(th[name], 12)}")
            if worst is None or res.margin < worst.margin:
                worst = res
        out.append(worst)
    return ConditionReport(out)


# ---------------------------------------------------------------------------
# growth conditions


def _tower_from_log_log(x: LogTower) -> LogTower:
    return lt_exp(lt_exp(x))


def _frostman_product(terms: list, params: ExponentParams, upto: int) -> LogTower:
    """Upper bound for ``prod_{j<=upto} q_j^{1-gamma-beta} / #P_j``.

    Uses ``q^{1-gamma-beta} = log^{(1+a)r} q`` and ``#P >= x / (2 log x)``
    with ``x = log^r q`` (prime-count sandwich), i.e. each factor is at most
    ``2 r log^{ar} q loglog q``.
    """
    acc = lt_from_real(1)
    ar = params.a * params.r
    for q in terms[:upto]:
        lq = lt_log(q)
        llq = lt_log(lq)
        acc = lt_mul(acc, lt_mul(lt_from_real(2 * params.r), lt_mul(lt_pow(lq, ar), llq)))
    return acc


def growth_bounds(terms: list, i: int, params: ExponentParams, const: SequenceConstants) -> dict:
    """Lower bounds for ``q_{i+1}`` from F1-F5 given ``q_1 .. q_i`` (1-based ``i``)."""
    q = terms[i - 1]
    ar = params.a * params.r
    r = params.r
    out = {}
    # F1: q_{m+1} >= exp exp(2 c m^2 q_m^2 log^{m(ar+1)} q_m)
    X = lt_mul(lt_from_real(2 * const.norm(i) * i * i), lt_mul(lt_pow(q, 2), lt_pow(lt_log(q), i * (ar + 1))))
    out["F1"] = _tower_from_log_log(X)
    # F2, F3 at index i + 1
    out["F2"] = lt_from_log(ctx.power(ctx.mpf(const.mass) * 2 ** (i + 1), ctx.mpf(2) / r))
    out["F3"] = lt_from_log(ctx.mpf(2) ** (i + 1))
    # F4: max(2 q_i, exp((2 c ||psi_hat||_1 q_i)^{2/r}))
    inner = lt_pow(lt_mul(lt_from_real(2 * const.close * const.psi_hat_l1), q), 2 / r)
    out["F4"] = lt_max(lt_mul(lt_from_real(2), q), lt_exp(inner))
    # F5: q_{i+1} >= exp exp(C_{i+2} Q_i)
    Qi = _frostman_product(terms, params, i)
    out["F5"] = _tower_from_log_log(lt_mul(lt_from_real(const.frostman(i + 2)), Qi))
    return out


def lt_from_log(v) -> LogTower:
    return lognum.lt_from_log(v)


def _index_bound(name: str, i: int, params: ExponentParams, const: SequenceConstants) -> LogTower:
    if name == "F2":
        return lt_from_log(ctx.power(ctx.mpf(const.mass) * 2**i, ctx.mpf(2) / params.r))
    return lt_from_log(ctx.mpf(2) ** i)


def check_F(terms, params: ExponentParams, const: SequenceConstants | None = None) -> ConditionReport:
    """Evaluate F1-F5 over all consecutive pairs (F2, F3 over all terms).

    Margins are ``log^d q - log^d bound`` at the comparison depth ``d`` (one
    below the smaller level); a condition passes when ``q >= bound``.
    """
    terms = [_as_tower(q) for q in terms]
    if const is None:
        const = SequenceConstants.from_bump(make_bump(), params)
    worst: dict = {}

    def record(name, q, bound, where):
        c = lt_compare(q, bound)
        approx = q.approximate or bound.approximate
        res = ConditionResult(name, c.order >= 0, _margin_float(c.margin), c.depth, approx, where)
        cur = worst.get(name)
        if cur is None or (cur.passed and not res.passed) or (cur.passed == res.passed and res.margin < cur.margin):
            worst[name] = res

    for i, q in enumerate(terms, start=1):
        for name in ("F2", "F3"):
            record(name, q, _index_bound(name, i, params, const), f"term {i}")
    for i in range(1, len(terms)):
        b = growth_bounds(terms, i, params, const)
        for name in ("F1", "F4", "F5"):
            record(name, terms[i], b[name], f"pair ({i},{i + 1})")
    out = []
    for name in F_NAMES:
        if name in worst:
            out.append(worst[name])
        else:
            out.append(ConditionResult(name, True, math.inf, 0, False, "no consecutive pair"))
    return ConditionReport(out)


def check_all(terms, params: ExponentParams, const: SequenceConstants | None = None) -> ConditionReport:
    """L1-L10 on every term followed by F1-F5: the fifteen conditions."""
    rl = check_L(None, params, terms=terms)
    rf = check_F(terms, params, const)
    return ConditionReport(rl.results + rf.results)


class MassCheck(NamedTuple):
    total: float
    bound: float
    passed: bool
    approximate: bool


def mass_condition(terms, params: ExponentParams, const: SequenceConstants) -> MassCheck:
    """``sum_{i>=1} log^2 log q_{i+1} / log^r q_{i+1} <= 1 / (2c)``, summed in the log domain."""
    terms = [_as_tower(q) for q in terms]
    total = ctx.mpf(0)
    approx = False
    for q in terms[1:]:
        lq = lt_log(q)
        llq = lt_log(lq)
        a = lognum._descend(llq, 0)
        b = lognum._descend(lq, 0)
        if ctx.isinf(a) or ctx.isinf(b):
            # log of the term: 2 log(llq) - r llq; llq non-explicit means it underflows entirely
            lll = lognum._descend(llq, 1)
            if ctx.isinf(lll):
                approx = True
                continue
            log_term = 2 * lll - params.r * lognum._descend(lq, 1)
            total += ctx.exp(log_term) if not ctx.isinf(log_term) else 0
            approx = True
            continue
        total += ctx.exp(2 * ctx.log(a) - params.r * ctx.log(b))
        approx = approx or q.approximate
    bound = 1 / (2 * const.mass)
    return MassCheck(float(total), bound, bool(total <= bound), approx)


# ---------------------------------------------------------------------------
# certified generation


def _inflate(t: LogTower) -> LogTower:
    """Apply the safety factor: to the value when explicit, else to the deepest mantissa."""
    if t.level <= lognum.MAX_EXPLICIT_LEVEL:
        return lt_mul(t, lt_from_real(ctx.mpf(1) + SAFETY))
    return lognum._normalize(t.level, t.mantissa * (1 + ctx.mpf(SAFETY)), t.approximate, t.absorption_level)


def _integral_q(logq0, params: ExponentParams):
    """Least ``log q >= logq0`` with ``q ** beta(q)`` a positive integer (explicit range)."""
    r, a = params.r, params.a
    k = (2 + a) * r
    u0 = ctx.mpf(logq0)
    if u0 <= k:
        u0 = ctx.mpf(k) * (1 + ctx.mpf(SAFETY))  # move onto the increasing branch
    lb = u0 - k * ctx.log(u0)
    Q = int(ctx.ceil(ctx.exp(lb) * (1 - ctx.mpf(2) ** -150)))
    Q = max(Q, 1)
    target = ctx.log(Q)
    u = u0
    for _ in range(200):
        f = u - k * ctx.log(u) - target
        step = f / (1 - k / u)
        u -= step
        if abs(step) < ctx.mpf(2) ** -(lognum.PRECISION - 8) * u:
            break
    return u, Q


@dataclass
class CertifiedSequence:
    params: ExponentParams
    terms: list
    Q1: int
    constants: SequenceConstants
    report: ConditionReport
    mass: MassCheck
    mode: str = "certified"
    notes: list = field(default_factory=list)

    def absorption_levels(self) -> list:
        return [t.absorption_level for t in self.terms]


def next_term_certified(terms: list, params: ExponentParams, const: SequenceConstants | None = None) -> LogTower:
    """Largest of the F1-F5 lower bounds for the next term, inflated by ``1 + 1e-6``."""
    if not terms:
        raise ValueError("need at least one term")
    if const is None:
        const = SequenceConstants.from_bump(make_bump(), params)
    terms = [_as_tower(q) for q in terms]
    bounds = growth_bounds(terms, len(terms), params, const)
    return _inflate(lt_max(*bounds.values()))


def gen_certified(params: ExponentParams, length: int, bump: Bump | None = None) -> CertifiedSequence:
    """Smallest sequence meeting L1-L10 and F1-F5, each term inflated by ``1 + 1e-6``.

    ``q_1`` is moved up to the next value with ``q_1 ** beta(q_1)`` an integer;
    for later terms that adjustment changes the value by a relative amount
    below the tower precision and is left implicit.
    """
    if length < 1:
        raise ValueError("length must be positive")
    bump = bump or make_bump()
    const = SequenceConstants.from_bump(bump, params)
    logq = max(
        minimal_log_q1(params),
        float(ctx.power(ctx.mpf(const.mass) * 2, ctx.mpf(2) / params.r)),  # F2 at i = 1
        2.0,  # F3 at i = 1
    )
    logq = ctx.mpf(logq) + ctx.log1p(SAFETY)
    u, Q1 = _integral_q(logq, params)
    terms = [lognum.lt_from_log(u)]
    for i in range(1, length):
        terms.append(next_term_certified(terms, params, const))
    report = check_all(terms, params, const)
    mass = mass_condition(terms, params, const)
    notes = [
        "q_1 ** beta(q_1) is an integer; later terms carry the integrality adjustment implicitly",
        f"tower precision {lognum.PRECISION} bits",
    ]
    return CertifiedSequence(params, terms, Q1, const, report, mass, notes=notes)


# ---------------------------------------------------------------------------
# desk generation


def desk_adjust(q: float, params: ExponentParams) -> tuple[float, int]:
    """Least ``q' >= q`` with ``q' ** beta(q')`` an integer ``Q >= 1``.

    Requires ``log q > (2 + a) r`` so that ``q ** beta(q)`` is increasing.
    """
    k = (2 + params.a) * params.r
    if not math.log(q) > k:
        raise ValueError(f"need log q > (2+a) r = {k:g} for a monotone adjustment")
    Qf = math.exp(log_pow_beta(q, params))
    Q = max(1, math.ceil(Qf - 1e-9 * Qf))
    logQ = math.log(Q)
    f = lambda u: u - k * math.log(u) - logQ
    u0 = math.log(q)
    if f(u0) >= 0:
        return q, Q
    hi = u0 + 1
    while f(hi) < 0:
        hi += 1
    u = optimize.brentq(f, u0, hi, xtol=1e-15, rtol=1e-15)
    return math.exp(u), Q


@dataclass
class DeskSequence:
    params: ExponentParams
    q: list
    Q: list
    windows: list
    growth: float
    mode: str = "desk"
    notes: list = field(default_factory=lambda: [
        "desk mode: terms are far below the growth conditions; margins are informational",
    ])

    def __len__(self):
        return len(self.q)

    def prime_counts(self) -> list:
        return [len(w) for w in self.windows]


def gen_desk(params: ExponentParams, q1: float, count: int, growth: float = 1.5) -> DeskSequence:
    """Desk-scale sequence ``q_{i+1} ~ q_i ** growth`` with integral ``Q_i = q_i ** beta(q_i)``."""
    if count < 1:
        raise ValueError("count must be positive")
    if growth <= 1:
        raise ValueError("growth must exceed 1")
    q, Q = desk_adjust(q1, params)
    if Q < 2:
        raise ValueError(f"q1 ** beta(q1) = {math.exp(log_pow_beta(q1, params)):.4g} < 2; raise q1")
    qs, Qs, windows = [], [], []
    for i in range(count):
        if i > 0:
            q, Q = desk_adjust(qs[-1] ** growth, params)
        w = prime_window(pow_gamma(q, params))
        if w.size == 0:
            raise ValueError(f"empty prime window at q = {q:.6g}")
        qs.append(q)
        Qs.append(Q)
        windows.append(w)
    return DeskSequence(params, qs, Qs, windows, growth)


def desk_level(params: ExponentParams, q: float) -> DeskSequence:
    """A single desk window (``q`` adjusted to integral ``Q``)."""
    return gen_desk(params, q, 1)


# ---------------------------------------------------------------------------
# certificate files


def _report_lines(report: ConditionReport) -> dict:
    return {
        r.name.lower(): f"pass={int(r.passed)} margin={r.margin!r} depth={r.depth} approximate={int(r.approximate)}"
        for r in report
    }


def certificate_text(seq, bump_kind: str = "mollifier") -> str:
    """Structured text certificate for a certified or desk sequence."""
    cp = configparser.ConfigParser(interpolation=None)
    p = seq.params
    cp["certificate"] = {
        "format_version": str(FORMAT_VERSION),
        "mode": seq.mode,
        "r": repr(p.r),
        "a": repr(p.a),
        "length": str(len(seq.terms) if seq.mode == "certified" else len(seq.q)),
        "bump": bump_kind,
    }
    if seq.mode == "certified":
        c = seq.constants
        cp["constants"] = {k: repr(getattr(c, k)) for k in
                           ("norm_base", "norm_ratio", "mass", "close", "psi_hat_l1", "frostman_ratio")}
        terms = {"q1_integral_Q": str(seq.Q1)}
        for i, t in enumerate(seq.terms, start=1):
            terms[f"q{i}"] = lognum.to_exact_string(t)
            terms[f"q{i}_render"] = lognum.render(t)
        cp["terms"] = terms
        cp["conditions"] = _report_lines(seq.report)
        cp["mass"] = {"total": repr(seq.mass.total), "bound": repr(seq.mass.bound),
                      "pass": str(int(seq.mass.passed)), "approximate": str(int(seq.mass.approximate))}
    else:
        cp["certificate"]["growth"] = repr(seq.growth)
        terms = {}
        for i, (q, Q, w) in enumerate(zip(seq.q, seq.Q, seq.windows), start=1):
            terms[f"q{i}"] = repr(q)
            terms[f"q{i}_integral_Q"] = str(Q)
            terms[f"q{i}_primes"] = str(len(w))
        cp["terms"] = terms
        cp["conditions"] = _report_lines(check_all(seq.q, p))
    cp["notes"] = {f"note{i}": n for i, n in enumerate(seq.notes, start=1)}
    buf = io.StringIO()
    buf.write("# scale-sequence certificate\n")
    cp.write(buf)
    return buf.getvalue()


def read_certificate(text: str):
    """Parse certificate text back into a sequence object (conditions re-derived)."""
    cp = configparser.ConfigParser(interpolation=None)
    cp.read_string(text)
    head = cp["certificate"]
    version = int(head["format_version"])
    if version != FORMAT_VERSION:
        raise ValueError(f"unsupported certificate format version {version}")
    params = ExponentParams(float(head["r"]), float(head["a"]))
    n = int(head["length"])
    terms = cp["terms"]
    if head["mode"] == "certified":
        towers = [lognum.from_exact_string(terms[f"q{i}"]) for i in range(1, n + 1)]
        c = cp["constants"]
        const = SequenceConstants(**{k: float(c[k]) for k in c}, bump_kind=head.get("bump", "mollifier"))
        report = check_all(towers, params, const)
        return CertifiedSequence(params, towers, int(terms["q1_integral_Q"]), const, report,
                                 mass_condition(towers, params, const))
    if head["mode"] == "desk":
        qs = [float(terms[f"q{i}"]) for i in range(1, n + 1)]
        Qs = [int(terms[f"q{i}_integral_Q"]) for i in range(1, n + 1)]
        windows = [prime_window(pow_gamma(q, params)) for q in qs]
        return DeskSequence(params, qs, Qs, windows, float(head.get("growth", "nan")))
    raise ValueError(f"unknown mode {head['mode']!r}")


def recheck(seq) -> ConditionReport:
    """Re-derive the fifteen conditions for a parsed sequence."""
    if seq.mode == "certified":
        return check_all(seq.terms, seq.params, seq.constants)
    return check_all(seq.q, seq.params)
