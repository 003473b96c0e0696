"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 condition failure, 3 I/O or format
error, 4 numerical-tolerance failure.
"""

from __future__ import annotations

import argparse
import configparser
import hashlib
import io
import json
import math
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .exponents import ExponentParams, restriction_threshold, stm_threshold

EXIT_OK, EXIT_USAGE, EXIT_CONDITION, EXIT_IO, EXIT_NUMERIC = 0, 1, 2, 3, 4
OUTPUT_FORMAT_VERSION = 1


class UsageError(Exception):
    pass


class ConditionFailure(Exception):
    pass


# ---------------------------------------------------------------------------
# run configuration

_SCHEMA = {
    "params": {"r": float, "a": float},
    "sequence": {"mode": str, "q1": float, "growth": float, "count": int, "length": int},
    "build": {"m": int, "K": int, "samples": int, "bump": str},
    "analysis": {"eps_decay": float, "eps_frostman": float},
    "restrict": {"p_grid": str, "deltas": str, "centres": int},
    "output": {"dir": str, "plot": str},
    "run": {"seed": int, "jobs": int},
}

_DEFAULTS = {
    "params": {"r": 2.0, "a": 0.5},
    "sequence": {"mode": "desk", "q1": 1e6, "growth": 1.5, "count": 2, "length": 5},
    "build": {"m": 2, "K": 1 << 20, "samples": 0, "bump": "mollifier"},
    "analysis": {"eps_decay": 0.25, "eps_frostman": 0.1},
    "restrict": {"p_grid": "1.0,1.1,1.2,1.5,2.0", "deltas": "2^-4:2^-12", "centres": 4},
    "output": {"dir": ".", "plot": "no"},
    "run": {"seed": 0, "jobs": 1},
}


@dataclass
class RunConfig:
    """Resolved configuration: defaults, then the config file, then command-line flags."""

    values: dict = field(default_factory=lambda: {s: dict(v) for s, v in _DEFAULTS.items()})

    @classmethod
    def from_text(cls, text: str) -> "RunConfig":
        cfg = cls()
        cp = configparser.ConfigParser(interpolation=None)
        cp.optionxform = str
        try:
            cp.read_string(text)
        except configparser.Error as exc:
            raise UsageError(f"malformed config: {exc}") from exc
        for sec in cp.sections():
            if sec not in _SCHEMA:
                raise UsageError(f"unknown config section [{sec}]")
            for key, raw in cp[sec].items():
                if key not in _SCHEMA[sec]:
                    raise UsageError(f"unknown config key {sec}.{key}")
                cfg.set(sec, key, raw)
        return cfg

    def set(self, sec: str, key: str, raw) -> None:
        typ = _SCHEMA[sec][key]
        try:
            self.values[sec][key] = typ(float(raw)) if typ is int and isinstance(raw, str) and "e" in raw.lower() else typ(raw)
        except (TypeError, ValueError) as exc:
            raise UsageError(f"bad value for {sec}.{key}: {raw!r}") from exc

    def get(self, sec: str, key: str):
        return self.values[sec][key]

    @property
    def params(self) -> ExponentParams:
        try:
            return ExponentParams(float(self.get("params", "r")), float(self.get("params", "a")))
        except ValueError as exc:
            raise UsageError(str(exc)) from exc

    def text(self) -> str:
        cp = configparser.ConfigParser(interpolation=None)
        cp.optionxform = str
        for sec, kv in self.values.items():
            cp[sec] = {k: repr(v) if isinstance(v, float) else str(v) for k, v in kv.items()}
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()

    def fingerprint(self, exclude=("output",)) -> str:
        """Hash of every setting that affects results (output location excluded)."""
        sub = {s: v for s, v in self.values.items() if s not in exclude}
        blob = json.dumps(sub, sort_keys=True, default=repr).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def _parse_list(text: str) -> list:
    """Comma list of floats, or ``2^-i:2^-j`` for dyadic ranges."""
    text = text.strip()
    if ":" in text and "^" in text:
        a, b = text.split(":")
        i = int(a.split("^")[1])
        j = int(b.split("^")[1])
        step = 1 if j >= i else -1
        return [2.0**e for e in range(i, j + step, step)]
    return [float(v) for v in text.split(",") if v.strip()]


# ---------------------------------------------------------------------------
# helpers


def _outdir(cfg: RunConfig) -> str:
    d = cfg.get("output", "dir")
    os.makedirs(d, exist_ok=True)
    return d


def _write(path: str, text: str) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(text)


def _stamp(cfg: RunConfig, kind: str) -> str:
    return f"# format_version={OUTPUT_FORMAT_VERSION} kind={kind} config_fingerprint={cfg.fingerprint()}\n"


def _emit_config(cfg: RunConfig, outdir: str, name: str) -> None:
    _write(os.path.join(outdir, f"{name}.config.ini"),
           f"# resolved configuration, fingerprint {cfg.fingerprint()}\n" + cfg.text())


def _structured(d: dict) -> str:
    return json.dumps(d, indent=2, sort_keys=True, default=_jsonable) + "\n"


def _jsonable(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, np.ndarray):
        return v.tolist()
    return repr(v)


def _plot(path: str, x, ys: dict, xlabel: str, ylabel: str, logx=True, logy=True) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 4))
    for label, y in ys.items():
        ax.plot(x, y, label=label, lw=0.8)
    if logx:
        ax.set_xscale("log")
    if logy:
        ax.set_yscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def _load_snapshot(path: str):
    from .construction import load_snapshot

    try:
        return load_snapshot(path)
    except FileNotFoundError as exc:
        raise OSError(f"snapshot not found: {path}") from exc
    except (ValueError, KeyError, json.JSONDecodeError) as exc:
        raise OSError(f"unreadable snapshot {path}: {exc}") from exc


def _desk_sequence(cfg: RunConfig, count: int):
    from .exponents import log_pow_beta
    from .sequence import gen_desk

    params = cfg.params
    q1 = cfg.get("sequence", "q1")
    Qf = math.exp(log_pow_beta(q1, params)) if math.log(q1) > 1 else 0.0
    if Qf < 16:
        print(f"warning: q1 ** beta(q1) = {Qf:.3g} < 16; the level structure is nearly degenerate. "
              "A larger q1 keeps more arithmetic structure.", file=sys.stderr)
    try:
        return gen_desk(params, q1, count, cfg.get("sequence", "growth"))
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


# ---------------------------------------------------------------------------
# commands


def cmd_sequence(args, cfg: RunConfig) -> int:
    from .sequence import certificate_text, gen_certified, read_certificate, recheck

    if args.action == "gen":
        outdir = _outdir(cfg)
        mode = cfg.get("sequence", "mode")
        if mode == "certified":
            seq = gen_certified(cfg.params, cfg.get("sequence", "length"))
            report = seq.report
            ok = report.all_passed and seq.mass.passed
        elif mode == "desk":
            seq = _desk_sequence(cfg, cfg.get("sequence", "count"))
            report = recheck(seq)
            print("desk mode: F-conditions not satisfied; terms are far below the growth bounds")
            ok = True
        else:
            raise UsageError(f"unknown mode {mode!r}")
        path = args.output or os.path.join(outdir, "sequence.cert")
        _write(path, certificate_text(seq, cfg.get("build", "bump")))
        _emit_config(cfg, outdir, "sequence")
        for r in report:
            print(f"{r.name:>3} {'pass' if r.passed else 'FAIL'} margin={float(r.margin):.6g} depth={r.depth}")
        print(f"certificate written to {path}")
        if not ok:
            raise ConditionFailure("certified sequence fails a condition")
        return EXIT_OK
    # check
    try:
        with open(args.certificate) as fh:
            text = fh.read()
    except OSError as exc:
        raise OSError(f"cannot read certificate: {exc}") from exc
    try:
        seq = read_certificate(text)
    except (ValueError, KeyError, configparser.Error) as exc:
        raise OSError(f"malformed certificate: {exc}") from exc
    report = recheck(seq)
    for r in report:
        print(f"{r.name:>3} {'pass' if r.passed else 'FAIL'} margin={float(r.margin):.6g}")
    if seq.mode == "desk":
        print("desk mode: F-conditions not satisfied; only the L-conditions are meaningful")
        failing = [r for r in report if not r.passed and r.name.startswith("L")]
    else:
        failing = list(report.failures())
    if failing:
        raise ConditionFailure("failed: " + ", ".join(r.name for r in failing))
    return EXIT_OK


def cmd_measure(args, cfg: RunConfig) -> int:
    from .construction import NyquistError, build_measure, save_snapshot

    m = cfg.get("build", "m")
    seq = _desk_sequence(cfg, max(m, 1))
    samples = cfg.get("build", "samples") or None
    from .bump import make_bump

    try:
        snap = build_measure(seq, m, cfg.get("build", "K"), samples=samples, bump=make_bump(cfg.get("build", "bump")))
    except NyquistError as exc:
        print(f"numerical tolerance: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    outdir = _outdir(cfg)
    path = args.output or os.path.join(outdir, f"measure_m{m}.snap")
    save_snapshot(snap, path, cfg.fingerprint())
    _emit_config(cfg, outdir, "measure")
    print(f"snapshot m={m} K={snap.K} intervals={snap.n_intervals} mass={snap.coeffs[0].real:.12g} "
          f"drift={snap.mass_drift():.3e}")
    print(f"cross-check ({snap.cross_check.get('route')}): max |diff| = {snap.cross_check.get('max_abs_diff')}")
    print(f"written to {path}")
    return EXIT_OK


def _analysis_params(snap, cfg: RunConfig, args) -> ExponentParams:
    return snap.params if getattr(args, "snapshot", None) else cfg.params


def cmd_analyze(args, cfg: RunConfig) -> int:
    from . import analysis as an
    from .construction import level_from_q, support_cover
    from .sequence import desk_adjust

    outdir = _outdir(cfg)
    plot = cfg.get("output", "plot").lower() in ("yes", "true", "1")
    what = args.what
    name = f"analyze_{what}"
    summary: dict = {"format_version": OUTPUT_FORMAT_VERSION, "config_fingerprint": cfg.fingerprint()}
    status = EXIT_OK
    if what in ("decay", "frostman", "lemma1"):
        if not args.snapshot:
            raise UsageError(f"analyze {what} needs --snapshot")
        snap = _load_snapshot(args.snapshot)
        params = snap.params
        summary["snapshot"] = {"m": snap.m, "K": snap.K, "q": snap.q[: snap.m]}
    if what == "decay":
        eps = args.eps if args.eps is not None else cfg.get("analysis", "eps_decay")
        if snap.K < 1000:
            raise UsageError("decay analysis needs K >= 1000")
        rep = an.decay_profile(snap, params, eps)
        summary.update({"ratio": rep.ratio, "calibration": rep.calibration, "band_sup": rep.band_sup,
                        "conforming": rep.conforming, "notes": rep.notes,
                        "fit": rep.fit.__dict__ if rep.fit else None})
        _write(os.path.join(outdir, f"{name}.csv"), _stamp(cfg, "decay") + rep.csv())
        if plot:
            _plot(os.path.join(outdir, f"{name}.svg"), rep.ks, {"|G_hat(k)| log^(r-eps) k": rep.products},
                  "k", "envelope product")
        print(("conforming" if rep.conforming else "NON-CONFORMING") + f": ratio {rep.ratio:.4g} (limit {rep.limit})")
        for n in rep.notes:
            print(n)
    elif what == "frostman":
        eps = args.eps if args.eps is not None else cfg.get("analysis", "eps_frostman")
        rep = an.frostman_profile(snap, params, eps)
        summary.update({"max_over_median": rep.max_over_median, "median": rep.median, "trend": rep.trend,
                        "monotone": rep.monotone, "refinement": rep.refinement, "conforming": rep.conforming})
        _write(os.path.join(outdir, f"{name}.csv"), _stamp(cfg, "frostman") + rep.csv())
        if plot:
            _plot(os.path.join(outdir, f"{name}.svg"), rep.radii, {"normalised sup mass": rep.ratios},
                  "R", "ratio")
        print(("conforming" if rep.conforming else "NON-CONFORMING") + f": max/median {rep.max_over_median:.4g}")
    elif what == "divisor":
        params = cfg.params
        qs = args.q or [cfg.get("sequence", "q1")]
        rows = []
        for q in qs:
            qq, Q = desk_adjust(q, params)
            lev = level_from_q(qq, Q, params)
            rep = an.divisor_bound_check(lev, args.kmax)
            rows.append({"q": qq, "Q": Q, "primes": lev.n_primes, "min_slack": rep.min_slack,
                         "violations": int(rep.violations.size)})
            print(f"q={qq:.6g} Q={Q} primes={lev.n_primes} min_slack={rep.min_slack:.4g} "
                  f"violations={rep.violations.size}")
        summary["windows"] = rows
        if any(r["violations"] for r in rows):
            status = EXIT_CONDITION
    elif what == "lemma1":
        rep = an.lemma1_suite(snap, seed=cfg.get("run", "seed"))
        summary.update({"c_integer": rep.c_integer, "c_offgrid": rep.c_offgrid, "constant": rep.constant,
                        "integer_consistency": rep.integer_consistency, "tail_bound": rep.tail_bound})
        print(f"C(integers)={rep.c_integer:.4g} C(off-grid)={rep.c_offgrid:.4g} "
              f"integer consistency={rep.integer_consistency:.3g}")
    elif what == "lemma2":
        params = cfg.params
        qs = args.q or [1e6, 1e7, 1e8]
        levels = []
        for q in qs:
            qq, Q = desk_adjust(q, params)
            levels.append(level_from_q(qq, Q, params))
        rep = an.lemma2_suite(params, levels)
        summary["windows"] = [r.__dict__ for r in rep.reports]
        summary.update({"spread_low": rep.spread("low"), "spread_high": rep.spread("high"),
                        "constant": rep.constant()})
        for r in rep.reports:
            print(f"q={r.q:.6g} Q={r.Q} ratio(|k|<=q)={r.ratio_low:.4g} ratio(|k|>=q)={r.ratio_high:.4g}")
    elif what == "boxdim":
        m = cfg.get("build", "m")
        seq = _desk_sequence(cfg, max(m, 1))
        cov = support_cover(seq, m)
        params = cfg.params
        lo = int(math.ceil(math.log2(seq.q[m - 1]))) if m else 20
        deltas = 2.0 ** -np.arange(2, lo)
        rep = an.box_dimension(cov, deltas, params.a * params.r)
        summary.update({"slope": rep.slope, "power_residual": rep.power_residual,
                        "log_corrected_residual": rep.log_corrected_residual,
                        "counts": rep.counts.tolist(), "deltas": rep.deltas.tolist()})
        print(f"box slope {rep.slope:.4f}; residuals power {rep.power_residual:.3g}, "
              f"log-corrected {rep.log_corrected_residual:.3g}")
    _write(os.path.join(outdir, f"{name}.txt"), _structured(summary))
    _emit_config(cfg, outdir, name)
    return status


def cmd_restrict(args, cfg: RunConfig) -> int:
    from .restriction import threshold_sweep

    if not args.snapshot:
        raise UsageError("restrict sweep needs --snapshot")
    snap = _load_snapshot(args.snapshot)
    outdir = _outdir(cfg)
    try:
        p_grid = _parse_list(cfg.get("restrict", "p_grid"))
        deltas = _parse_list(cfg.get("restrict", "deltas"))
    except (ValueError, IndexError) as exc:
        raise UsageError(f"bad grid: {exc}") from exc
    rep = threshold_sweep(snap, snap.params, p_grid, deltas, seed=cfg.get("run", "seed"),
                          n_centres=cfg.get("restrict", "centres"))
    _write(os.path.join(outdir, "restrict_sweep.csv"), _stamp(cfg, "restrict") + rep.csv())
    summary = {"format_version": OUTPUT_FORMAT_VERSION, "config_fingerprint": cfg.fingerprint(), **rep.summary()}
    _write(os.path.join(outdir, "restrict_sweep.txt"), _structured(summary))
    _emit_config(cfg, outdir, "restrict_sweep")
    for p in rep.p_grid:
        tag = "checked" if p < rep.threshold else "reported only"
        print(f"p={p:<5g} knapp spread={rep.spreads.get(p, float('nan')):.4g} ({tag})")
    print(f"p* = {rep.threshold:.6g}; a-priori bound at p=1 {'holds' if rep.a_priori_ok else 'VIOLATED'}")
    return EXIT_OK if rep.a_priori_ok else EXIT_CONDITION


def cmd_threshold(args, cfg: RunConfig) -> int:
    rs = args.r or [cfg.get("params", "r")]
    as_ = args.a or [cfg.get("params", "a")]
    print(f"{'r':>8} {'a':>8} {'p_star':>12}")
    for r in rs:
        for a in as_:
            try:
                p = restriction_threshold(ExponentParams(r, a).require_restriction())
            except ValueError as exc:
                raise UsageError(str(exc)) from exc
            print(f"{r:>8g} {a:>8g} {p:>12.8g}")
    if args.alpha:
        print(f"{'alpha':>8} {'beta':>8} {'stm':>12}")
        for al in args.alpha:
            for be in args.beta or [0.5]:
                print(f"{al:>8g} {be:>8g} {stm_threshold(al, be, 1):>12.8g}")
    return EXIT_OK


def cmd_info(args, cfg: RunConfig) -> int:
    from . import lognum
    from .bump import make_bump
    from .primes import sandwich_threshold
    from .sequence import l_thresholds

    params = cfg.params
    b = make_bump(cfg.get("build", "bump"))
    print(f"polylog_lab {__version__}")
    print(f"params r={params.r} a={params.a}")
    if params.r > 1:
        print(f"restriction threshold p* = {restriction_threshold(params):.10g}")
    print(f"bump {b.kind}: sup norms {tuple(round(v, 6) for v in b.sup_norms)}, c2 = {b.c2:.6g}")
    print(f"prime-count sandwich threshold = {sandwich_threshold():g}")
    print(f"tower precision {lognum.PRECISION} bits, explicit up to level {lognum.MAX_EXPLICIT_LEVEL}")
    for k, v in l_thresholds(params).items():
        print(f"  {k}: log q1 >= {float(v):.6g}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="polylog-lab", description=__doc__.splitlines()[0],
                                 allow_abbrev=False)
    ap.add_argument("--config", help="run configuration file (sections and key = value)")
    ap.add_argument("--out-dir", help="output directory")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--jobs", type=int, help="parallelism degree (recorded; work runs in-process)")
    ap.add_argument("--plot", action="store_true", help="also write SVG plots")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--r", type=float)
        p.add_argument("--a", type=float)

    sq = sub.add_parser("sequence", help="generate or check scale sequences", allow_abbrev=False)
    sqs = sq.add_subparsers(dest="action", required=True)
    g = sqs.add_parser("gen", allow_abbrev=False)
    common(g)
    g.add_argument("--mode", choices=["certified", "desk"])
    g.add_argument("--len", dest="length", type=int, help="certified length")
    g.add_argument("--count", type=int, help="desk length")
    g.add_argument("--q1", type=float)
    g.add_argument("--growth", type=float)
    g.add_argument("--output")
    c = sqs.add_parser("check", allow_abbrev=False)
    c.add_argument("--certificate", required=True)

    ms = sub.add_parser("measure", help="build measure snapshots", allow_abbrev=False)
    mss = ms.add_subparsers(dest="action", required=True)
    b = mss.add_parser("build", allow_abbrev=False)
    common(b)
    b.add_argument("--q1", type=float)
    b.add_argument("--growth", type=float)
    b.add_argument("--m", type=int)
    b.add_argument("--K", type=int)
    b.add_argument("--samples", type=int, help="panels per finest interval")
    b.add_argument("--bump", choices=["mollifier", "polynomial"])
    b.add_argument("--output")

    an = sub.add_parser("analyze", help="analysis suites", allow_abbrev=False)
    an.add_argument("what", choices=["decay", "frostman", "divisor", "lemma1", "lemma2", "boxdim"])
    common(an)
    an.add_argument("--snapshot")
    an.add_argument("--eps", type=float)
    an.add_argument("--q", type=float, nargs="+")
    an.add_argument("--q1", type=float)
    an.add_argument("--growth", type=float)
    an.add_argument("--m", type=int)
    an.add_argument("--kmax", type=int, default=100000)
    an.add_argument("--plot", dest="plot_here", action="store_true", help="also write SVG plots")

    rs = sub.add_parser("restrict", help="restriction probes", allow_abbrev=False)
    rss = rs.add_subparsers(dest="action", required=True)
    sw = rss.add_parser("sweep", allow_abbrev=False)
    sw.add_argument("--snapshot")
    sw.add_argument("--p-grid")
    sw.add_argument("--deltas")
    sw.add_argument("--centres", type=int)

    th = sub.add_parser("threshold", help="tabulate p* and Stein-Tomas thresholds", allow_abbrev=False)
    th.add_argument("--r", type=float, nargs="+")
    th.add_argument("--a", type=float, nargs="+")
    th.add_argument("--alpha", type=float, nargs="+")
    th.add_argument("--beta", type=float, nargs="+")

    sub.add_parser("info", help="constants and thresholds", allow_abbrev=False)
    return ap


_FLAG_MAP = {
    "r": ("params", "r"), "a": ("params", "a"), "mode": ("sequence", "mode"), "q1": ("sequence", "q1"),
    "growth": ("sequence", "growth"), "count": ("sequence", "count"), "length": ("sequence", "length"),
    "m": ("build", "m"), "K": ("build", "K"), "samples": ("build", "samples"), "bump": ("build", "bump"),
    "p_grid": ("restrict", "p_grid"), "deltas": ("restrict", "deltas"), "centres": ("restrict", "centres"),
    "out_dir": ("output", "dir"), "seed": ("run", "seed"), "jobs": ("run", "jobs"),
}


def resolve_config(args) -> RunConfig:
    if args.config:
        try:
            with open(args.config) as fh:
                cfg = RunConfig.from_text(fh.read())
        except OSError as exc:
            raise OSError(f"cannot read config: {exc}") from exc
    else:
        cfg = RunConfig()
    for flag, (sec, key) in _FLAG_MAP.items():
        v = getattr(args, flag, None)
        if v is not None and not isinstance(v, list):
            cfg.set(sec, key, v)
    if args.plot or getattr(args, "plot_here", False):
        cfg.set("output", "plot", "yes")
    return cfg


_COMMANDS = {
    "sequence": cmd_sequence, "measure": cmd_measure, "analyze": cmd_analyze,
    "restrict": cmd_restrict, "threshold": cmd_threshold, "info": cmd_info,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        cfg = resolve_config(args)
        return _COMMANDS[args.command](args, cfg)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConditionFailure as exc:
        print(f"condition failure: {exc}", file=sys.stderr)
        return EXIT_CONDITION
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (FloatingPointError, OverflowError) as exc:
        print(f"numerical tolerance: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
