"""Probe the restriction quotient on a depth-1 measure.

Knapp-type test functions concentrate their transform near a point of the
support. The quotient ||f_hat||_{L2(mu)} / ||f||_p is tracked as the width
delta shrinks. Below the threshold p* the spread over delta stays bounded.
Above it the numbers are only reported.

Run with ``python3 demos/restriction_probe.py``.
"""

from polylog_lab.construction import build_measure
from polylog_lab.exponents import ExponentParams
from polylog_lab.restriction import knapp_family, l2mu_norm, lp_norm, threshold_sweep
from polylog_lab.sequence import gen_desk

params = ExponentParams(2.0, 0.5)
snap = build_measure(gen_desk(params, 1e6, 1, 1.5), 1, 1 << 16)

c = float(snap.centres[len(snap.centres) // 2])
print(f"single Knapp probe at centre {c:.6f}")
for j in (4, 6, 8, 10):
    f = knapp_family(c, 2.0**-j)
    print(f"  delta = 2^-{j:<2d}  L2(mu) = {l2mu_norm(f, snap):.4e}  L1.1 = {lp_norm(f, 1.1):.4e}")

rep = threshold_sweep(snap, params, [1.0, 1.1, 1.5, 2.0], [2.0**-j for j in range(4, 11)], seed=0)
print(f"\np* = {rep.threshold:.4f}; a-priori p = 1 bound holds: {rep.a_priori_ok}")
for p in rep.p_grid:
    tag = "checked" if p < rep.threshold else "reported only"
    print(f"  p = {p:g}: spread {rep.spreads[p]:.3g} ({tag})")
