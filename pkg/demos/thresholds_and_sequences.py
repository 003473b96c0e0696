"""Restriction thresholds and the scale sequences behind the construction.

Prints the p* table for a few (r, a) pairs, checks it against the numerical
summability flip, then generates a short certified sequence and a desk
sequence and shows how they differ.

Run with ``python3 demos/thresholds_and_sequences.py``.
"""

from polylog_lab import lognum
from polylog_lab.exponents import ExponentParams, polylog_flip, restriction_threshold
from polylog_lab.sequence import check_L, desk_adjust, gen_certified, gen_desk

# closed-form threshold against the numerical flip of the summability test
print(f"{'r':>5} {'a':>5} {'p* closed':>12} {'p* flip':>10}")
for r, a in [(2.0, 0.5), (3.0, 0.1), (1.5, 1.0)]:
    params = ExponentParams(r, a)
    print(f"{r:5g} {a:5g} {restriction_threshold(params):12.6f} {polylog_flip(params):10.5f}")

params = ExponentParams(2.0, 0.5)

# certified terms grow like iterated exponentials, so they live in log-tower form
seq = gen_certified(params, 3)
print("\ncertified sequence (log-depth rendering):")
for i, t in enumerate(seq.terms, 1):
    print(f"  q{i} = {lognum.render(t, 12)}")
print(f"  {sum(r.passed for r in seq.report)}/{len(seq.report)} conditions pass")

# desk mode trades the certificate for scales a laptop can resolve
desk = gen_desk(params, 1e6, 2, 1.5)
print("\ndesk sequence:")
for q, Q, n in zip(desk.q, desk.Q, desk.prime_counts()):
    print(f"  q = {q:.6g}  Q = {Q}  primes = {n}")
print(f"  L8 margin at q1: {float(check_L(desk.q[0], params).get('L8').margin):.2f}")

for q in (1e5, 1e6, 1e7):
    qq, Q = desk_adjust(q, params)
    print(f"  desk_adjust({q:g}) -> q = {qq:.6g}, Q = {Q}")
