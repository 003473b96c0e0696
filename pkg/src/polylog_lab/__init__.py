"""Numerical laboratory for sets carrying measures with polylogarithmic Fourier decay.

Modules
-------
exponents     exponent functions, restriction terms, summability probe
lognum        iterated-exponential numbers for huge sequence terms
primes        sieves, prime windows, prime-count sandwich threshold
bump          smooth bumps and their transforms
sequence      growth conditions, certified and desk sequences, certificates
construction  level densities, coefficient tables, measure snapshots
analysis      decay, Frostman, divisor, lemma and dimension checks
restriction   restriction quotients and threshold sweeps
cli           command-line interface
"""

__version__ = "0.1.0"
