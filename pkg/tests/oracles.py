"""Independent reference computations shared by the tests."""

import math

import numpy as np
from scipy import fft as sfft

from polylog_lab.construction import Level


def _sample_count(level: Level, n_min: int | None) -> int:
    q, Q = level.q, level.Q
    return sfft.next_fast_len(int(math.ceil(max(8 * q * Q, 40 * q, n_min or 0))), real=True)


def _add_phi_samples(samples: np.ndarray, level: Level, p: int, bump, scale: float = 1.0) -> None:
    """Accumulate ``scale * Phi_p`` at ``j / N``, touching only the samples inside the bumps."""
    N = samples.size
    q, M = level.q, p * level.Q
    v = np.arange(1, M, dtype=np.int64)
    v = v[v % p != 0]
    c = v / M
    h = int(math.ceil(N / q)) + 1
    d = np.arange(-h, h + 1)
    J = np.floor(c * N).astype(np.int64)[:, None] + d[None, :]
    vals = scale * (q / M) * bump(q * (J / N - c[:, None]))
    np.add.at(samples, (J % N).ravel(), vals.ravel())


def sampled_phi_coeffs(level: Level, p: int, kmax: int, bump, n_min: int | None = None):
    """Coefficients ``0..kmax`` of ``Phi_p`` from one real FFT of uniform samples on ``[0, 1)``.

    ``N >= max(8 q Q, 40 q)`` samples; only the samples inside the bumps are
    evaluated, the rest are exact zeros.
    """
    N = _sample_count(level, n_min)
    samples = np.zeros(N)
    _add_phi_samples(samples, level, p, bump)
    spec = sfft.rfft(samples, overwrite_x=True)
    return N, spec[: kmax + 1] / N


def sampled_level_coeffs(level: Level, kmax: int, bump, n_min: int | None = None):
    """Coefficients ``0..kmax`` of the level density ``sum_p w_p (p Q / q) Phi_p`` by one real FFT."""
    N = _sample_count(level, n_min)
    samples = np.zeros(N)
    for p, w in zip(level.primes, level.weights()):
        _add_phi_samples(samples, level, int(p), bump, w * int(p) * level.Q / level.q)
    spec = sfft.rfft(samples, overwrite_x=True)
    return N, spec[: kmax + 1] / N
