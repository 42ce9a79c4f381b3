"""Shared test helpers: independent oracles and random-state generators.

The oracles here deliberately avoid the code paths they check: the
permanent oracle is the naive O(n! n) permutation sum, and the fringe
oracle is a plain linear least-squares solve in the (1, cos, sin) basis.
"""

import itertools
import math

import numpy as np


def permanent_oracle(matrix) -> complex:
    """Brute-force permutation-sum permanent."""
    a = np.asarray(matrix, dtype=complex)
    n = a.shape[0]
    total = 0j
    for sigma in itertools.permutations(range(n)):
        term = 1.0 + 0j
        for i, j in enumerate(sigma):
            term *= a[i, j]
        total += term
    return total


def haar_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed random unitary via QR with phase correction."""
    z = (rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim)))
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d)).conj()


def cosine_fringe_oracle(phis, values, frequency):
    """Linear least-squares fit of y = a0 + a1 cos(f phi) + a2 sin(f phi).

    Returns (offset, amplitude, phase_of_cos, rms_residual): the model in
    amplitude-phase form is a0 + A cos(f phi + delta).
    """
    phis = np.asarray(phis, dtype=float)
    values = np.asarray(values, dtype=float)
    basis = np.column_stack([np.ones_like(phis),
                             np.cos(frequency * phis),
                             np.sin(frequency * phis)])
    coef, *_ = np.linalg.lstsq(basis, values, rcond=None)
    model = basis @ coef
    amplitude = math.hypot(coef[1], coef[2])
    delta = math.atan2(-coef[2], coef[1]) % (2.0 * math.pi)
    rms = float(np.sqrt(np.mean((values - model) ** 2)))
    return float(coef[0]), amplitude, delta, rms


def count_circular_maxima(values) -> int:
    """Strict local maxima of a periodic series."""
    values = np.asarray(values, dtype=float)
    left = np.roll(values, 1)
    right = np.roll(values, -1)
    return int(np.sum((values > left) & (values > right)))
