"""Seeded random sampling.

All randomness flows through :func:`make_rng`, which wraps numpy's PCG64
bit generator (the 128-bit-state permuted congruential generator, XSL-RR
output, 64-bit words).  A given integer seed therefore reproduces the same
parameters on every platform numpy supports.
"""

from __future__ import annotations

import numpy as np

ANNULUS = (0.5, 1.5)


def make_rng(seed: "int | np.random.Generator | None") -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.PCG64(seed))


def sample_annulus(rng: np.random.Generator, size: int, bounds: tuple[float, float] = ANNULUS) -> np.ndarray:
    """Complex samples with log-modulus and phase uniform on the annulus."""
    lo, hi = bounds
    mod = np.exp(rng.uniform(np.log(lo), np.log(hi), size))
    phase = rng.uniform(-np.pi, np.pi, size)
    return mod * np.exp(1j * phase)
