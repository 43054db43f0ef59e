"""Exact Gamma/Beta variates and reproducible random streams.

Gamma variates use the Marsaglia-Tsang squeeze/rejection method; Beta
variates are ratios of two Gamma variates.  Streams are derived from a
64-bit seed and an integer key path via ``numpy.random.SeedSequence`` so
that any block of replicas can be regenerated independently of how work
is scheduled.
"""

from __future__ import annotations

import numpy as np

from .errors import DomainError

RandomSource = np.random.Generator


def stream(seed: int, *key: int) -> RandomSource:
    """Independent generator for ``(seed, key...)``."""
    if not 0 <= int(seed) < 2**64:
        raise DomainError(f"seed must be a 64-bit unsigned integer, got {seed}")
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))


def standard_gamma(rng: RandomSource, shape: float, size: int) -> np.ndarray:
    """Gamma(shape, 1) variates, Marsaglia-Tsang (2000)."""
    if not shape > 0:
        raise DomainError(f"gamma shape must be > 0, got {shape}")
    boost = shape < 1.0
    a = shape + 1.0 if boost else shape
    d = a - 1.0 / 3.0
    c = 1.0 / np.sqrt(9.0 * d)
    out = np.empty(size)
    todo = np.arange(size)
    while todo.size:
        m = todo.size
        x = rng.standard_normal(m)
        u = rng.random(m)
        v = 1.0 + c * x
        pos = v > 0
        v = v * v * v
        x2 = x * x
        accept = pos & (u < 1.0 - 0.0331 * x2 * x2)
        rest = pos & ~accept
        if np.any(rest):
            vr = v[rest]
            accept[rest] = np.log(u[rest]) < 0.5 * x2[rest] + d * (1.0 - vr + np.log(vr))
        out[todo[accept]] = d * v[accept]
        todo = todo[~accept]
    if boost:
        # Gamma(a) = Gamma(a+1) * U^(1/a)
        out *= np.exp(np.log(rng.random(size)) / shape)
    return out


def beta_pair(rng: RandomSource, a: float, b: float, size: int):
    """Beta(a, b) variates ``x`` together with ``1 - x``, both formed as
    Gamma ratios so neither suffers cancellation near 0 or 1."""
    ga = standard_gamma(rng, a, size)
    gb = standard_gamma(rng, b, size)
    tot = ga + gb
    return ga / tot, gb / tot
