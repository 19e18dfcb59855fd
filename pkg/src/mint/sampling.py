"""Seeded random operators for property checks and fixtures."""

from __future__ import annotations

import numpy as np


def rng_from(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def ginibre(rng, rows: int, cols: int) -> np.ndarray:
    return (rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))) / np.sqrt(2)


def random_unitary(rng, n: int) -> np.ndarray:
    q, r = np.linalg.qr(ginibre(rng, n, n))
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_hermitian(rng, n: int) -> np.ndarray:
    g = ginibre(rng, n, n)
    return (g + g.conj().T) / 2


def random_psd(rng, n: int, rank: int | None = None, scale: float = 1.0) -> np.ndarray:
    """``G G^dag`` with ``G`` an ``n x rank`` Ginibre matrix; rank defaults to random in [1, n]."""
    if rank is None:
        rank = int(rng.integers(1, n + 1))
    g = ginibre(rng, n, rank)
    return scale * (g @ g.conj().T)


def random_isometry_blocks(rng, dim: int, count: int) -> list[np.ndarray]:
    """``count`` Kraus operators on ``C^dim`` with ``sum K^dag K = I``.

    The blocks are slices of a random isometry ``C^dim -> C^(count*dim)``.
    """
    v = random_unitary(rng, count * dim)[:, :dim]
    return [v[k * dim:(k + 1) * dim] for k in range(count)]
