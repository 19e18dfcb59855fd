"""Dense complex operator substrate.

Operators are plain ``numpy`` arrays of dtype ``complex128``.  Functions in
this module validate, symmetrize and apply spectral functional calculus to
Hermitian operators with explicit, overridable tolerances.

Bipartite index order is Alice-major everywhere: the row/column index of
``a (x) b`` is ``alpha * d_B + beta``.
"""

from __future__ import annotations

import contextlib
import contextvars
import dataclasses
import os
from typing import NamedTuple

import numpy as np

from .errors import EigenError, HermiticityError, NotPSDError


@dataclasses.dataclass(frozen=True)
class Tolerances:
    hermiticity: float = 1e-10
    psd_floor: float = -1e-9
    completeness: float = 1e-8
    rank_cut: float = 1e-8
    root_find: float = 1e-12

    def __post_init__(self):
        for field in dataclasses.fields(self):
            value = abs(getattr(self, field.name))
            if not 0.0 < value < 1e-3:
                raise ValueError(f"tolerance {field.name}={value!r} must lie in (0, 1e-3)")
        # the floor is a lower bound on eigenvalues, always stored negative
        object.__setattr__(self, "psd_floor", -abs(self.psd_floor))

    @classmethod
    def from_env(cls, environ=None, **overrides) -> "Tolerances":
        """Build from ``MINT_TOLERANCE_<FIELD>`` variables, then explicit overrides."""
        environ = os.environ if environ is None else environ
        values = {}
        for field in dataclasses.fields(cls):
            raw = environ.get(f"MINT_TOLERANCE_{field.name.upper()}")
            if raw is not None:
                values[field.name] = float(raw)
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)


_TOLERANCES: contextvars.ContextVar[Tolerances] = contextvars.ContextVar("mint_tolerances", default=Tolerances())


def tolerances() -> Tolerances:
    """Tolerances in effect for the current context."""
    return _TOLERANCES.get()


@contextlib.contextmanager
def use_tolerances(tol: Tolerances):
    token = _TOLERANCES.set(tol)
    try:
        yield tol
    finally:
        _TOLERANCES.reset(token)


class Spectrum(NamedTuple):
    eigenvalues: np.ndarray  # descending
    eigenvectors: np.ndarray  # columns


class PSDReport(NamedTuple):
    is_psd: bool
    min_eigenvalue: float

    def __bool__(self):
        return self.is_psd


def _frozen(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


def max_abs(m) -> float:
    m = np.asarray(m)
    return float(np.max(np.abs(m))) if m.size else 0.0


def as_matrix(m) -> np.ndarray:
    a = np.array(m, dtype=complex)
    if a.ndim != 2:
        raise ValueError(f"expected a 2-d matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    return a


def hermitian(m) -> np.ndarray:
    """Validate ``m`` as Hermitian and return its symmetrized read-only copy."""
    a = as_matrix(m)
    if a.shape[0] != a.shape[1]:
        raise HermiticityError(f"operator must be square, got shape {a.shape}")
    if a.flags.writeable is False and np.array_equal(a, a.conj().T):
        return a
    skew = max_abs(a - a.conj().T)
    if skew > tolerances().hermiticity * max(1.0, max_abs(a)):
        raise HermiticityError(f"operator is not Hermitian: max |M - M^dag| = {skew:.3e}")
    return _frozen((a + a.conj().T) / 2)


def identity(dim: int) -> np.ndarray:
    return _frozen(np.eye(dim, dtype=complex))


def ket(index: int, dim: int) -> np.ndarray:
    v = np.zeros(dim, dtype=complex)
    v[index] = 1.0
    return v


def projector(vector) -> np.ndarray:
    v = np.asarray(vector, dtype=complex).reshape(-1)
    return _frozen(np.outer(v, v.conj()))


def tensor_product(a, b) -> np.ndarray:
    """Kronecker product ``a (x) b`` in Alice-major order."""
    return _frozen(np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex)))


def eigendecompose(m) -> Spectrum:
    a = hermitian(m)
    try:
        w, v = np.linalg.eigh(a)
    except np.linalg.LinAlgError as exc:
        raise EigenError(f"eigendecomposition did not converge: {exc}") from exc
    w, v = w[::-1].copy(), v[:, ::-1].copy()
    scale = max(1.0, max_abs(a))
    residual = max_abs((v * w) @ v.conj().T - a)
    if residual > 1e-9 * scale:
        raise EigenError("eigendecomposition failed to reconstruct the operator", residual)
    return Spectrum(_frozen(w), _frozen(v))


def is_psd(m) -> PSDReport:
    w = eigendecompose(m).eigenvalues
    lowest = float(w[-1]) if w.size else 0.0
    return PSDReport(lowest >= tolerances().psd_floor, lowest)


def _clamped_spectrum(m) -> Spectrum:
    w, v = eigendecompose(m)
    floor = tolerances().psd_floor
    if w.size and w[-1] < floor:
        raise NotPSDError(float(w[-1]), floor)
    return Spectrum(np.clip(w, 0.0, None), v)


def matrix_sqrt(m) -> np.ndarray:
    """Principal square root of a PSD operator; slightly negative eigenvalues clamp to zero."""
    w, v = _clamped_spectrum(m)
    return hermitian((v * np.sqrt(w)) @ v.conj().T)


def _support_mask(w: np.ndarray) -> np.ndarray:
    top = float(w[0]) if w.size else 0.0
    return w > tolerances().rank_cut * max(top, np.finfo(float).tiny)


def pinv_sqrt(m) -> np.ndarray:
    """Inverse square root on the support of a PSD operator, zero on its kernel.

    Eigenvalues below ``rank_cut`` relative to the largest one count as kernel.
    """
    w, v = _clamped_spectrum(m)
    keep = _support_mask(w)
    inv = np.zeros_like(w)
    inv[keep] = 1.0 / np.sqrt(w[keep])
    return hermitian((v * inv) @ v.conj().T)


def support_projector(m) -> np.ndarray:
    w, v = _clamped_spectrum(m)
    keep = _support_mask(w)
    return hermitian(v[:, keep] @ v[:, keep].conj().T)


def spectral_projectors(m, gap: float = 1e-8) -> list[tuple[float, np.ndarray]]:
    """Projectors onto the eigenspaces of ``m``, in descending eigenvalue order.

    Eigenvalues closer than ``gap * max(1, |m|_max)`` are treated as one
    eigenvalue so the projectors do not depend on the eigenvector basis chosen
    inside a degenerate cluster.
    """
    a = hermitian(m)
    w, v = eigendecompose(a)
    cut = gap * max(1.0, max_abs(a))
    clusters: list[list[int]] = []
    for k in range(len(w)):
        if clusters and w[clusters[-1][-1]] - w[k] < cut:
            clusters[-1].append(k)
        else:
            clusters.append([k])
    out = []
    for idx in clusters:
        cols = v[:, idx]
        out.append((float(np.mean(w[idx])), hermitian(cols @ cols.conj().T)))
    return out


def proportionality(a, b) -> tuple[float, float]:
    """Best scalar ``t`` with ``b ~ t a`` and the relative Frobenius residual.

    ``t = tr(a^dag b) / tr(a^dag a)``; the residual is ``|b - t a|_F / |b|_F``
    (zero when ``b`` vanishes).
    """
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    norm_a = np.vdot(a, a).real
    norm_b = np.sqrt(np.vdot(b, b).real)
    if norm_b == 0.0:
        return 0.0, 0.0
    if norm_a == 0.0:
        return 0.0, 1.0
    t = np.vdot(a, b) / norm_a
    residual = np.linalg.norm(b - t * a) / norm_b
    return float(t.real), float(residual)


def partial_trace(m, d_A: int, d_B: int, keep: str = "A") -> np.ndarray:
    t = np.asarray(m, dtype=complex).reshape(d_A, d_B, d_A, d_B)
    if keep == "A":
        return np.einsum("ibjb->ij", t)
    return np.einsum("aiaj->ij", t)
