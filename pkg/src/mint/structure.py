"""Bipartite structure of measurements.

Product detection by operator realignment, non-disturbance for a set of
orthogonal states, product-decomposition bounds on separable progress,
fine graining of separable stages, and the extraction of a local projective
measurement that is non-disturbing for a product basis.
"""

from __future__ import annotations

import dataclasses
from collections.abc import Sequence

import numpy as np

from .errors import (
    DimensionError,
    FactorizationFailed,
    NonDisturbanceViolated,
    NotProduct,
    ThresholdHit,
    ZeroOperatorError,
)
from .linalg import hermitian, identity, max_abs, proportionality, spectral_projectors, tensor_product, tolerances
from .measurement import CoarseGrainMap, Measurement, ProductBasis, pair_label, party_key, state_vectors
from .progress import ProgressFunction

POSITIVITY_CUT = 1e-9


@dataclasses.dataclass(frozen=True)
class ProductDecomposition:
    terms: tuple[tuple[np.ndarray, np.ndarray], ...]

    def __post_init__(self):
        terms = tuple((hermitian(a), hermitian(b)) for a, b in self.terms)
        if not terms:
            raise ValueError("a decomposition needs at least one term")
        object.__setattr__(self, "terms", terms)

    def __len__(self):
        return len(self.terms)

    def operator(self) -> np.ndarray:
        return sum(tensor_product(a, b) for a, b in self.terms)

    def residual(self, e) -> float:
        return max_abs(self.operator() - np.asarray(e))


def realign(e, d_A: int, d_B: int) -> np.ndarray:
    """Realignment ``R[(a,a'),(b,b')] = E[(a,b),(a',b')]``; rank one iff ``E`` is a product."""
    e = np.asarray(e, dtype=complex)
    if e.shape != (d_A * d_B, d_A * d_B):
        raise DimensionError(f"operator shape {e.shape} does not match {d_A}x{d_B}")
    return e.reshape(d_A, d_B, d_A, d_B).transpose(0, 2, 1, 3).reshape(d_A * d_A, d_B * d_B)


def factor_product(e, d_A: int, d_B: int) -> ProductDecomposition:
    """Split ``E = a (x) b`` with ``tr(a) = 1``, or raise :class:`NotProduct`."""
    e = hermitian(e)
    u, s, vh = np.linalg.svd(realign(e, d_A, d_B))
    if s[0] == 0.0:
        raise ZeroOperatorError("the zero operator has no product factors")
    ratio = float(s[1] / s[0]) if len(s) > 1 else 0.0
    if ratio > tolerances().rank_cut:
        raise NotProduct(ratio)
    a = u[:, 0].reshape(d_A, d_A)
    b = s[0] * vh[0].reshape(d_B, d_B)
    trace_a = np.trace(a)
    if abs(trace_a) < 1e-12 * np.linalg.norm(a):
        raise NotProduct(ratio)
    a, b = a / trace_a, b * trace_a
    try:
        a, b = hermitian(a), hermitian(b)
    except ValueError as exc:
        raise NotProduct(ratio) from exc
    decomposition = ProductDecomposition(((a, b),))
    if decomposition.residual(e) > 1e-8 * max(1.0, max_abs(e)):
        raise NotProduct(ratio)
    return decomposition


def is_product(e, d_A: int, d_B: int) -> bool:
    try:
        factor_product(e, d_A, d_B)
    except (NotProduct, ZeroOperatorError):
        return False
    return True


@dataclasses.dataclass(frozen=True)
class DisturbanceReport:
    non_disturbing: bool
    worst: float
    element: str | None
    states: tuple[int, int] | None

    def __bool__(self):
        return self.non_disturbing


def off_diagonal_weight(e, vectors) -> tuple[float, tuple[int, int] | None]:
    """Largest ``|<psi_j|E|psi_k>|`` over distinct states, and where it occurs."""
    v = state_vectors(vectors)
    g = v.conj() @ np.asarray(e) @ v.T
    np.fill_diagonal(g, 0.0)
    if g.size <= 1:
        return 0.0, None
    flat = int(np.argmax(np.abs(g)))
    j, k = divmod(flat, g.shape[1])
    return float(abs(g[j, k])), (j, k)


def is_non_disturbing(m: Measurement, states, tol: float = 1e-9) -> DisturbanceReport:
    """Whether every element has vanishing matrix entries between distinct states."""
    worst, where, label = 0.0, None, None
    for lbl, e in m:
        value, pos = off_diagonal_weight(e, states)
        if value > worst:
            worst, where, label = value, pos, lbl
    return DisturbanceReport(worst <= tol, worst, label, where)


def mu_tilde_upper(e, decomposition: ProductDecomposition, mu: ProgressFunction) -> float:
    """``max_j mu(a_j (x) b_j)``, an upper bound on the separable progress of ``E``.

    The bound is exact when the decomposition has a single term.
    """
    e = hermitian(e)
    if decomposition.residual(e) > 1e-8 * max(1.0, max_abs(e)):
        raise FactorizationFailed("decomposition does not reconstruct the operator")
    return max(mu(tensor_product(a, b)) for a, b in decomposition.terms)


def sep_to_product_stage(m: Measurement, decompositions: Sequence[ProductDecomposition]
                         ) -> tuple[Measurement, CoarseGrainMap]:
    """Replace every element by its product terms.

    Returns the fine-grained measurement (labels ``label/j``) and the map that
    coarse grains it back by source element.
    """
    if len(decompositions) != len(m):
        raise FactorizationFailed(f"{len(decompositions)} decompositions for {len(m)} elements")
    scale = max(1.0, max(max_abs(e) for e in m.elements))
    elements, labels = [], []
    for (lbl, e), dec in zip(m, decompositions):
        if dec.residual(e) > 1e-8 * scale:
            raise FactorizationFailed(f"decomposition of {lbl!r} does not reconstruct it")
        for j, (a, b) in enumerate(dec.terms):
            elements.append(tensor_product(a, b))
            labels.append(pair_label(lbl, str(j)))
    fine = Measurement(elements, labels, m.d_A, m.d_B)
    return fine, CoarseGrainMap.by_first(fine.labels)


@dataclasses.dataclass(frozen=True)
class LocalExtraction:
    party: str
    measurement: Measurement
    progress_values: tuple[float, ...]
    trivial: bool
    source: str | None = None

    def lifted(self, d_A: int, d_B: int) -> Measurement:
        """The local measurement tensored with the other party's identity."""
        if self.party == "A":
            elements = [tensor_product(p, identity(d_B)) for p in self.measurement.elements]
        else:
            elements = [tensor_product(identity(d_A), p) for p in self.measurement.elements]
        return Measurement(elements, self.measurement.labels, d_A, d_B)


def _proportional_to_identity(a, tol=1e-9) -> bool:
    _, residual = proportionality(np.eye(a.shape[0]), a)
    return residual <= tol


def _local_projective(a) -> Measurement:
    projectors = spectral_projectors(a)
    return Measurement([p for _, p in projectors], [f"eta{k}" for k in range(len(projectors))])


def extract_local_nondisturbing(m1: Measurement, basis: ProductBasis, mu: ProgressFunction, mu0: float
                                ) -> LocalExtraction:
    """Local projective measurement, non-disturbing for ``basis``, read off a product stage.

    Every element of ``m1`` must factor as ``a_i (x) b_i``, be diagonal in the
    basis and have strictly positive weight on every basis state.  The
    eigenspace projectors of the first ``a_i`` (in element order) that is not
    proportional to the identity are returned; Bob's factors are tried only if
    all of Alice's are trivial.
    """
    d_A, d_B = basis.d_A, basis.d_B
    if m1.dim != basis.dim:
        raise DimensionError(f"stage dimension {m1.dim} does not match basis dimension {basis.dim}")
    report = is_non_disturbing(m1, basis)
    if not report:
        raise NonDisturbanceViolated(f"stage element {report.element!r} disturbs the basis", report.worst)
    factors = []
    for lbl, e in m1:
        try:
            dec = factor_product(e, d_A, d_B)
        except (NotProduct, ZeroOperatorError) as exc:
            raise FactorizationFailed(f"stage element {lbl!r} is not a tensor product: {exc}") from exc
        factors.append(dec.terms[0])
    vectors = basis.vectors
    for (lbl, e) in m1:
        weights = np.einsum("ki,ij,kj->k", vectors.conj(), e, vectors).real
        k = int(np.argmin(weights))
        if weights[k] <= POSITIVITY_CUT:
            raise ThresholdHit(lbl, basis.labels[k], float(weights[k]))

    eye_other = {"A": identity(d_B), "B": identity(d_A)}
    for side in ("A", "B"):
        for (lbl, _), (a, b) in zip(m1, factors):
            local = a if side == "A" else b
            if _proportional_to_identity(local):
                continue
            meas = _local_projective(local)
            lifted = [tensor_product(p, eye_other["A"]) if side == "A" else tensor_product(eye_other["B"], p)
                      for p in meas.elements]
            check = is_non_disturbing(Measurement(lifted, meas.labels), basis, tol=1e-8)
            if not check:
                continue
            values = tuple(mu(x) for x in lifted)
            return LocalExtraction(side, meas, values, False, lbl)
    if any(not _proportional_to_identity(f) for pair in factors for f in pair):
        raise NonDisturbanceViolated("nontrivial local factors exist but none is non-disturbing")
    eye = identity(d_A)
    return LocalExtraction("A", Measurement([eye], ["id"]), (mu(tensor_product(eye, identity(d_B))),), True)


@dataclasses.dataclass(frozen=True)
class DiagonalitySpace:
    party: str
    dimension: int
    basis: tuple[np.ndarray, ...]
    singular_values: np.ndarray


def _hermitian_basis(d: int) -> list[np.ndarray]:
    """Frobenius-orthonormal real basis of d x d Hermitian matrices."""
    out = []
    for i in range(d):
        m = np.zeros((d, d), dtype=complex)
        m[i, i] = 1.0
        out.append(m)
    for i in range(d):
        for j in range(i + 1, d):
            m = np.zeros((d, d), dtype=complex)
            m[i, j] = m[j, i] = 1 / np.sqrt(2)
            out.append(m)
            m = np.zeros((d, d), dtype=complex)
            m[i, j], m[j, i] = -1j / np.sqrt(2), 1j / np.sqrt(2)
            out.append(m)
    return out


def local_diagonality_space(basis: ProductBasis, party: str = "A", rank_tol: float = 1e-8) -> DiagonalitySpace:
    """Hermitian local operators ``a`` with ``a (x) I`` (or ``I (x) a``) diagonal in the basis.

    Each distinct pair ``j < k`` contributes the complex linear constraint
    ``<x_j|a|x_k> <y_j|y_k> = 0``, where ``x`` are the acting party's factors
    and ``y`` the other party's.  The solution space is the null space of the
    real system assembled over a Hermitian basis; it always contains the
    identity.
    """
    side = party_key(party)
    acting = basis.alice if side == "A" else basis.bob
    other = basis.bob if side == "A" else basis.alice
    d = acting.shape[1]
    herm = _hermitian_basis(d)
    overlap = other.conj() @ other.T
    j_idx, k_idx = np.triu_indices(len(acting), k=1)
    keep = np.abs(overlap[j_idx, k_idx]) > 1e-14
    j_idx, k_idx = j_idx[keep], k_idx[keep]
    columns = []
    for h in herm:
        g = acting.conj() @ h @ acting.T
        values = g[j_idx, k_idx] * overlap[j_idx, k_idx]
        columns.append(np.concatenate([values.real, values.imag]))
    system = np.array(columns).T if len(j_idx) else np.zeros((1, len(herm)))
    _, s, vh = np.linalg.svd(system)
    top = s[0] if s.size and s[0] > 0 else 1.0
    rank = int(np.sum(s > rank_tol * top))
    null = vh[rank:]
    solutions = tuple(sum(c * h for c, h in zip(row, herm)) for row in null)
    return DiagonalitySpace(side, len(null), tuple(hermitian(x) for x in solutions), s)


def in_span(space: DiagonalitySpace, a, tol: float = 1e-8) -> bool:
    """Whether ``a`` lies in the real span of the solution basis."""
    a = np.asarray(a, dtype=complex)
    coeffs = [np.vdot(x, a).real for x in space.basis]
    residual = a - sum(c * x for c, x in zip(coeffs, space.basis))
    return max_abs(residual) <= tol * max(1.0, max_abs(a))
