"""POVM algebra: measurements, product bases, coarse graining and composition."""

from __future__ import annotations

import dataclasses
from collections.abc import Iterable, Mapping, Sequence

import numpy as np

from .errors import BasisError, DimensionError, InvalidMeasurement, InvalidState, PartitionError
from .linalg import (
    hermitian,
    identity,
    is_psd,
    matrix_sqrt,
    max_abs,
    projector,
    proportionality,
    tolerances,
)

PAIR_SEPARATOR = "/"


def pair_label(first: str, second: str) -> str:
    return f"{first}{PAIR_SEPARATOR}{second}"


class Measurement:
    """Ordered, labeled POVM elements on ``C^dim``.

    Construction checks shapes, Hermiticity and label uniqueness only, so that
    broken POVMs can still be loaded and reported on; call :func:`validate`
    (or :meth:`check`) for the PSD and completeness conditions.
    """

    __slots__ = ("elements", "labels", "d_A", "d_B")

    def __init__(self, elements, labels=None, d_A=None, d_B=None):
        elements = tuple(hermitian(e) for e in elements)
        if not elements:
            raise InvalidMeasurement("a measurement needs at least one element")
        dim = elements[0].shape[0]
        if any(e.shape != (dim, dim) for e in elements):
            raise DimensionError("all POVM elements must have the same dimension")
        if labels is None:
            labels = [str(i) for i in range(len(elements))]
        labels = tuple(str(lbl) for lbl in labels)
        if len(labels) != len(elements):
            raise InvalidMeasurement(f"{len(labels)} labels for {len(elements)} elements")
        if len(set(labels)) != len(labels):
            raise InvalidMeasurement("outcome labels must be unique")
        if (d_A is None) != (d_B is None):
            raise DimensionError("give both d_A and d_B or neither")
        if d_A is not None and d_A * d_B != dim:
            raise DimensionError(f"d_A * d_B = {d_A * d_B} does not match dim {dim}")
        self.elements = elements
        self.labels = labels
        self.d_A = d_A
        self.d_B = d_B

    @property
    def dim(self) -> int:
        return self.elements[0].shape[0]

    @property
    def is_bipartite(self) -> bool:
        return self.d_A is not None

    def __len__(self):
        return len(self.elements)

    def __iter__(self):
        return iter(zip(self.labels, self.elements))

    def __getitem__(self, label: str) -> np.ndarray:
        return self.elements[self.labels.index(label)]

    def __repr__(self):
        return f"Measurement(dim={self.dim}, outcomes={len(self)})"

    def index(self, label: str) -> int:
        return self.labels.index(label)

    def with_dims(self, d_A, d_B) -> "Measurement":
        return Measurement(self.elements, self.labels, d_A, d_B)

    def check(self) -> "Measurement":
        report = validate(self)
        if not report.ok:
            raise InvalidMeasurement(report.summary())
        return self


@dataclasses.dataclass(frozen=True)
class ValidationReport:
    min_eigenvalues: tuple[float, ...]
    completeness_residual: float
    psd_floor: float
    completeness_tolerance: float

    @property
    def psd(self) -> bool:
        return all(w >= self.psd_floor for w in self.min_eigenvalues)

    @property
    def complete(self) -> bool:
        return self.completeness_residual <= self.completeness_tolerance

    @property
    def ok(self) -> bool:
        return self.psd and self.complete

    def summary(self) -> str:
        worst = min(self.min_eigenvalues)
        return (f"psd={self.psd} (min eigenvalue {worst:.3e}), "
                f"complete={self.complete} (residual {self.completeness_residual:.3e})")


def validate(m: Measurement) -> ValidationReport:
    tol = tolerances()
    mins = tuple(is_psd(e).min_eigenvalue for e in m.elements)
    residual = max_abs(sum(m.elements) - np.eye(m.dim))
    return ValidationReport(mins, residual, tol.psd_floor, tol.completeness)


@dataclasses.dataclass(frozen=True)
class CoarseGrainMap:
    """Partition of source outcome indices, one part per output outcome."""

    partition: tuple[tuple[int, ...], ...]
    labels: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "partition", tuple(tuple(int(i) for i in part) for part in self.partition))
        object.__setattr__(self, "labels", tuple(str(lbl) for lbl in self.labels))
        if len(self.partition) != len(self.labels):
            raise PartitionError("one output label per part is required")
        if len(set(self.labels)) != len(self.labels):
            raise PartitionError("output labels must be unique")
        flat = [i for part in self.partition for i in part]
        if len(flat) != len(set(flat)):
            raise PartitionError("parts overlap")
        if any(not part for part in self.partition):
            raise PartitionError("empty part")

    @classmethod
    def from_assignment(cls, source_labels: Sequence[str], assign: Mapping[str, str] | Sequence[str],
                        order: Sequence[str] | None = None) -> "CoarseGrainMap":
        """Group source labels by their assigned output label.

        ``assign`` maps each source label to an output label (a sequence is read
        positionally).  Output order follows ``order`` when given, otherwise
        first appearance.
        """
        if not isinstance(assign, Mapping):
            assign = dict(zip(source_labels, assign))
        missing = [s for s in source_labels if s not in assign]
        if missing:
            raise PartitionError(f"unassigned source outcomes: {missing[:5]}")
        outputs = list(order) if order is not None else list(dict.fromkeys(assign[s] for s in source_labels))
        parts: dict[str, list[int]] = {o: [] for o in outputs}
        for i, s in enumerate(source_labels):
            target = assign[s]
            if target not in parts:
                raise PartitionError(f"output label {target!r} not in the requested order")
            parts[target].append(i)
        empty = [o for o, p in parts.items() if not p]
        if empty:
            raise PartitionError(f"no source outcome maps to {empty[:5]}")
        return cls(tuple(tuple(p) for p in parts.values()), tuple(parts))

    @classmethod
    def by_second(cls, pair_labels: Sequence[str], order: Sequence[str] | None = None) -> "CoarseGrainMap":
        """Group ``first/second`` pair labels by their second component."""
        assign = {p: p.rsplit(PAIR_SEPARATOR, 1)[1] for p in pair_labels}
        return cls.from_assignment(pair_labels, assign, order)

    @classmethod
    def by_first(cls, pair_labels: Sequence[str]) -> "CoarseGrainMap":
        assign = {p: p.rsplit(PAIR_SEPARATOR, 1)[0] for p in pair_labels}
        return cls.from_assignment(pair_labels, assign)

    def assignment(self, source_labels: Sequence[str]) -> dict[str, str]:
        return {source_labels[i]: lbl for part, lbl in zip(self.partition, self.labels) for i in part}


def coarse_grain(m: Measurement, cmap: CoarseGrainMap) -> Measurement:
    covered = sorted(i for part in cmap.partition for i in part)
    if covered != list(range(len(m))):
        raise PartitionError(f"partition covers {len(covered)} indices, measurement has {len(m)} outcomes")
    elements = [sum(m.elements[i] for i in part) for part in cmap.partition]
    return Measurement(elements, cmap.labels, m.d_A, m.d_B)


def compose(m1: Measurement, m2_list: Sequence[Measurement], cmap: CoarseGrainMap | None = None) -> Measurement:
    """Two-stage measurement with elements ``sqrt(E_i) E^(i)_j sqrt(E_i)``, labeled ``i/j``."""
    if len(m2_list) != len(m1):
        raise DimensionError(f"{len(m2_list)} second stages for {len(m1)} first-stage outcomes")
    elements, labels = [], []
    for (label, e), m2 in zip(m1, m2_list):
        if m2.dim != m1.dim:
            raise DimensionError(f"second stage for {label!r} has dim {m2.dim}, expected {m1.dim}")
        root = matrix_sqrt(e)
        for sub_label, f in m2:
            elements.append(root @ f @ root)
            labels.append(pair_label(label, sub_label))
    out = Measurement(elements, labels, m1.d_A, m1.d_B)
    return coarse_grain(out, cmap) if cmap is not None else out


def trivial(dim: int, label: str = "id", d_A=None, d_B=None) -> Measurement:
    return Measurement([identity(dim)], [label], d_A, d_B)


def is_trivial(m: Measurement, tol: float = 1e-9) -> bool:
    eye = np.eye(m.dim)
    for e in m.elements:
        t, residual = proportionality(eye, e)
        if residual > tol or t < -tol:
            return False
    return True


def is_projective(m: Measurement, tol: float = 1e-8) -> bool:
    for i, e in enumerate(m.elements):
        if max_abs(e @ e - e) > tol:
            return False
        for f in m.elements[i + 1:]:
            if max_abs(e @ f) > tol:
                return False
    return True


def is_von_neumann(m: Measurement, tol: float = 1e-8) -> bool:
    """Rank-one orthogonal projectors, one per dimension."""
    if len(m) != m.dim:
        return False
    return is_projective(m, tol) and all(abs(np.trace(e).real - 1.0) <= tol for e in m.elements)


def outcome_probabilities(m: Measurement, state) -> np.ndarray:
    rho = hermitian(state)
    if rho.shape != (m.dim, m.dim):
        raise DimensionError(f"state has shape {rho.shape}, measurement dim {m.dim}")
    if not is_psd(rho):
        raise InvalidState("state is not PSD")
    if abs(np.trace(rho).real - 1.0) > 1e-9:
        raise InvalidState(f"state trace {np.trace(rho).real:.12g} != 1")
    return np.array([np.real(np.trace(e @ rho)) for e in m.elements])


class ProductBasis:
    """Ordered orthonormal basis of product vectors ``alice (x) bob``."""

    __slots__ = ("d_A", "d_B", "alice", "bob", "labels")

    def __init__(self, d_A: int, d_B: int, alice, bob, labels=None, *, check: bool = True):
        self.d_A, self.d_B = int(d_A), int(d_B)
        self.alice = np.array([np.asarray(v, dtype=complex).reshape(-1) for v in alice])
        self.bob = np.array([np.asarray(v, dtype=complex).reshape(-1) for v in bob])
        n = self.d_A * self.d_B
        if self.alice.shape != (len(self.alice), self.d_A) or self.bob.shape != (len(self.alice), self.d_B):
            raise BasisError("factor vectors have the wrong length or count")
        self.labels = tuple(str(lbl) for lbl in (labels if labels is not None else
                                                  (f"psi{k}" for k in range(len(self.alice)))))
        if len(self.labels) != len(self.alice) or len(set(self.labels)) != len(self.labels):
            raise BasisError("labels must be unique, one per vector")
        self.alice.flags.writeable = False
        self.bob.flags.writeable = False
        if check:
            norms = np.concatenate([np.linalg.norm(self.alice, axis=1), np.linalg.norm(self.bob, axis=1)])
            worst_norm = float(np.max(np.abs(norms - 1.0)))
            if worst_norm > 1e-10:
                raise BasisError("factor vectors are not unit vectors", worst_norm)
            if len(self.alice) != n:
                raise BasisError(f"{len(self.alice)} vectors do not form a basis of dimension {n}")
            worst = self.orthonormality_error()
            if worst > 1e-9:
                raise BasisError("product vectors are not orthonormal", worst)

    def __len__(self):
        return len(self.alice)

    def __repr__(self):
        return f"ProductBasis({self.d_A}x{self.d_B}, {len(self)} vectors)"

    @property
    def dim(self) -> int:
        return self.d_A * self.d_B

    @property
    def vectors(self) -> np.ndarray:
        """Full product vectors as rows."""
        return np.einsum("ka,kb->kab", self.alice, self.bob).reshape(len(self), -1)

    def factors(self, party: str) -> np.ndarray:
        return self.alice if party_key(party) == "A" else self.bob

    def orthonormality_error(self) -> float:
        v = self.vectors
        return max_abs(v.conj() @ v.T - np.eye(len(v)))

    def subset(self, labels: Iterable[str]) -> "ProductBasis":
        idx = [self.labels.index(lbl) for lbl in labels]
        return ProductBasis(self.d_A, self.d_B, self.alice[idx], self.bob[idx],
                            [self.labels[i] for i in idx], check=False)


def party_key(party: str) -> str:
    p = str(party).strip().lower()
    if p in ("a", "alice"):
        return "A"
    if p in ("b", "bob"):
        return "B"
    raise ValueError(f"unknown party {party!r}; expected Alice or Bob")


def state_vectors(states) -> np.ndarray:
    """Rows of state vectors from a ProductBasis or an array-like of vectors."""
    if isinstance(states, ProductBasis):
        return states.vectors
    return np.array([np.asarray(v, dtype=complex).reshape(-1) for v in states])


def von_neumann(basis, labels=None) -> Measurement:
    """Rank-one projective measurement onto an orthonormal basis, in basis order."""
    d_A = d_B = None
    if isinstance(basis, ProductBasis):
        d_A, d_B = basis.d_A, basis.d_B
        labels = basis.labels if labels is None else labels
    vecs = state_vectors(basis)
    n = vecs.shape[1]
    if vecs.shape[0] != n:
        raise BasisError(f"{vecs.shape[0]} vectors do not form a basis of C^{n}")
    worst = max_abs(vecs.conj() @ vecs.T - np.eye(n))
    if worst > 1e-9:
        raise BasisError("basis vectors are not orthonormal", worst)
    return Measurement([projector(v) for v in vecs], labels, d_A, d_B)
