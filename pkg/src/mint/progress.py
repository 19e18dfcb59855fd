"""Progress functions.

A progress function assigns a non-negative number to each nonzero PSD
operator.  It must vanish on the identity, be invariant under positive
rescaling and be quasiconvex.  :func:`check_axioms` certifies those
properties by seeded sampling; continuity is only estimated, never asserted.
"""

from __future__ import annotations

import dataclasses
from collections.abc import Callable

import numpy as np

from .errors import DimensionError, ZeroOperatorError
from .linalg import hermitian, matrix_sqrt, max_abs, tensor_product
from .measurement import ProductBasis, party_key, state_vectors
from .sampling import random_hermitian, random_psd, rng_from


class ProgressFunction:
    """A callable progress function on operators acting on ``C^dim``."""

    def __init__(self, dim: int, evaluator: Callable[[np.ndarray], float], descriptor: str = "custom"):
        self.dim = int(dim)
        self.evaluator = evaluator
        self.descriptor = descriptor

    def __call__(self, e) -> float:
        e = np.asarray(e, dtype=complex)
        if e.shape != (self.dim, self.dim):
            raise DimensionError(f"progress function on C^{self.dim} applied to shape {e.shape}")
        return float(self.evaluator(e))

    def __repr__(self):
        return f"ProgressFunction(dim={self.dim}, {self.descriptor})"


class GuessingProgress(ProgressFunction):
    """Best-guess advantage over uniform guessing for states of a fixed orthonormal basis.

    ``mu(E) = max_k <psi_k|E|psi_k> / tr(E) - 1/|S|``.
    """

    def __init__(self, basis):
        vectors = state_vectors(basis)
        if vectors.shape[0] != vectors.shape[1]:
            raise DimensionError("the guessing progress function needs a complete basis")
        super().__init__(vectors.shape[1], self._evaluate, f"example(|S|={len(vectors)})")
        self.vectors = vectors
        self.basis = basis if isinstance(basis, ProductBasis) else None

    def weights(self, e) -> np.ndarray:
        """``<psi_k|E|psi_k>`` for every basis state."""
        return np.einsum("ki,ij,kj->k", self.vectors.conj(), e, self.vectors).real

    def _evaluate(self, e) -> float:
        trace = float(np.trace(e).real)
        if trace <= 0.0 or max_abs(e) == 0.0:
            raise ZeroOperatorError("progress is undefined on the zero operator")
        return float(np.max(self.weights(e))) / trace - 1.0 / len(self.vectors)


def example_mu(basis) -> GuessingProgress:
    return GuessingProgress(basis)


@dataclasses.dataclass(frozen=True)
class ThresholdCertificate:
    mu0: float
    n: int
    basis: ProductBasis | None = None


def threshold_example_mu(n: int, basis: ProductBasis | None = None) -> ThresholdCertificate:
    """Threshold ``1/(n(n-1))`` of the guessing progress function on ``C^n``.

    An operator with zero weight on one basis state puts at least ``1/(n-1)``
    of its trace on its best state.
    """
    if n < 2:
        raise ValueError("a threshold needs n >= 2")
    if basis is not None and basis.dim != n:
        raise DimensionError(f"basis has dimension {basis.dim}, expected {n}")
    return ThresholdCertificate(1.0 / (n * (n - 1)), n, basis)


def induced_mu(mu: ProgressFunction, a_prime, b_prime, *, party: str = "A", kraus=None) -> ProgressFunction:
    """Progress of a local operator ``a`` after the product operator ``a' (x) b'`` was applied.

    For Alice, ``mu'(a) = mu((sqrt(a') a sqrt(a')) (x) b')``; Bob is symmetric.
    When ``kraus`` (the accumulated local Kraus operator ``K`` with
    ``K^dag K = a'``) is given, ``K^dag a K`` replaces the square-root form so
    that values match the elements reached in an explicit protocol tree.
    """
    a_prime = hermitian(a_prime)
    b_prime = hermitian(b_prime)
    if a_prime.shape[0] * b_prime.shape[0] != mu.dim:
        raise DimensionError("applied operator does not match the progress function dimension")
    side = party_key(party)
    acting, other = (a_prime, b_prime) if side == "A" else (b_prime, a_prime)
    k = np.asarray(kraus, dtype=complex) if kraus is not None else matrix_sqrt(acting)
    k_dag = k.conj().T

    def evaluate(a):
        local = k_dag @ a @ k
        if max_abs(local) == 0.0:
            raise ZeroOperatorError("the induced operator vanishes")
        full = tensor_product(local, other) if side == "A" else tensor_product(other, local)
        return mu(full)

    return ProgressFunction(acting.shape[0], evaluate, f"induced[{side}]({mu.descriptor})")


@dataclasses.dataclass(frozen=True)
class AxiomReport:
    samples: int
    seed: int
    identity_violation: float
    scale_violation: float
    quasiconvexity_violation: float
    negativity_violation: float
    lipschitz_estimate: float

    def violations(self) -> dict[str, float]:
        return {
            "identity": self.identity_violation,
            "scale_invariance": self.scale_violation,
            "quasiconvexity": self.quasiconvexity_violation,
            "non_negativity": self.negativity_violation,
        }

    def passed(self, tol: float = 1e-9) -> bool:
        return all(v <= tol for v in self.violations().values())


def check_axioms(mu: ProgressFunction, samples: int = 1000, seed: int = 0) -> AxiomReport:
    """Worst sampled violation of each progress-function axiom.

    Operators are random PSD matrices of random rank with magnitudes spread
    over four decades.  The Lipschitz estimate is the largest
    ``|mu(E + d H) - mu(E)| / d`` over ``d in {1e-4, 1e-6}`` on full-rank ``E``
    and unit-norm Hermitian ``H``; it is reported, not judged.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = rng_from(seed)
    n = mu.dim
    identity_violation = abs(mu(np.eye(n, dtype=complex)))
    scale = quasi = negative = lipschitz = 0.0
    for _ in range(samples):
        e = random_psd(rng, n, scale=10.0 ** rng.uniform(-2, 2))
        f = random_psd(rng, n, scale=10.0 ** rng.uniform(-2, 2))
        mu_e, mu_f = mu(e), mu(f)
        negative = max(negative, -mu_e, -mu_f)
        for t in (1e-3, 1.0, 1e3):
            scale = max(scale, abs(mu(t * e) - mu_e))
        quasi = max(quasi, mu(e + f) - max(mu_e, mu_f))

        base = random_psd(rng, n, rank=n) + 0.1 * np.eye(n)
        h = random_hermitian(rng, n)
        h /= np.linalg.norm(h, 2)
        mu_base = mu(base)
        for delta in (1e-4, 1e-6):
            lipschitz = max(lipschitz, abs(mu(base + delta * h) - mu_base) / delta)
    return AxiomReport(samples, int(seed) if not isinstance(seed, np.random.Generator) else -1,
                       identity_violation, scale, max(quasi, 0.0), max(negative, 0.0), lipschitz)
