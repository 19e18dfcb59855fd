"""The eight desk-scale acceptance criteria.

Each ``criterion_N`` function runs one criterion end to end and returns a
:class:`CriterionResult` whose ``metrics`` hold the measured worst-case
quantities.  ``run_suite`` runs them all in order; ``mint suite`` and the
acceptance test module are thin wrappers around it.
"""

from __future__ import annotations

import dataclasses
import time

import numpy as np

from .fixtures import (
    augmented_domino_basis,
    domino_basis,
    peel_off_completion,
    peel_off_tree,
    random_discrimination_tree,
    random_povm,
)
from .interpolation import interpolate_kkb, progress_ceiling, verify_interpolation
from .linalg import ket, max_abs, projector
from .measurement import Measurement, validate, von_neumann
from .progress import ProgressFunction, check_axioms, example_mu, threshold_example_mu
from .protocol import decompose_from_interpolation, discriminates, implements, interpolate_protocol, leaf_povm
from .sampling import random_psd, random_unitary, rng_from
from .structure import extract_local_nondisturbing, in_span, is_non_disturbing, is_product, local_diagonality_space


@dataclasses.dataclass(frozen=True)
class CriterionResult:
    number: int
    name: str
    passed: bool
    metrics: dict[str, float]
    detail: str = ""
    seconds: float = 0.0

    def line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        extra = f" ({self.detail})" if self.detail else ""
        return f"[{verdict}] criterion {self.number}: {self.name}{extra}"


def _timed(number: int, name: str):
    def wrap(fn):
        def run(*args, **kwargs) -> CriterionResult:
            start = time.perf_counter()
            passed, metrics, detail = fn(*args, **kwargs)
            return CriterionResult(number, name, bool(passed), metrics, detail, time.perf_counter() - start)
        run.__name__ = fn.__name__
        run.__doc__ = fn.__doc__
        return run
    return wrap


@_timed(1, "interpolation engine on 100 random POVMs")
def criterion_1(count: int = 100, seed: int = 0):
    """Interpolate random POVMs at epsilon in {0, lambda/2, lambda} and verify each result."""
    start = time.perf_counter()
    worst_progress = worst_stage = worst_composition = 0.0
    failures = 0
    for k in range(count):
        rng = rng_from(seed * 100003 + k)
        dim = int(rng.integers(2, 9))
        outcomes = int(rng.integers(2, 6))
        m = random_povm(dim, outcomes, rng)
        mu = example_mu(random_unitary(rng, dim).T)
        lam = progress_ceiling(m, mu)
        for eps in (0.0, lam / 2, lam):
            r = interpolate_kkb(m, mu, eps)
            rep = verify_interpolation(m, r, mu, min(eps, lam))
            worst_progress = max(worst_progress, rep.progress_error)
            worst_stage = max(worst_stage, rep.stage_residual)
            worst_composition = max(worst_composition, rep.composition_residual)
            failures += not rep.stages_valid
    elapsed = time.perf_counter() - start
    ok = (failures == 0 and worst_progress <= 1e-9 and worst_stage <= 1e-8
          and worst_composition <= 1e-8 and elapsed < 10.0)
    metrics = {"progress_error": worst_progress, "stage_residual": worst_stage,
               "composition_residual": worst_composition, "invalid_stages": float(failures), "seconds": elapsed}
    return ok, metrics, f"{3 * count} interpolations in {elapsed:.2f}s"


def bisection_oracle(f: np.ndarray, epsilon: float, hi: float = 1e3, steps: int = 200) -> float:
    """``c`` with ``max diag(cI + F) / tr(cI + F) - 1/n = epsilon`` by plain bisection.

    Written directly against the diagonal of ``F`` (computational basis), with
    no use of the library's progress functions or root finder.
    """
    d = np.real(np.diag(f))
    n = len(d)

    def g(c):
        return np.max(d + c) / np.sum(d + c) - 1.0 / n - epsilon

    lo = 0.0
    for _ in range(steps):
        mid = 0.5 * (lo + hi)
        if g(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@_timed(2, "worked example on C^2 at epsilon = 1/4")
def criterion_2():
    basis = np.eye(2)
    m = von_neumann(basis)
    mu = example_mu(basis)
    r = interpolate_kkb(m, mu, 0.25)
    oracle = [bisection_oracle(f, 0.25) for f in m.elements]
    c_error = max(abs(c - 0.5) for c in r.c_constants)
    oracle_error = max(abs(c - o) for c, o in zip(r.c_constants, oracle))
    e1_error = max_abs(r.m1.elements[0] - np.diag([0.75, 0.25]))
    rep = verify_interpolation(m, r, mu)
    ok = c_error <= 1e-10 and oracle_error <= 1e-10 and e1_error <= 1e-10 and rep.ok
    metrics = {"c_error": c_error, "oracle_error": oracle_error, "e1_error": e1_error}
    return ok, metrics, f"c = ({r.c_constants[0]:.12g}, {r.c_constants[1]:.12g})"


def _annihilating_sample(rng, n: int) -> np.ndarray:
    k = int(rng.integers(n))
    keep = np.eye(n) - projector(ket(k, n))
    rank = int(rng.integers(1, n))
    while True:
        e = keep @ random_psd(rng, n, rank=rank, scale=10.0 ** rng.uniform(-3, 3)) @ keep
        if max_abs(e) > 0:
            return e


@_timed(3, "threshold of the example progress function")
def criterion_3(samples: int = 1000, seed: int = 3):
    expected = {2: 1 / 2, 9: 1 / 72, 16: 1 / 240}
    metrics: dict[str, float] = {}
    ok = True
    for n, value in expected.items():
        cert = threshold_example_mu(n)
        mu = example_mu(np.eye(n))
        rng = rng_from(seed * 1000 + n)
        worst = min(mu(_annihilating_sample(rng, n)) - cert.mu0 for _ in range(samples))
        # the bound is attained by the uniform operator on the complement of one state
        tight = mu(np.diag([0.0] + [1.0] * (n - 1))) - cert.mu0
        metrics[f"mu0_error_n{n}"] = abs(cert.mu0 - value)
        metrics[f"min_margin_n{n}"] = worst
        metrics[f"tight_gap_n{n}"] = abs(tight)
        ok &= abs(cert.mu0 - value) <= 1e-15 and worst >= -1e-9 and abs(tight) <= 1e-12
    return ok, metrics, "mu0 = 1/2, 1/72, 1/240"


@_timed(4, "augmented domino peel-off pipeline")
def criterion_4():
    basis = augmented_domino_basis()
    target = von_neumann(basis)
    orth = basis.orthonormality_error()
    povm = leaf_povm(peel_off_tree(False))
    completeness = validate(povm).completeness_residual
    disturbance = is_non_disturbing(povm, basis)

    tree = peel_off_tree(True)
    chain = peel_off_completion(tree, basis).composed(tree, fine=True)
    disc = discriminates(chain, basis)
    forward = bool(disc) and bool(implements(chain, target, disc.partition))
    parts = len(set(disc.partition.values())) if disc.partition else 0

    # converse direction: the unextended protocol leaves several states per outcome
    short = discriminates(povm, basis)
    backward = not short and not implements(povm, target, short.best_guess)

    ok = orth <= 1e-12 and completeness <= 1e-10 and bool(disturbance) and forward and parts == 16 and backward
    metrics = {"orthonormality_error": orth, "completeness_residual": completeness,
               "off_diagonal_weight": disturbance.worst, "states_discriminated": float(parts)}
    return ok, metrics, f"{parts} states discriminated"


@_timed(5, "product interpolation and LOCC round trip at epsilon = 1/480")
def criterion_5():
    basis = augmented_domino_basis()
    target = von_neumann(basis)
    mu = example_mu(basis)
    mu0 = threshold_example_mu(16).mu0
    tree = peel_off_tree(True)
    interp = interpolate_protocol(tree, peel_off_completion(tree, basis), mu, mu0, 1 / 480, target)
    result = interp.result
    rep = verify_interpolation(target, result, mu)
    products = all(is_product(e, 4, 4) for e in result.m1.elements)
    dec = decompose_from_interpolation(target, result, basis, mu, mu0)
    min_progress = min(dec.progress)
    ok = rep.ok and products and min_progress >= 1 / 240 - 1e-9 and dec.residual <= 1e-8
    metrics = {"progress_error": rep.progress_error, "composition_residual": rep.composition_residual,
               "stage_residual": rep.stage_residual, "min_locc_progress": min_progress,
               "completion_residual": dec.residual}
    return ok, metrics, f"first stage of {len(result.m1)} product elements, LOCC round by party {dec.extraction.party}"


@_timed(6, "local diagonality witness")
def criterion_6():
    domino = domino_basis()
    dims = {p: local_diagonality_space(domino, p).dimension for p in ("A", "B")}
    # a non-disturbing product stage on the domino basis has nothing local to offer
    mu = example_mu(domino)
    stage = Measurement([np.eye(9) / 2, np.eye(9) / 2], ["x", "y"], 3, 3)
    extraction = extract_local_nondisturbing(stage, domino, mu, threshold_example_mu(9).mu0)
    augmented = local_diagonality_space(augmented_domino_basis(), "A")
    p3 = projector(ket(3, 4))
    ok = dims == {"A": 1, "B": 1} and extraction.trivial and augmented.dimension == 2 and in_span(augmented, p3)
    metrics = {"domino_dim_A": float(dims["A"]), "domino_dim_B": float(dims["B"]),
               "augmented_dim_A": float(augmented.dimension)}
    return ok, metrics, f"domino {dims['A']}/{dims['B']}, augmented Alice {augmented.dimension}"


@_timed(7, "progress-function axiom suite")
def criterion_7(samples: int = 1000, seed: int = 7):
    mu = example_mu(augmented_domino_basis())
    report = check_axioms(mu, samples, seed)
    broken = ProgressFunction(mu.dim, lambda e: float(np.trace(e).real), "trace")
    flagged = not check_axioms(broken, samples, seed).passed()
    metrics = {f"{k}_violation": v for k, v in report.violations().items()}
    metrics["lipschitz_estimate"] = report.lipschitz_estimate
    return report.passed(1e-9) and flagged, metrics, "trace evaluator flagged" if flagged else "trace evaluator missed"


@_timed(8, "discrimination and implementation agree on random local protocols")
def criterion_8(count: int = 50, seed: int = 8):
    agree = 0
    complete = 0
    for k in range(count):
        rng = rng_from(seed * 7919 + k)
        d_A, d_B = int(rng.integers(2, 4)), int(rng.integers(2, 4))
        tree, basis = random_discrimination_tree(d_A, d_B, rng, complete=k % 2 == 0)
        target = von_neumann(basis)
        disc = discriminates(tree, basis)
        if disc:
            imp = implements(tree, target, disc.partition)
            # the generator names each leaf's states "<leaf>.<a><b>"; a fully refined leaf holds only ".00"
            expected = {s.node.label: f"{s.node.label}.00" for s in tree.leaves()}
            consistent = bool(imp) and disc.partition == expected
            complete += 1
        else:
            consistent = not implements(tree, target, disc.best_guess)
        agree += consistent
    ok = agree == count and 0 < complete < count
    metrics = {"agreeing": float(agree), "discriminating": float(complete), "trees": float(count)}
    return ok, metrics, f"{agree}/{count} agree, {complete} discriminate"


CRITERIA = (criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6, criterion_7, criterion_8)


SEEDED = {1, 3, 7, 8}


def run_suite(scale: str = "desk", seed: int | None = None) -> list[CriterionResult]:
    """Run every criterion; ``seed`` replaces the default seed of the sampled ones."""
    if scale != "desk":
        raise ValueError(f"unknown scale {scale!r}; only 'desk' is defined")
    results = []
    for number, criterion in enumerate(CRITERIA, start=1):
        kwargs = {"seed": seed} if seed is not None and number in SEEDED else {}
        results.append(criterion(**kwargs))
    return results
