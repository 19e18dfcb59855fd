"""Two-stage epsilon-interpolation of an arbitrary measurement.

Given a POVM ``{F_j}`` and constants ``c_i >= 0`` with ``c = 1/(1 + sum c_i)``
the first stage has elements ``E_i = c (c_i I + F_i)``.  Conditioned on
outcome ``i`` the second stage has elements
``E^(i)_j = c (c_i + delta_ij) E_i^{-1/2} F_j E_i^{-1/2}`` (or ``delta_ij I``
when ``c_i = 0``), so that ``sqrt(E_i) E^(i)_j sqrt(E_i) = c (c_i + delta_ij) F_j``
and coarse graining over ``i`` returns ``F_j``.  Each ``c_i`` is tuned so the
first-stage progress ``mu(E_i)`` equals ``min(epsilon, mu(F_i))``.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np

from .errors import BracketError, EpsilonOutOfRange, TargetUnreachable
from .linalg import eigendecompose, hermitian, identity, max_abs, proportionality, tolerances
from .measurement import CoarseGrainMap, Measurement, compose, coarse_grain, is_von_neumann, validate
from .progress import GuessingProgress, ProgressFunction

_BRACKET_LIMIT = 1e12
_MAX_BISECTIONS = 400


@dataclasses.dataclass(frozen=True)
class InterpolationResult:
    m1: Measurement
    m2_list: tuple[Measurement, ...]
    coarse_map: CoarseGrainMap
    epsilon: float
    epsilon_achieved: float
    c_constants: tuple[float, ...]

    @property
    def c(self) -> float:
        if any(math.isinf(ci) for ci in self.c_constants):
            return 0.0
        return 1.0 / (1.0 + sum(self.c_constants))

    @property
    def is_limit(self) -> bool:
        """True for the ``c_i -> infinity`` limit that realizes ``epsilon = 0``."""
        return any(math.isinf(ci) for ci in self.c_constants)

    def fine_grained(self) -> Measurement:
        return compose(self.m1, self.m2_list)

    def composed(self) -> Measurement:
        return compose(self.m1, self.m2_list, self.coarse_map)


def solve_c(mu: ProgressFunction, f, target: float) -> float:
    """Smallest-bracket ``c >= 0`` with ``mu(c I + F) = target``.

    Returns ``0`` when ``target`` equals ``mu(F)``.  A zero target that is only
    reached as ``c -> infinity`` returns ``math.inf``.  The guessing progress
    function uses its closed form; any other function is solved by bisection
    on ``[0, C]`` with ``C`` doubled from 1 until the sign changes.
    """
    f = hermitian(f)
    eye = np.eye(f.shape[0])
    start = mu(f)
    tol = tolerances().root_find
    if target < -tol or target > start + tol:
        raise TargetUnreachable(f"target {target:.6g} outside [0, mu(F)={start:.6g}]")
    if target >= start - tol:
        return 0.0

    if isinstance(mu, GuessingProgress):
        if target <= tol:
            return math.inf
        n = len(mu.vectors)
        best = float(np.max(mu.weights(f)))
        trace = float(np.trace(f).real)
        return max((best - (target + 1.0 / n) * trace) / (n * target), 0.0)

    def g(c):
        return mu(c * eye + f) - target

    hi = 1.0
    while g(hi) > 0.0:
        hi *= 2.0
        if hi > _BRACKET_LIMIT:
            if target <= tol:
                return math.inf
            raise BracketError(f"no sign change of mu(cI+F) - {target:.6g} for c <= {_BRACKET_LIMIT:g}")
    lo = hi / 2.0 if hi > 1.0 else 0.0
    if g(lo) <= 0.0:
        lo = 0.0
    for _ in range(_MAX_BISECTIONS):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if g(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return lo if abs(g(lo)) < abs(g(hi)) else hi


def _second_stage(m: Measurement, i: int, ci: float) -> Measurement:
    """Second stage conditioned on first-stage outcome ``i``.

    Evaluated in the eigenbasis of ``F_i`` where ``c_i E_i^{-1}`` has the
    bounded spectrum ``c_i / (c_i + f)``; this avoids inverting ``E_i``
    explicitly when ``c_i`` is small.
    """
    n = m.dim
    if ci == 0.0:
        return Measurement([identity(n) if j == i else np.zeros((n, n)) for j in range(len(m))], m.labels)
    w, u = eigendecompose(m.elements[i])
    w = np.clip(w, 0.0, None)
    shrink = u * np.sqrt(ci / (ci + w))
    damp = shrink @ u.conj().T
    elements = []
    for j, fj in enumerate(m.elements):
        if j == i:
            elements.append((u * ((ci + 1.0) * w / (ci + w))) @ u.conj().T)
        else:
            elements.append(damp @ fj @ damp)
    return Measurement(elements, m.labels)


def build_interpolation(m: Measurement, mu: ProgressFunction, c_constants, epsilon: float | None = None
                        ) -> InterpolationResult:
    """Assemble both stages for given constants ``c_i``.

    If any constant is infinite the uniform limit of all ``c_i -> infinity``
    is used: every first-stage element is ``I / k`` and every second stage is
    ``m`` itself.
    """
    c_constants = tuple(float(ci) for ci in c_constants)
    if len(c_constants) != len(m):
        raise ValueError(f"{len(c_constants)} constants for {len(m)} outcomes")
    if any(ci < 0 for ci in c_constants):
        raise ValueError("constants must be non-negative")
    k = len(m)
    if any(math.isinf(ci) for ci in c_constants):
        c_constants = (math.inf,) * k
        m1 = Measurement([identity(m.dim) / k] * k, m.labels, m.d_A, m.d_B)
        m2_list = tuple(Measurement(m.elements, m.labels) for _ in range(k))
    else:
        c = 1.0 / (1.0 + sum(c_constants))
        eye = np.eye(m.dim)
        m1 = Measurement([c * (ci * eye + fi) for ci, fi in zip(c_constants, m.elements)],
                         m.labels, m.d_A, m.d_B)
        m2_list = tuple(_second_stage(m, i, ci) for i, ci in enumerate(c_constants))
    pairs = compose(m1, m2_list).labels
    cmap = CoarseGrainMap.by_second(pairs, order=m.labels)
    achieved = max(mu(e) for e in m1.elements)
    return InterpolationResult(m1, m2_list, cmap, float(achieved if epsilon is None else epsilon),
                               float(achieved), c_constants)


def progress_ceiling(m: Measurement, mu: ProgressFunction) -> float:
    """``lambda = max_i mu(F_i)``, the largest epsilon an interpolation can reach."""
    return max(mu(f) for f in m.elements)


def interpolate_kkb(m: Measurement, mu: ProgressFunction, epsilon: float) -> InterpolationResult:
    m.check()
    values = [mu(f) for f in m.elements]
    lam = max(values)
    tol = tolerances().root_find
    if not (-tol <= epsilon <= lam + tol):
        raise EpsilonOutOfRange(epsilon, lam)
    epsilon = min(max(epsilon, 0.0), lam)
    constants = [solve_c(mu, f, min(epsilon, v)) for f, v in zip(m.elements, values)]
    return build_interpolation(m, mu, constants, epsilon)


@dataclasses.dataclass(frozen=True)
class VerificationReport:
    stages_valid: bool
    stage_residual: float
    progress_error: float
    composition_residual: float
    proportionality_residual: float | None
    progress_tolerance: float = 1e-9
    composition_tolerance: float = 1e-8

    @property
    def progress_ok(self) -> bool:
        return self.progress_error <= self.progress_tolerance

    @property
    def composition_ok(self) -> bool:
        return self.composition_residual <= self.composition_tolerance

    @property
    def proportional_ok(self) -> bool:
        return self.proportionality_residual is None or self.proportionality_residual <= self.composition_tolerance

    @property
    def ok(self) -> bool:
        return self.stages_valid and self.progress_ok and self.composition_ok and self.proportional_ok

    def as_dict(self) -> dict:
        return {
            "ok": self.ok,
            "stages_valid": self.stages_valid,
            "stage_residual": self.stage_residual,
            "progress_error": self.progress_error,
            "composition_residual": self.composition_residual,
            "proportionality_residual": self.proportionality_residual,
        }


def verify_interpolation(target: Measurement, result: InterpolationResult, mu: ProgressFunction,
                         epsilon: float | None = None) -> VerificationReport:
    """Check both stages, the realized progress and the reproduced statistics.

    ``epsilon`` defaults to the value the result was requested with.  For von
    Neumann targets every fine-grained element must also be proportional to
    the target projector it is coarse grained into.
    """
    epsilon = result.epsilon if epsilon is None else epsilon
    reports = [validate(result.m1)] + [validate(m2) for m2 in result.m2_list]
    stages_valid = all(r.ok for r in reports) and len(result.m2_list) == len(result.m1)
    stage_residual = max(r.completeness_residual for r in reports)
    progress_error = abs(max(mu(e) for e in result.m1.elements) - epsilon)

    fine = result.fine_grained()
    try:
        composed = coarse_grain(fine, result.coarse_map)
        residual = max(max_abs(composed[lbl] - f) for lbl, f in target)
    except (KeyError, ValueError):
        residual = math.inf

    prop = None
    if is_von_neumann(target):
        prop = 0.0
        assign = result.coarse_map.assignment(fine.labels)
        for lbl, e in fine:
            if assign.get(lbl) in target.labels:
                goal = target[assign[lbl]]
                t, _ = proportionality(goal, e)
                prop = max(prop, max_abs(e - t * goal))
    return VerificationReport(stages_valid, stage_residual, progress_error, residual, prop)
