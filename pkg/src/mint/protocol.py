"""Finite LOCC protocols as rooted trees of local Kraus rounds.

Every internal node is one party's local measurement, given by Kraus
operators on that party's space; its children are the branches selected by
the (broadcast) outcome.  A leaf is a terminating classical record.  The
accumulated local Kraus operators along a root path give the product POVM
element ``(K_A^dag K_A) (x) (K_B^dag K_B)`` of every node.
"""

from __future__ import annotations

import dataclasses
from collections import deque
from collections.abc import Iterator, Mapping, Sequence

import numpy as np

from .errors import (
    DimensionError,
    EpsilonOutOfRange,
    ExtractionTrivial,
    IncompleteKraus,
    NoProgressAnywhere,
    PartitionError,
    PreconditionError,
)
from .interpolation import InterpolationResult, interpolate_kkb, verify_interpolation
from .linalg import max_abs, pinv_sqrt, tensor_product
from .measurement import CoarseGrainMap, Measurement, ProductBasis, compose, pair_label, party_key, state_vectors
from .progress import ProgressFunction, induced_mu
from .structure import LocalExtraction, extract_local_nondisturbing, sep_to_product_stage

ZERO_PROGRESS = 1e-9
ZERO_ELEMENT = 1e-12


@dataclasses.dataclass(frozen=True)
class Leaf:
    label: str


@dataclasses.dataclass(frozen=True)
class Node:
    party: str
    kraus: tuple[np.ndarray, ...]
    children: tuple["Node | Leaf", ...]
    label: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "party", party_key(self.party))
        kraus = tuple(np.array(k, dtype=complex) for k in self.kraus)
        for k in kraus:
            k.flags.writeable = False
        object.__setattr__(self, "kraus", kraus)
        object.__setattr__(self, "children", tuple(self.children))
        if len(kraus) != len(self.children):
            raise ValueError(f"{len(kraus)} Kraus operators for {len(self.children)} children")
        if not kraus:
            raise ValueError("an internal node needs at least one branch")

    def povm(self) -> list[np.ndarray]:
        return [k.conj().T @ k for k in self.kraus]


@dataclasses.dataclass(frozen=True, eq=False)
class NodeState:
    """A node reached along ``path`` with the accumulated local Kraus operators."""

    path: tuple[int, ...]
    node: "Node | Leaf"
    kraus_A: np.ndarray
    kraus_B: np.ndarray

    @property
    def a_prime(self) -> np.ndarray:
        return self.kraus_A.conj().T @ self.kraus_A

    @property
    def b_prime(self) -> np.ndarray:
        return self.kraus_B.conj().T @ self.kraus_B

    @property
    def element(self) -> np.ndarray:
        return tensor_product(self.a_prime, self.b_prime)

    @property
    def name(self) -> str:
        if isinstance(self.node, Leaf):
            return self.node.label
        if self.node.label:
            return self.node.label
        return "node:" + ".".join(map(str, self.path)) if self.path else "node:root"


class ProtocolTree:
    __slots__ = ("d_A", "d_B", "root")

    def __init__(self, d_A: int, d_B: int, root: "Node | Leaf", *, check: bool = True):
        self.d_A, self.d_B = int(d_A), int(d_B)
        self.root = root
        if check:
            self.check()

    def __repr__(self):
        return f"ProtocolTree({self.d_A}x{self.d_B}, leaves={len(self.leaves())})"

    @property
    def dim(self) -> int:
        return self.d_A * self.d_B

    def check(self, tol: float = 1e-8) -> None:
        labels = []
        for state in self.walk():
            node = state.node
            if isinstance(node, Leaf):
                labels.append(node.label)
                continue
            d = self.d_A if node.party == "A" else self.d_B
            if any(k.shape[1] != d for k in node.kraus):
                raise DimensionError(f"Kraus operators at {state.name} do not act on C^{d}")
            if any(k.shape[0] != d for k in node.kraus):
                raise DimensionError(f"Kraus operators at {state.name} must be square {d}x{d}")
            residual = max_abs(sum(node.povm()) - np.eye(d))
            if residual > tol:
                raise IncompleteKraus(f"Kraus operators at {state.name} are incomplete (residual {residual:.3e})")
        if len(set(labels)) != len(labels):
            raise ValueError("leaf labels must be unique")

    def walk(self) -> Iterator[NodeState]:
        """Breadth-first traversal with accumulated Kraus operators."""
        queue = deque([NodeState((), self.root, np.eye(self.d_A, dtype=complex), np.eye(self.d_B, dtype=complex))])
        while queue:
            state = queue.popleft()
            yield state
            queue.extend(children(state))

    def leaves(self) -> list[NodeState]:
        return [s for s in self.walk() if isinstance(s.node, Leaf)]


def children(state: NodeState) -> list[NodeState]:
    node = state.node
    if isinstance(node, Leaf):
        return []
    out = []
    for idx, (k, child) in enumerate(zip(node.kraus, node.children)):
        ka, kb = (k @ state.kraus_A, state.kraus_B) if node.party == "A" else (state.kraus_A, k @ state.kraus_B)
        out.append(NodeState(state.path + (idx,), child, ka, kb))
    return out


def subtree_leaves(state: NodeState) -> list[NodeState]:
    out, queue = [], deque([state])
    while queue:
        s = queue.popleft()
        if isinstance(s.node, Leaf):
            out.append(s)
        else:
            queue.extend(children(s))
    return out


def leaf_povm(t: ProtocolTree) -> Measurement:
    """One product POVM element per leaf, in breadth-first leaf order."""
    t.check()
    leaves = t.leaves()
    return Measurement([s.element for s in leaves], [s.node.label for s in leaves], t.d_A, t.d_B)


def _as_povm(source) -> Measurement:
    return leaf_povm(source) if isinstance(source, ProtocolTree) else source


@dataclasses.dataclass(frozen=True)
class ImplementsReport:
    implements: bool
    residuals: dict[str, float]

    @property
    def worst(self) -> float:
        return max(self.residuals.values()) if self.residuals else 0.0

    def __bool__(self):
        return self.implements


def implements(source, m: Measurement, partition: Mapping[str, str], tol: float = 1e-8) -> ImplementsReport:
    """Whether grouping the protocol's outcomes by ``partition`` reproduces ``m``.

    ``source`` is a :class:`ProtocolTree` or an already-executed measurement
    (for example a tree composed with a separable completion).
    """
    povm = _as_povm(source)
    if povm.dim != m.dim:
        raise DimensionError(f"protocol dimension {povm.dim} does not match measurement dimension {m.dim}")
    missing = [lbl for lbl in povm.labels if lbl not in partition]
    if missing:
        raise PartitionError(f"partition does not cover outcomes {missing[:5]}")
    unknown = sorted({v for v in partition.values() if v not in m.labels})
    if unknown:
        raise PartitionError(f"partition targets unknown outcomes {unknown[:5]}")
    sums = {lbl: np.zeros((m.dim, m.dim), dtype=complex) for lbl in m.labels}
    for lbl, e in povm:
        sums[partition[lbl]] += e
    residuals = {lbl: max_abs(sums[lbl] - e) for lbl, e in m}
    return ImplementsReport(max(residuals.values()) <= tol, residuals)


@dataclasses.dataclass(frozen=True)
class DiscriminationReport:
    discriminates: bool
    partition: dict[str, str] | None
    ambiguous: tuple[str, ...]
    best_guess: dict[str, str]

    def __bool__(self):
        return self.discriminates


def discriminates(source, basis, labels: Sequence[str] | None = None, tol: float = 1e-9) -> DiscriminationReport:
    """Whether every nonzero protocol outcome leaves exactly one basis state possible.

    On success the induced partition maps each outcome to its surviving state.
    Outcomes with zero element go to their largest-weight state; they add
    nothing to any part.
    """
    povm = _as_povm(source)
    vectors = state_vectors(basis)
    if labels is None:
        labels = basis.labels if isinstance(basis, ProductBasis) else [f"psi{k}" for k in range(len(vectors))]
    ambiguous, guess = [], {}
    for lbl, e in povm:
        weights = np.einsum("ki,ij,kj->k", vectors.conj(), e, vectors).real
        guess[lbl] = labels[int(np.argmax(weights))]
        if np.sum(weights) > tol and np.count_nonzero(weights > tol) != 1:
            ambiguous.append(lbl)
    ok = not ambiguous
    return DiscriminationReport(ok, dict(guess) if ok else None, tuple(ambiguous), guess)


@dataclasses.dataclass(frozen=True)
class NodeSelection:
    """Where the zero-progress subtree ends: the node whose local measurement gets interpolated."""

    state: NodeState
    local_measurement: Measurement
    induced: ProgressFunction
    child_progress: tuple[float, ...]
    lam: float
    zero_margin: float
    frontier: tuple[NodeState, ...]

    @property
    def party(self) -> str:
        return self.state.node.party


def _progress(mu: ProgressFunction, e) -> float:
    if max_abs(e) <= ZERO_ELEMENT:
        return 0.0
    return mu(e)


def find_interpolation_node(t: ProtocolTree, mu: ProgressFunction, zero_cut: float = ZERO_PROGRESS) -> NodeSelection:
    """First node (breadth-first) of the zero-progress subtree with a child that makes progress.

    The subtree contains the root and, recursively, all children of any node
    whose children all have progress at most ``zero_cut``.  ``frontier`` lists
    the subtree's other unexpanded nodes; they all have zero progress.
    ``zero_margin`` is the largest progress value that was classified as zero.
    """
    if mu.dim != t.dim:
        raise DimensionError("progress function and protocol dimensions differ")
    root = next(t.walk())
    queue = deque([root])
    reached: list[NodeState] = [root]
    margin = _progress(mu, root.element)
    while queue:
        state = queue.popleft()
        if isinstance(state.node, Leaf):
            continue
        kids = children(state)
        values = tuple(_progress(mu, k.element) for k in kids)
        if max(values) > zero_cut:
            node = state.node
            local = Measurement(node.povm(), [str(i) for i in range(len(kids))])
            kraus = state.kraus_A if node.party == "A" else state.kraus_B
            induced = induced_mu(mu, state.a_prime, state.b_prime, party=node.party, kraus=kraus)
            lam = max(v for v, e in zip(values, local.elements) if max_abs(e) > ZERO_ELEMENT)
            pending = {id(s) for s in queue}
            frontier = tuple(s for s in reached
                             if s is not state and (isinstance(s.node, Leaf) or id(s) in pending))
            return NodeSelection(state, local, induced, values, lam, margin, frontier)
        margin = max(margin, *values)
        queue.extend(kids)
        reached.extend(kids)
    worst = max(_progress(mu, s.element) for s in t.leaves())
    raise NoProgressAnywhere(worst)


@dataclasses.dataclass(frozen=True)
class Completion:
    """Second stages attached to the leaves of a protocol, plus the final grouping.

    ``stages[leaf]`` is a measurement on the full space applied (in the
    composition sense) after that leaf; ``assign`` maps each ``leaf/outcome``
    pair label to an outcome of the completed measurement, listed in ``order``.
    """

    stages: dict[str, Measurement]
    assign: dict[str, str]
    order: tuple[str, ...]

    def composed(self, t: ProtocolTree, fine: bool = False) -> Measurement:
        povm = leaf_povm(t)
        missing = [lbl for lbl in povm.labels if lbl not in self.stages]
        if missing:
            raise PartitionError(f"no second stage for leaves {missing[:5]}")
        chain = compose(povm, [self.stages[lbl] for lbl in povm.labels])
        if fine:
            return chain
        return Measurement(_group(chain, self.assign, self.order), self.order, t.d_A, t.d_B)


def _group(m: Measurement, assign: Mapping[str, str], order: Sequence[str]) -> list[np.ndarray]:
    cmap = CoarseGrainMap.from_assignment(m.labels, assign, order)
    return [sum(m.elements[i] for i in part) for part in cmap.partition]


@dataclasses.dataclass(frozen=True)
class ProtocolInterpolation:
    result: InterpolationResult
    selection: NodeSelection
    local: InterpolationResult
    target: Measurement


def _conditioned_stage(x, pieces: Sequence[tuple[str, np.ndarray]]) -> Measurement:
    """Second stage ``G_p = X^{+1/2} T_p X^{+1/2}`` for pieces ``T_p`` summing to ``X``.

    The kernel of ``X`` is covered by an extra ``null`` element so that the
    stage is complete; it composes to zero.
    """
    root = pinv_sqrt(x)
    elements = [root @ p @ root for _, p in pieces]
    labels = [lbl for lbl, _ in pieces]
    rest = np.eye(x.shape[0]) - sum(elements)
    if max_abs(rest) > ZERO_ELEMENT:
        elements.append(rest)
        labels.append("null")
    return Measurement(elements, labels)


def interpolate_protocol(t: ProtocolTree, completion: Completion, mu: ProgressFunction, mu0: float,
                         epsilon: float, target: Measurement | None = None) -> ProtocolInterpolation:
    """Product epsilon-interpolation of a measurement completed from an LOCC protocol.

    The local measurement at the end of the zero-progress subtree is
    interpolated with respect to the induced progress function; the rest of
    the tree and the completion become conditioned second stages.  Every
    first-stage element is a tensor product.
    """
    leaves = leaf_povm(t)
    for lbl, e in leaves:
        if max_abs(e) > ZERO_ELEMENT and mu(e) < mu0 - 1e-9:
            raise PreconditionError(f"leaf {lbl!r} has progress {mu(e):.6g} below the threshold {mu0:.6g}")
    fine = completion.composed(t, fine=True)
    completed = completion.composed(t)
    if target is None:
        target = completed
    else:
        if set(target.labels) != set(completed.labels):
            raise PreconditionError("the completion's outcome labels differ from the target's")
        residual = max(max_abs(completed[lbl] - e) for lbl, e in target)
        if residual > 1e-8:
            raise PreconditionError(f"protocol and completion do not reproduce the target (residual {residual:.3e})")

    selection = find_interpolation_node(t, mu)
    bound = min(selection.lam, mu0)
    if not 0.0 < epsilon < bound:
        raise EpsilonOutOfRange(epsilon, bound, open_interval=True)
    local = interpolate_kkb(selection.local_measurement, selection.induced, epsilon)

    pieces_by_leaf: dict[str, list[tuple[str, np.ndarray]]] = {}
    fine_items = iter(fine)
    for leaf in leaves.labels:
        pieces_by_leaf[leaf] = [next(fine_items) for _ in completion.stages[leaf].labels]

    first, seconds, assign = [], [], {}
    default = target.labels[0]

    def add(label: str, x, pieces):
        if max_abs(x) <= ZERO_ELEMENT:
            return
        stage = _conditioned_stage(x, pieces)
        first.append((label, x))
        seconds.append(stage)
        for sub in stage.labels:
            assign[pair_label(label, sub)] = completion.assign.get(sub, default)

    for state in selection.frontier:
        pieces = [p for leaf in subtree_leaves(state) for p in pieces_by_leaf[leaf.node.label]]
        add(state.name, state.element, pieces)

    v = selection.state
    kids = children(v)
    weights = _composition_weights(local)
    below = [[p for leaf in subtree_leaves(kid) for p in pieces_by_leaf[leaf.node.label]] for kid in kids]
    for i, (lbl, e_local) in enumerate(local.m1):
        if v.node.party == "A":
            x = tensor_product(v.kraus_A.conj().T @ e_local @ v.kraus_A, v.b_prime)
        else:
            x = tensor_product(v.a_prime, v.kraus_B.conj().T @ e_local @ v.kraus_B)
        pieces = [(plbl, weights[i][k] * p) for k in range(len(kids)) for plbl, p in below[k]]
        add(f"{v.name}#{lbl}", x, pieces)

    m1 = Measurement([x for _, x in first], [lbl for lbl, _ in first], t.d_A, t.d_B)
    pair_labels = compose(m1, seconds).labels
    cmap = CoarseGrainMap.from_assignment(pair_labels, assign, target.labels)
    achieved = max(_progress(mu, x) for x in m1.elements)
    result = InterpolationResult(m1, tuple(seconds), cmap, float(epsilon), float(achieved), local.c_constants)
    return ProtocolInterpolation(result, selection, local, target)


def _composition_weights(local: InterpolationResult) -> list[list[float]]:
    """``w[i][k] = c (c_i + delta_ik)``: share of outcome ``k`` routed through first-stage outcome ``i``."""
    c = local.c
    k = len(local.c_constants)
    return [[c * (ci + (1.0 if i == j else 0.0)) for j in range(k)] for i, ci in enumerate(local.c_constants)]


@dataclasses.dataclass(frozen=True)
class LOCCDecomposition:
    tree: ProtocolTree
    m2_list: tuple[Measurement, ...]
    extraction: LocalExtraction
    residual: float
    progress: tuple[float, ...]


def one_round_tree(extraction: LocalExtraction, d_A: int, d_B: int) -> ProtocolTree:
    meas = extraction.measurement
    root = Node(extraction.party, tuple(meas.elements), tuple(Leaf(lbl) for lbl in meas.labels))
    return ProtocolTree(d_A, d_B, root)


def decompose_from_interpolation(m: Measurement, result: InterpolationResult, basis: ProductBasis,
                                 mu: ProgressFunction, mu0: float, decompositions=None) -> LOCCDecomposition:
    """LOCC first stage with progress at least ``mu0``, read off a separable interpolation.

    The first stage (fine grained through ``decompositions`` when its
    elements are not already products) yields a local non-disturbing
    projective measurement; each of its outcomes is completed by ``m`` itself.
    """
    report = verify_interpolation(m, result, mu)
    if not report.ok:
        raise PreconditionError(f"interpolation does not verify: {report.as_dict()}")
    if not result.epsilon < mu0:
        raise EpsilonOutOfRange(result.epsilon, mu0, open_interval=True)
    stage = result.m1
    if decompositions is not None:
        stage, _ = sep_to_product_stage(stage, decompositions)
    extraction = extract_local_nondisturbing(stage, basis, mu, mu0)
    if extraction.trivial:
        raise ExtractionTrivial("every first-stage factor is proportional to the identity")
    tree = one_round_tree(extraction, basis.d_A, basis.d_B)
    lifted = leaf_povm(tree)
    m2_list = tuple(Measurement(m.elements, m.labels) for _ in lifted.labels)
    chain = compose(lifted, m2_list, CoarseGrainMap.by_second(compose(lifted, m2_list).labels, m.labels))
    residual = max(max_abs(chain[lbl] - e) for lbl, e in m)
    progress = tuple(mu(e) for e in lifted.elements)
    return LOCCDecomposition(tree, m2_list, extraction, residual, progress)


def leaf_progress(t: ProtocolTree, mu: ProgressFunction) -> dict[str, float]:
    return {s.node.label: _progress(mu, s.element) for s in t.leaves()}
