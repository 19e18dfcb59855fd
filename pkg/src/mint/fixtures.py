"""Canonical bases, protocols and seeded random generators."""

from __future__ import annotations

import numpy as np

from .linalg import hermitian, identity, ket, projector, tensor_product
from .measurement import Measurement, ProductBasis, pair_label, von_neumann
from .protocol import Completion, Leaf, Node, ProtocolTree
from .sampling import ginibre, random_isometry_blocks, random_unitary, rng_from

SQRT_HALF = 1 / np.sqrt(2)


def fourier(n: int) -> np.ndarray:
    """Quantum Fourier transform modulo ``n``; every entry has modulus ``1/sqrt(n)``."""
    j, k = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    return np.exp(2j * np.pi * j * k / n) / np.sqrt(n)


def _mix(x: int, y: int, sign: int, d: int) -> np.ndarray:
    return SQRT_HALF * (ket(x, d) + sign * ket(y, d))


def _domino_factors(d: int):
    """The nine domino states as (label, alice, bob) inside ``C^d (x) C^d``, d >= 3."""
    out = [("psi1", ket(1, d), ket(1, d))]
    for sign, tag in ((1, "+"), (-1, "-")):
        out.append((f"psi2{tag}", ket(0, d), _mix(0, 1, sign, d)))
    for sign, tag in ((1, "+"), (-1, "-")):
        out.append((f"psi3{tag}", ket(2, d), _mix(1, 2, sign, d)))
    for sign, tag in ((1, "+"), (-1, "-")):
        out.append((f"psi4{tag}", _mix(1, 2, sign, d), ket(0, d)))
    for sign, tag in ((1, "+"), (-1, "-")):
        out.append((f"psi5{tag}", _mix(0, 1, sign, d), ket(2, d)))
    return out


def domino_basis() -> ProductBasis:
    """The nine domino product states on 3x3."""
    labels, alice, bob = zip(*_domino_factors(3))
    return ProductBasis(3, 3, alice, bob, labels)


def augmented_domino_basis(u3=None, u4=None) -> ProductBasis:
    """Domino states on ``span{0,1,2}^2`` plus two long tiles on 4x4.

    ``psi6_i = (U3|i>)|3>`` for ``i < 3`` and ``psi7_j = |3>(U4|j>)`` for
    ``j < 4``.  The unitaries default to Fourier transforms and must have no
    zero entries.
    """
    u3 = fourier(3) if u3 is None else np.asarray(u3, dtype=complex)
    u4 = fourier(4) if u4 is None else np.asarray(u4, dtype=complex)
    if np.min(np.abs(u3)) < 1e-12 or np.min(np.abs(u4)) < 1e-12:
        raise ValueError("tile unitaries must have no zero entries")
    factors = _domino_factors(4)
    for i in range(3):
        factors.append((f"psi6_{i}", np.concatenate([u3[:, i], [0.0]]), ket(3, 4)))
    for j in range(4):
        factors.append((f"psi7_{j}", ket(3, 4), u4[:, j]))
    labels, alice, bob = zip(*factors)
    return ProductBasis(4, 4, alice, bob, labels)


def computational_basis(d_A: int, d_B: int) -> ProductBasis:
    pairs = [(a, b) for a in range(d_A) for b in range(d_B)]
    return ProductBasis(d_A, d_B, [ket(a, d_A) for a, _ in pairs], [ket(b, d_B) for _, b in pairs],
                        [f"{a}{b}" for a, b in pairs])


def bell_measurement() -> Measurement:
    s = SQRT_HALF
    vectors = [s * np.array([1, 0, 0, 1]), s * np.array([1, 0, 0, -1]),
               s * np.array([0, 1, 1, 0]), s * np.array([0, 1, -1, 0])]
    return von_neumann(vectors, ["phi+", "phi-", "psi+", "psi-"]).with_dims(2, 2)


def _p3() -> np.ndarray:
    return projector(ket(3, 4))


def peel_off_tree(extended: bool = False) -> ProtocolTree:
    """LOCC protocol that removes the two long tiles of the augmented domino basis.

    Alice measures ``{I - |3><3|, |3><3|}``; on her first outcome Bob does the
    same.  With ``extended=True`` the tile branches are finished by a local
    measurement in the tile's basis (Bob in the ``U4`` basis after Alice's
    ``|3>``, Alice in the ``U3`` basis after Bob's ``|3>``); the domino block
    stays a leaf because no LOCC completion exists for it.
    """
    p3 = _p3()
    rest = np.eye(4) - p3
    if extended:
        u3, u4 = fourier(3), fourier(4)
        bob_tile = Node("B", tuple(projector(u4[:, j]) for j in range(4)),
                        tuple(Leaf(f"psi7_{j}") for j in range(4)))
        alice_vectors = [np.concatenate([u3[:, i], [0.0]]) for i in range(3)]
        # the |3> component is already removed on this branch; fold it into the first Kraus operator
        alice_kraus = tuple(projector(v) + (p3 if i == 0 else 0) for i, v in enumerate(alice_vectors))
        alice_tile = Node("A", alice_kraus, tuple(Leaf(f"psi6_{i}") for i in range(3)))
        bob_round = Node("B", (rest, p3), (Leaf("domino-block"), alice_tile))
        root = Node("A", (rest, p3), (bob_round, bob_tile))
    else:
        bob_round = Node("B", (rest, p3), (Leaf("domino-block"), Leaf("bob-3")))
        root = Node("A", (rest, p3), (bob_round, Leaf("alice-3")))
    return ProtocolTree(4, 4, root)


def _domino_block_stage(basis: ProductBasis) -> Measurement:
    """Separable measurement finishing the domino block: domino projectors plus the complement."""
    domino = [lbl for lbl in basis.labels if not lbl.startswith(("psi6", "psi7"))]
    vectors = basis.subset(domino).vectors
    elements = [projector(v) for v in vectors]
    rest = np.eye(16) - sum(elements)
    return Measurement(elements + [rest], domino + ["rest"])


def peel_off_completion(tree: ProtocolTree | None = None, basis: ProductBasis | None = None) -> Completion:
    """Separable second stages that complete the peel-off protocol to the augmented-domino measurement."""
    tree = peel_off_tree(extended=True) if tree is None else tree
    basis = augmented_domino_basis() if basis is None else basis
    u3, u4 = fourier(3), fourier(4)
    eye4 = np.eye(4)
    p3 = _p3()
    stages: dict[str, Measurement] = {}
    assign: dict[str, str] = {}
    for state in tree.leaves():
        leaf = state.node.label
        if leaf == "domino-block":
            stage = _domino_block_stage(basis)
            targets = {lbl: lbl for lbl in stage.labels}
            targets["rest"] = basis.labels[0]
        elif leaf == "alice-3":
            stage = Measurement([tensor_product(eye4, projector(u4[:, j])) for j in range(4)],
                                [f"psi7_{j}" for j in range(4)])
            targets = {lbl: lbl for lbl in stage.labels}
        elif leaf == "bob-3":
            vs = [np.concatenate([u3[:, i], [0.0]]) for i in range(3)]
            stage = Measurement([tensor_product(projector(v) + (p3 if i == 0 else 0), eye4) for i, v in enumerate(vs)],
                                [f"psi6_{i}" for i in range(3)])
            targets = {lbl: lbl for lbl in stage.labels}
        else:
            stage = Measurement([identity(16)], ["done"])
            targets = {"done": leaf}
        stages[leaf] = stage
        for sub, target in targets.items():
            assign[pair_label(leaf, sub)] = target
    return Completion(stages, assign, basis.labels)


def trivial_completion(tree: ProtocolTree, assign: dict[str, str] | None = None, order=None) -> Completion:
    """Attach ``{I}`` to every leaf; leaf ``l`` becomes target outcome ``assign.get(l, l)``."""
    assign = assign or {}
    leaves = [s.node.label for s in tree.leaves()]
    stages = {leaf: Measurement([identity(tree.dim)], ["done"]) for leaf in leaves}
    mapping = {pair_label(leaf, "done"): assign.get(leaf, leaf) for leaf in leaves}
    order = tuple(order) if order is not None else tuple(dict.fromkeys(mapping.values()))
    return Completion(stages, mapping, order)


def local_rounds_tree(d_A: int, d_B: int) -> ProtocolTree:
    """Alice measures the computational basis, then Bob does on every branch."""
    bob = [Node("B", tuple(projector(ket(b, d_B)) for b in range(d_B)),
                tuple(Leaf(f"{a}{b}") for b in range(d_B))) for a in range(d_A)]
    root = Node("A", tuple(projector(ket(a, d_A)) for a in range(d_A)), tuple(bob))
    return ProtocolTree(d_A, d_B, root)


def random_povm(dim: int, outcomes: int, seed) -> Measurement:
    """Random full-rank POVM ``S^{-1/2} G_i^dag G_i S^{-1/2}`` with ``S = sum G_i^dag G_i``."""
    rng = rng_from(seed)
    raw = [g.conj().T @ g for g in (ginibre(rng, dim, dim) for _ in range(outcomes))]
    w, v = np.linalg.eigh(sum(raw))
    root = (v / np.sqrt(w)) @ v.conj().T
    elements = [hermitian(root @ e @ root) for e in raw]
    return Measurement(elements, [f"F{i}" for i in range(outcomes)])


def random_tree(d_A: int, d_B: int, depth: int, seed, max_branching: int = 3) -> ProtocolTree:
    """Random protocol whose nodes hold slices of random isometries as Kraus operators."""
    rng = rng_from(seed)
    counter = iter(range(10**9))

    def build(level: int):
        if level == depth or (level > 0 and rng.random() < 0.25):
            return Leaf(f"leaf{next(counter)}")
        party = "A" if rng.random() < 0.5 else "B"
        d = d_A if party == "A" else d_B
        branches = int(rng.integers(1, max_branching + 1))
        kraus = random_isometry_blocks(rng, d, branches)
        return Node(party, tuple(kraus), tuple(build(level + 1) for _ in range(branches)))

    return ProtocolTree(d_A, d_B, build(0))


def random_discrimination_tree(d_A: int, d_B: int, seed, complete: bool = True
                               ) -> tuple[ProtocolTree, ProductBasis]:
    """Local-projector protocol together with the product basis it is built around.

    Each round, one party whose remaining local subspace has rank above one
    rotates that subspace at random and splits it into orthogonal projectors.
    Refining until both local ranks are one discriminates the basis; with
    ``complete=False`` some branches stop early and leave several states.
    """
    rng = rng_from(seed)
    states: list[tuple[str, np.ndarray, np.ndarray]] = []
    counter = iter(range(10**9))
    stop_somewhere = not complete

    def build(qa: np.ndarray, qb: np.ndarray, depth: int):
        nonlocal stop_somewhere
        ra, rb = qa.shape[1], qb.shape[1]
        stop = ra == 1 and rb == 1
        if not stop and stop_somewhere and (depth > 0 and rng.random() < 0.5 or depth >= 3):
            stop, stop_somewhere = True, False
        if stop:
            label = f"leaf{next(counter)}"
            for a in range(ra):
                for b in range(rb):
                    states.append((f"{label}.{a}{b}", qa[:, a], qb[:, b]))
            return Leaf(label)
        choices = [p for p, r in (("A", ra), ("B", rb)) if r > 1]
        party = choices[int(rng.integers(len(choices)))]
        q = qa if party == "A" else qb
        r = q.shape[1]
        q = q @ random_unitary(rng, r)
        groups = int(rng.integers(2, r + 1))
        cuts = np.sort(rng.choice(np.arange(1, r), size=groups - 1, replace=False))
        parts = np.split(np.arange(r), cuts)
        d = q.shape[0]
        outside = np.eye(d) - q @ q.conj().T
        kraus, kids = [], []
        for g, idx in enumerate(parts):
            sub = q[:, idx]
            k = sub @ sub.conj().T + (outside if g == 0 else 0)
            kraus.append(k)
            kids.append(build(sub, qb, depth + 1) if party == "A" else build(qa, sub, depth + 1))
        return Node(party, tuple(kraus), tuple(kids))

    root = build(np.eye(d_A, dtype=complex), np.eye(d_B, dtype=complex), 0)
    tree = ProtocolTree(d_A, d_B, root)
    labels, alice, bob = zip(*states)
    return tree, ProductBasis(d_A, d_B, alice, bob, labels)


def catalog() -> dict[str, object]:
    """Named fixtures: product bases, measurements and protocol trees."""
    return {
        "domino": domino_basis,
        "augmented-domino": augmented_domino_basis,
        "peel-off": lambda: peel_off_tree(False),
        "peel-off-extended": lambda: peel_off_tree(True),
        "peel-off-completion": peel_off_completion,
        "bell": bell_measurement,
    }


def make_fixture(name: str):
    if name.startswith("computational-"):
        try:
            d_A, d_B = (int(x) for x in name.split("-", 1)[1].split("x"))
        except ValueError as exc:
            raise KeyError(name) from exc
        return computational_basis(d_A, d_B)
    return catalog()[name]()
