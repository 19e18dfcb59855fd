import numpy as np
import pytest
from numpy.testing import assert_allclose

from mint.fixtures import (
    augmented_domino_basis,
    bell_measurement,
    catalog,
    computational_basis,
    domino_basis,
    fourier,
    make_fixture,
    peel_off_tree,
    random_discrimination_tree,
    random_povm,
    random_tree,
)
from mint.measurement import Measurement, ProductBasis, validate, von_neumann
from mint.protocol import ProtocolTree, leaf_povm
from mint.sampling import random_unitary, rng_from
from mint.structure import is_product

S = 1 / np.sqrt(2)


def ket(i, d=3):
    return np.eye(d)[i]


class TestDomino:
    def test_states(self):
        b = domino_basis()
        assert len(b) == 9 and b.d_A == 3 and b.d_B == 3
        assert b.orthonormality_error() <= 1e-12
        expected = {
            "psi1": np.kron(ket(1), ket(1)),
            "psi2+": np.kron(ket(0), S * (ket(0) + ket(1))),
            "psi3-": np.kron(ket(2), S * (ket(1) - ket(2))),
            "psi4+": np.kron(S * (ket(1) + ket(2)), ket(0)),
            "psi5-": np.kron(S * (ket(0) - ket(1)), ket(2)),
        }
        for lbl, v in expected.items():
            assert_allclose(abs(np.vdot(v, b.vectors[b.labels.index(lbl)])), 1.0, atol=1e-12)

    def test_label_order(self):
        assert domino_basis().labels == ("psi1", "psi2+", "psi2-", "psi3+", "psi3-", "psi4+", "psi4-",
                                         "psi5+", "psi5-")

    def test_plus_minus_orthogonal(self):
        v = domino_basis().vectors
        assert abs(np.vdot(v[1], v[2])) <= 1e-15


class TestAugmentedDomino:
    def test_basis(self):
        b = augmented_domino_basis()
        assert len(b) == 16 and b.orthonormality_error() <= 1e-12
        assert b.labels[9:] == ("psi6_0", "psi6_1", "psi6_2", "psi7_0", "psi7_1", "psi7_2", "psi7_3")

    def test_fourier_moduli(self):
        assert_allclose(abs(fourier(3)), np.full((3, 3), 1 / np.sqrt(3)), atol=1e-15)
        assert_allclose(abs(fourier(4)), np.full((4, 4), 0.5), atol=1e-15)
        assert_allclose(fourier(4).conj().T @ fourier(4), np.eye(4), atol=1e-15)

    def test_tiles(self):
        b = augmented_domino_basis()
        for i in range(3):
            assert_allclose(b.bob[b.labels.index(f"psi6_{i}")], ket(3, 4))
        for j in range(4):
            assert_allclose(b.alice[b.labels.index(f"psi7_{j}")], ket(3, 4))

    def test_von_neumann(self):
        assert validate(von_neumann(augmented_domino_basis())).ok

    def test_custom_unitary(self):
        u = random_unitary(rng_from(4), 3)
        assert augmented_domino_basis(u3=u).orthonormality_error() <= 1e-12

    def test_zero_entry_unitary_rejected(self):
        h = np.array([[1, 1, 0], [1, -1, 0], [0, 0, np.sqrt(2)]]) / np.sqrt(2)
        with pytest.raises(ValueError):
            augmented_domino_basis(u3=h)


class TestPeelOff:
    def test_leaves(self):
        assert [s.name for s in peel_off_tree(False).leaves()] == ["alice-3", "domino-block", "bob-3"]
        labels = {s.name for s in peel_off_tree(True).leaves()}
        assert labels == {"domino-block"} | {f"psi6_{i}" for i in range(3)} | {f"psi7_{j}" for j in range(4)}

    def test_extended_leaf_povm(self):
        povm = leaf_povm(peel_off_tree(True))
        assert validate(povm).ok
        basis = augmented_domino_basis()
        for lbl in [f"psi7_{j}" for j in range(4)] + [f"psi6_{i}" for i in range(3)]:
            v = basis.vectors[basis.labels.index(lbl)]
            assert_allclose(povm[lbl] @ v, v, atol=1e-12)


class TestGenerators:
    def test_random_povm_example(self):
        m = random_povm(4, 3, 7)
        assert validate(m).ok and len(m) == 3

    def test_random_povm_deterministic(self):
        a, b = random_povm(5, 4, 3), random_povm(5, 4, 3)
        for x, y in zip(a.elements, b.elements):
            assert np.array_equal(x, y)

    def test_random_tree_deterministic(self):
        a, b = leaf_povm(random_tree(2, 3, 3, 11)), leaf_povm(random_tree(2, 3, 3, 11))
        assert a.labels == b.labels
        for x, y in zip(a.elements, b.elements):
            assert np.array_equal(x, y)

    @pytest.mark.parametrize("complete", [True, False])
    def test_discrimination_tree_basis(self, complete):
        for seed in range(10):
            tree, basis = random_discrimination_tree(3, 2, seed, complete)
            assert basis.orthonormality_error() <= 1e-10
            assert validate(leaf_povm(tree)).ok


class TestCatalog:
    def test_bell_is_entangled(self):
        m = bell_measurement()
        assert validate(m).ok
        assert not any(is_product(e, 2, 2) for e in m.elements)

    @pytest.mark.parametrize("name", sorted(catalog()) + ["computational-2x3"])
    def test_objects(self, name):
        obj = make_fixture(name)
        assert isinstance(obj, (ProductBasis, Measurement, ProtocolTree)) or hasattr(obj, "stages")

    def test_computational(self):
        b = make_fixture("computational-3x2")
        assert b.labels == ("00", "01", "10", "11", "20", "21")
        assert_allclose(b.vectors, np.eye(6))
        assert computational_basis(3, 2).labels == b.labels

    @pytest.mark.parametrize("name", ["unknown", "computational-x"])
    def test_unknown(self, name):
        with pytest.raises(KeyError):
            make_fixture(name)
