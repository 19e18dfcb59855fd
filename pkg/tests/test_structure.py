import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose

from mint.errors import FactorizationFailed, NonDisturbanceViolated, NotProduct, ThresholdHit, ZeroOperatorError
from mint.fixtures import (
    augmented_domino_basis,
    bell_measurement,
    computational_basis,
    domino_basis,
    peel_off_completion,
    peel_off_tree,
)
from mint.linalg import identity, ket, projector, tensor_product
from mint.measurement import Measurement, coarse_grain, trivial, von_neumann
from mint.progress import example_mu, threshold_example_mu
from mint.protocol import interpolate_protocol
from mint.sampling import random_psd, rng_from
from mint.structure import (
    ProductDecomposition,
    extract_local_nondisturbing,
    factor_product,
    in_span,
    is_non_disturbing,
    is_product,
    local_diagonality_space,
    mu_tilde_upper,
    realign,
    sep_to_product_stage,
)

seeds = st.integers(0, 2**32 - 1)
P0 = projector(ket(0, 2))
P3 = projector(ket(3, 4))


def nullspace_dimension(basis, party):
    """Independent oracle: complex-linear constraints on vec(a), Hermiticity imposed afterwards.

    Solutions of the complex system form a complex space closed under adjoint
    (constraints come in conjugate pairs), so its Hermitian part has real
    dimension equal to the complex dimension.
    """
    acting = basis.alice if party == "A" else basis.bob
    other = basis.bob if party == "A" else basis.alice
    rows = []
    for j in range(len(acting)):
        for k in range(len(acting)):
            if j == k:
                continue
            overlap = np.vdot(other[j], other[k])
            if abs(overlap) > 1e-14:
                rows.append(np.kron(acting[j].conj(), acting[k]) * overlap)
    a = np.array(rows)
    return a.shape[1] - np.linalg.matrix_rank(a, tol=1e-8 * np.linalg.norm(a, 2))


class TestFactorProduct:
    def test_projector_product(self):
        dec = factor_product(tensor_product(P0, P0), 2, 2)
        a, b = dec.terms[0]
        assert_allclose(a, P0, atol=1e-12)
        assert_allclose(b, P0, atol=1e-12)

    def test_identity(self):
        a, b = factor_product(np.eye(4), 2, 2).terms[0]
        assert_allclose(np.trace(a), 1.0)
        assert_allclose(tensor_product(a, b), np.eye(4), atol=1e-12)

    def test_bell_projector(self):
        phi = np.array([1, 0, 0, 1]) / np.sqrt(2)
        s = np.linalg.svd(realign(projector(phi), 2, 2), compute_uv=False)
        assert_allclose(s, [0.5] * 4, atol=1e-12)
        with pytest.raises(NotProduct) as info:
            factor_product(projector(phi), 2, 2)
        assert_allclose(info.value.ratio, 1.0)

    def test_every_bell_element_fails(self):
        for e in bell_measurement().elements:
            assert not is_product(e, 2, 2)

    def test_zero(self):
        with pytest.raises(ZeroOperatorError):
            factor_product(np.zeros((4, 4)), 2, 2)

    @given(seeds, st.integers(1, 4), st.integers(1, 4))
    @settings(max_examples=40, deadline=None)
    def test_reconstructs(self, seed, d_A, d_B):
        rng = rng_from(seed)
        e = tensor_product(random_psd(rng, d_A), random_psd(rng, d_B))
        dec = factor_product(e, d_A, d_B)
        assert_allclose(dec.operator(), e, atol=1e-8)
        assert_allclose(np.trace(dec.terms[0][0]).real, 1.0, atol=1e-12)

    @given(seeds)
    @settings(max_examples=30, deadline=None)
    def test_generic_sums_are_not_products(self, seed):
        rng = rng_from(seed)
        e = sum(tensor_product(random_psd(rng, 2, rank=1), random_psd(rng, 3, rank=1)) for _ in range(2))
        assert not is_product(e, 2, 3)


class TestNonDisturbing:
    def test_trivial(self):
        assert is_non_disturbing(trivial(9), domino_basis())

    def test_peel_off_round(self):
        m = Measurement([tensor_product(np.eye(4) - P3, np.eye(4)), tensor_product(P3, np.eye(4))], ["rest", "3"])
        rep = is_non_disturbing(m, augmented_domino_basis())
        assert rep and rep.worst <= 1e-12

    def test_domino_corner_disturbs(self):
        basis = domino_basis()
        e = projector(np.eye(9)[0])
        rep = is_non_disturbing(Measurement([e, np.eye(9) - e], ["00", "rest"]), basis)
        assert not rep
        assert_allclose(rep.worst, 0.5, atol=1e-12)
        j, k = rep.states
        assert {basis.labels[j], basis.labels[k]} == {"psi2+", "psi2-"}


class TestMuTilde:
    def test_single_term(self):
        mu = example_mu(np.eye(4))
        e = tensor_product(np.diag([0.7, 0.3]), np.diag([0.2, 0.8]))
        assert_allclose(mu_tilde_upper(e, factor_product(e, 2, 2), mu), mu(e))

    def test_identity(self):
        mu = example_mu(np.eye(4))
        dec = ProductDecomposition(((np.eye(2), np.eye(2)),))
        assert_allclose(mu_tilde_upper(np.eye(4), dec, mu), 0.0, atol=1e-15)

    def test_bell_basis_bound(self):
        mu = example_mu(bell_measurement_vectors())
        e = projector(np.eye(4)[0]) + projector(np.eye(4)[3])
        dec = ProductDecomposition(((P0, P0), (np.eye(2) - P0, np.eye(2) - P0)))
        assert mu_tilde_upper(e, dec, mu) >= mu(e) - 1e-12

    def test_bad_decomposition(self):
        with pytest.raises(FactorizationFailed):
            mu_tilde_upper(np.eye(4), ProductDecomposition(((P0, P0),)), example_mu(np.eye(4)))

    @given(seeds, st.integers(2, 4))
    @settings(max_examples=40, deadline=None)
    def test_product_below_any_split(self, seed, pieces):
        rng = rng_from(seed)
        mu = example_mu(computational_basis(2, 3))
        parts = [random_psd(rng, 2) for _ in range(pieces)]
        d = random_psd(rng, 3)
        c = sum(parts)
        dec = ProductDecomposition(tuple((p, d) for p in parts))
        assert mu(tensor_product(c, d)) <= mu_tilde_upper(tensor_product(c, d), dec, mu) + 1e-9


def bell_measurement_vectors():
    s = 1 / np.sqrt(2)
    return np.array([[s, 0, 0, s], [s, 0, 0, -s], [0, s, s, 0], [0, s, -s, 0]])


class TestSepToProduct:
    def test_single_terms_unchanged(self):
        m = von_neumann(computational_basis(2, 2))
        fine, _ = sep_to_product_stage(m, [factor_product(e, 2, 2) for e in m.elements])
        for a, b in zip(fine.elements, m.elements):
            assert_allclose(a, b, atol=1e-12)

    def test_two_term_element(self):
        sep = projector(np.eye(4)[0]) + projector(np.eye(4)[3])
        m = Measurement([sep, np.eye(4) - sep], ["sep", "rest"], 2, 2)
        decs = [ProductDecomposition(((P0, P0), (np.eye(2) - P0, np.eye(2) - P0))),
                ProductDecomposition(((P0, np.eye(2) - P0), (np.eye(2) - P0, P0)))]
        fine, cmap = sep_to_product_stage(m, decs)
        assert len(fine) == 4 and fine.labels[0] == "sep/0"
        back = coarse_grain(fine, cmap)
        for a, b in zip(back.elements, m.elements):
            assert_allclose(a, b, atol=1e-10)
        assert cmap.labels == ("sep", "rest")

    def test_bad_decomposition(self):
        m = von_neumann(computational_basis(2, 2))
        with pytest.raises(FactorizationFailed):
            sep_to_product_stage(m, [ProductDecomposition(((np.eye(2), np.eye(2)),))] * 4)


class TestExtraction:
    def test_identity_stage_is_trivial(self):
        basis = domino_basis()
        stage = Measurement([np.eye(9) / 3] * 3, ["a", "b", "c"], 3, 3)
        ex = extract_local_nondisturbing(stage, basis, example_mu(basis), 1 / 72)
        assert ex.trivial and ex.party == "A" and len(ex.measurement) == 1

    def test_augmented_domino_pipeline(self):
        basis = augmented_domino_basis()
        mu, mu0 = example_mu(basis), threshold_example_mu(16).mu0
        tree = peel_off_tree(True)
        interp = interpolate_protocol(tree, peel_off_completion(tree, basis), mu, mu0, 1 / 480, von_neumann(basis))
        ex = extract_local_nondisturbing(interp.result.m1, basis, mu, mu0)
        assert not ex.trivial and ex.party == "A"
        projectors = sorted(ex.measurement.elements, key=lambda p: np.trace(p).real)
        assert_allclose(projectors[0], P3, atol=1e-10)
        assert_allclose(projectors[1], np.eye(4) - P3, atol=1e-10)
        assert min(ex.progress_values) >= 1 / 240 - 1e-9
        lifted = ex.lifted(4, 4)
        assert is_non_disturbing(lifted, basis)
        for e in lifted.elements:
            weights = np.einsum("ki,ij,kj->k", basis.vectors.conj(), e, basis.vectors).real
            assert np.min(weights) <= 1e-12  # annihilates a basis state

    def test_computational(self):
        basis = computational_basis(2, 2)
        mu = example_mu(basis)
        stage = Measurement([tensor_product(np.diag([0.6, 0.4]), np.eye(2)) / 2,
                             tensor_product(np.diag([0.4, 0.6]), np.eye(2)) / 2], ["x", "y"], 2, 2)
        ex = extract_local_nondisturbing(stage, basis, mu, 1 / 12)
        assert ex.party == "A" and not ex.trivial
        assert_allclose(ex.measurement.elements[0], P0, atol=1e-12)

    def test_bob_used_when_alice_is_trivial(self):
        basis = computational_basis(2, 2)
        stage = Measurement([tensor_product(np.eye(2), np.diag([0.6, 0.4])) / 2,
                             tensor_product(np.eye(2), np.diag([0.4, 0.6])) / 2], ["x", "y"], 2, 2)
        assert extract_local_nondisturbing(stage, basis, example_mu(basis), 1 / 12).party == "B"

    def test_disturbing_stage(self):
        basis = domino_basis()
        e = projector(np.eye(9)[0])
        with pytest.raises(NonDisturbanceViolated):
            extract_local_nondisturbing(Measurement([e, np.eye(9) - e], d_A=3, d_B=3), basis, example_mu(basis), 1 / 72)

    def test_zero_weight_raises_threshold_hit(self):
        basis = computational_basis(2, 2)
        stage = Measurement([tensor_product(P0, np.eye(2)), tensor_product(np.eye(2) - P0, np.eye(2))], d_A=2, d_B=2)
        with pytest.raises(ThresholdHit):
            extract_local_nondisturbing(stage, basis, example_mu(basis), 1 / 12)

    def test_non_product_stage(self):
        basis = computational_basis(2, 2)
        sep = 0.5 * (projector(np.eye(4)[0]) + projector(np.eye(4)[3])) + 0.25 * np.eye(4)
        stage = Measurement([sep, np.eye(4) - sep], d_A=2, d_B=2)
        with pytest.raises(FactorizationFailed):
            extract_local_nondisturbing(stage, basis, example_mu(basis), 1 / 12)


class TestDiagonalitySpace:
    def test_computational(self):
        space = local_diagonality_space(computational_basis(2, 2), "alice")
        assert space.dimension == 2
        assert in_span(space, np.diag([0.3, 0.9])) and not in_span(space, np.array([[0, 1], [1, 0]]))

    @pytest.mark.parametrize("party", ["A", "B"])
    def test_domino(self, party):
        space = local_diagonality_space(domino_basis(), party)
        assert space.dimension == 1
        assert in_span(space, identity(3))

    def test_augmented_domino(self):
        space = local_diagonality_space(augmented_domino_basis(), "A")
        assert space.dimension == 2
        assert in_span(space, P3) and in_span(space, identity(4))
        assert not in_span(space, projector(ket(0, 4)))

    @pytest.mark.parametrize("name", ["domino", "augmented", "computational"])
    @pytest.mark.parametrize("party", ["A", "B"])
    def test_matches_complex_nullspace_oracle(self, name, party):
        basis = {"domino": domino_basis, "augmented": augmented_domino_basis,
                 "computational": lambda: computational_basis(3, 2)}[name]()
        space = local_diagonality_space(basis, party)
        assert space.dimension == nullspace_dimension(basis, space.party)
        assert in_span(space, identity(basis.d_A if space.party == "A" else basis.d_B))
