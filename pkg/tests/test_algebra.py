import numpy as np
import pytest

from superrad.algebra import (
    LEVELS,
    build_three_level_basis,
    build_two_level_basis,
    ladder_operators,
    transfer_operator,
    verify_algebra,
)
from superrad.product_space import (
    single_atom_sum,
    single_atom_transfer,
    symmetric_embedding,
)

ALGEBRA_TOL = 1e-12


class TestBases:
    def test_two_level_dimensions(self):
        assert build_two_level_basis(1).dim == 2
        assert build_two_level_basis(20).dim == 21  # N = 20 ensemble

    def test_two_level_label_order(self):
        assert build_two_level_basis(3).state_labels == (0, 1, 2, 3)

    def test_three_level_dimensions(self):
        assert build_three_level_basis(1).dim == 3
        assert build_three_level_basis(2).dim == 6
        # Formula (N+1)(N+2)/2 against explicit enumeration.
        basis = build_three_level_basis(20)
        count = sum(1 for ns in range(21) for ne in range(21 - ns))
        assert basis.dim == count == 231

    def test_three_level_labels_enumerate_simplex(self):
        basis = build_three_level_basis(4)
        assert len(set(basis.state_labels)) == basis.dim
        assert all(sum(lab) == 4 for lab in basis.state_labels)
        assert basis.state_labels == tuple(sorted(basis.state_labels))

    def test_rejects_zero_atoms(self):
        with pytest.raises(ValueError):
            build_two_level_basis(0)
        with pytest.raises(ValueError):
            build_three_level_basis(0)


class TestLadderOperators:
    def test_single_atom_lowering(self):
        jm = ladder_operators(build_two_level_basis(1)).jm.matrix
        assert np.array_equal(jm, np.array([[0, 1], [0, 0]], dtype=complex))

    def test_two_atom_amplitude(self):
        # Jm |j=1, m=1> = sqrt(2) |m=0>; oracle = symmetrized two-atom product space.
        basis = build_two_level_basis(2)
        jm = ladder_operators(basis).jm.matrix
        v = symmetric_embedding(basis)
        jm_oracle = v.conj().T @ single_atom_sum(basis, single_atom_transfer(2, "g", "e")) @ v
        assert np.max(np.abs(jm - jm_oracle)) < ALGEBRA_TOL
        assert abs(jm[1, 2] - np.sqrt(2)) < ALGEBRA_TOL

    def test_hermiticity_relations(self):
        ops = ladder_operators(build_two_level_basis(7))
        assert np.array_equal(ops.jp.matrix, ops.jm.matrix.conj().T)
        for op in (ops.jx, ops.jy, ops.jz):
            assert np.max(np.abs(op.matrix - op.matrix.conj().T)) == 0.0

    def test_ladder_entries_real_nonnegative(self):
        for n in (1, 5, 12):
            ops = ladder_operators(build_two_level_basis(n))
            for mat in (ops.jp.matrix, ops.jm.matrix):
                assert np.all(mat.imag == 0)
                assert np.all(mat.real >= 0)

    def test_rejects_three_level_basis(self):
        with pytest.raises(ValueError):
            ladder_operators(build_three_level_basis(2))

    @pytest.mark.parametrize("n", range(1, 31))
    def test_commutators_exact(self, n):
        rep = verify_algebra(build_two_level_basis(n))
        assert rep["[Jz,Jp]-Jp"] <= ALGEBRA_TOL
        assert rep["[Jp,Jm]-2Jz"] <= ALGEBRA_TOL

    def test_casimir_n2_is_spin_one(self):
        basis = build_two_level_basis(2)
        ops = ladder_operators(basis)
        casimir = sum(op.matrix @ op.matrix for op in (ops.jx, ops.jy, ops.jz))
        assert np.max(np.abs(casimir - 2.0 * np.eye(3))) < ALGEBRA_TOL  # j(j+1), j=1


class TestTransferOperators:
    def test_single_atom_transfer(self):
        basis = build_three_level_basis(1)
        j_es = transfer_operator(basis, "e", "s").matrix
        i_s = basis.label_index((1, 0, 0))
        i_e = basis.label_index((0, 1, 0))
        assert j_es[i_e, i_s] == 1.0
        assert np.count_nonzero(j_es) == 1

    def test_two_atom_amplitude_oracle(self):
        # J_ge on (0,2,0) -> sqrt(2) (0,1,1); oracle = symmetrized product space.
        basis = build_three_level_basis(2)
        j_ge = transfer_operator(basis, "g", "e").matrix
        v = symmetric_embedding(basis)
        oracle = v.conj().T @ single_atom_sum(basis, single_atom_transfer(3, "g", "e")) @ v
        assert np.max(np.abs(j_ge - oracle)) < ALGEBRA_TOL
        amp = j_ge[basis.label_index((0, 1, 1)), basis.label_index((0, 2, 0))]
        assert abs(amp - np.sqrt(2)) < ALGEBRA_TOL

    @pytest.mark.parametrize("n", range(1, 11))
    def test_occupations_sum_to_n(self, n):
        basis = build_three_level_basis(n)
        total = sum(transfer_operator(basis, a, a).matrix for a in LEVELS)
        assert np.max(np.abs(total - n * np.eye(basis.dim))) == 0.0

    def test_adjoint_pairs_exact(self):
        basis = build_three_level_basis(6)
        for a in LEVELS:
            for b in LEVELS:
                ab = transfer_operator(basis, a, b).matrix
                ba = transfer_operator(basis, b, a).matrix
                assert np.array_equal(ab, ba.conj().T)

    def test_entries_real_nonnegative(self):
        basis = build_three_level_basis(5)
        for a in LEVELS:
            for b in LEVELS:
                mat = transfer_operator(basis, a, b).matrix
                assert np.all(mat.imag == 0)
                assert np.all(mat.real >= 0)

    def test_rejects_bad_levels(self):
        basis = build_three_level_basis(2)
        with pytest.raises(ValueError):
            transfer_operator(basis, "x", "e")
        with pytest.raises(ValueError):
            transfer_operator(build_two_level_basis(2), "g", "e")

    @pytest.mark.parametrize("n", range(1, 11))
    def test_three_level_commutators(self, n):
        rep = verify_algebra(build_three_level_basis(n))
        assert rep["max"] <= ALGEBRA_TOL


class TestProductSpaceOracle:
    """Every collective operator equals the symmetric projection of the
    summed single-atom operator, entrywise, for N <= 3."""

    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_two_level_operators(self, n):
        basis = build_two_level_basis(n)
        v = symmetric_embedding(basis)
        ops = ladder_operators(basis)
        sz = single_atom_transfer(2, "e", "e") - single_atom_transfer(2, "g", "g")
        pairs = [
            (ops.jm.matrix, single_atom_transfer(2, "g", "e")),
            (ops.jp.matrix, single_atom_transfer(2, "e", "g")),
            (ops.jz.matrix, sz / 2),
        ]
        for collective, one_atom in pairs:
            oracle = v.conj().T @ single_atom_sum(basis, one_atom) @ v
            assert np.max(np.abs(collective - oracle)) < ALGEBRA_TOL

    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_three_level_operators(self, n):
        basis = build_three_level_basis(n)
        v = symmetric_embedding(basis)
        for a in LEVELS:
            for b in LEVELS:
                collective = transfer_operator(basis, a, b).matrix
                oracle = v.conj().T @ single_atom_sum(
                    basis, single_atom_transfer(3, a, b)
                ) @ v
                assert np.max(np.abs(collective - oracle)) < ALGEBRA_TOL

    def test_embedding_is_isometry(self):
        for basis in (build_two_level_basis(3), build_three_level_basis(3)):
            v = symmetric_embedding(basis)
            assert np.max(np.abs(v.conj().T @ v - np.eye(basis.dim))) < ALGEBRA_TOL
