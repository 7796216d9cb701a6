import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from urbancp.tensor_core import (
    FactorSet,
    cp_reconstruct,
    fold,
    frobenius_norm,
    hadamard,
    khatri_rao,
    kronecker,
    matricize,
    pseudo_inverse,
    unvec,
    vec,
)


def random_factors(rng, dims, rank):
    return FactorSet(
        rng.standard_normal((dims[0], rank)),
        rng.standard_normal((dims[1], rank)),
        rng.standard_normal((dims[2], rank)),
    )


def cp_brute_force(A, B, C):
    """Triple-loop CP reconstruction, the independent oracle."""
    I, J, K = A.shape[0], B.shape[0], C.shape[0]
    out = np.zeros((I, J, K))
    for i in range(I):
        for j in range(J):
            for k in range(K):
                out[i, j, k] = sum(
                    A[i, r] * B[j, r] * C[k, r] for r in range(A.shape[1])
                )
    return out


class TestHadamard:
    def test_identity_and_annihilator(self):
        rng = np.random.default_rng(0)
        x = rng.random((3, 4, 5))
        assert np.array_equal(hadamard(np.ones_like(x), x), x)
        assert np.array_equal(hadamard(x, np.zeros_like(x)), np.zeros_like(x))

    def test_elementwise_values(self):
        twos = np.full((2, 2, 2), 2.0)
        threes = np.full((2, 2, 2), 3.0)
        assert np.array_equal(hadamard(twos, threes), np.full((2, 2, 2), 6.0))

    def test_dimension_mismatch_rejected(self):
        with pytest.raises(ValueError):
            hadamard(np.ones((2, 2, 2)), np.ones((2, 2, 3)))


class TestKronecker:
    def test_identity_blocks(self):
        b = np.array([[1.0, 2.0], [3.0, 4.0]])
        out = kronecker(np.eye(2), b)
        assert out.shape == (4, 4)
        assert np.array_equal(out[:2, :2], b)
        assert np.array_equal(out[2:, 2:], b)
        assert np.array_equal(out[:2, 2:], np.zeros((2, 2)))

    def test_hand_example(self):
        out = kronecker(np.array([[1.0, 2.0]]), np.array([[3.0], [4.0]]))
        assert np.array_equal(out, np.array([[3.0, 6.0], [4.0, 8.0]]))

    def test_scalar_case(self):
        b = np.arange(6.0).reshape(2, 3)
        assert np.array_equal(kronecker(np.array([[2.5]]), b), 2.5 * b)


class TestKhatriRao:
    def test_single_column_is_kronecker(self):
        rng = np.random.default_rng(1)
        a, b = rng.random((4, 1)), rng.random((3, 1))
        assert np.allclose(khatri_rao(a, b), kronecker(a, b))

    def test_hand_example(self):
        a = np.array([[1.0, 0.0], [0.0, 1.0]])
        b = np.ones((2, 2))
        expected = np.array([[1.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.0, 1.0]])
        assert np.array_equal(khatri_rao(a, b), expected)

    def test_columns_match_kronecker_oracle(self):
        rng = np.random.default_rng(2)
        a, b = rng.random((3, 2)), rng.random((3, 2))
        out = khatri_rao(a, b)
        assert out.shape == (9, 2)
        for r in range(2):
            col = kronecker(a[:, r : r + 1], b[:, r : r + 1]).ravel()
            assert np.allclose(out[:, r], col)

    def test_column_mismatch_rejected(self):
        with pytest.raises(ValueError):
            khatri_rao(np.ones((2, 2)), np.ones((2, 3)))


class TestMatricizeFold:
    def test_cp_unfolding_identity_mode1(self):
        rng = np.random.default_rng(3)
        f = random_factors(rng, (4, 4, 6), 2)
        x = cp_reconstruct(f)
        assert np.allclose(matricize(x, 1), f.A @ khatri_rao(f.C, f.B).T, atol=1e-12)

    def test_cp_unfolding_identities_all_modes(self):
        rng = np.random.default_rng(4)
        f = random_factors(rng, (4, 4, 6), 3)
        x = cp_reconstruct(f)
        pairs = {
            1: f.A @ khatri_rao(f.C, f.B).T,
            2: f.B @ khatri_rao(f.C, f.A).T,
            3: f.C @ khatri_rao(f.B, f.A).T,
        }
        for mode, expected in pairs.items():
            got = matricize(x, mode)
            rel = np.linalg.norm(got - expected) / np.linalg.norm(expected)
            assert rel < 1e-10

    def test_round_trip_all_modes(self):
        rng = np.random.default_rng(5)
        t = rng.random((3, 4, 5))
        for mode in (1, 2, 3):
            assert np.array_equal(fold(matricize(t, mode), mode, t.shape), t)

    def test_mode1_unfolding_is_a_bijection_of_entries(self):
        t = np.arange(1.0, 9.0).reshape(2, 2, 2)
        m = matricize(t, 1)
        assert m.shape == (2, 4)
        assert sorted(m.ravel().tolist()) == list(range(1, 9))

    def test_fold_of_zero_matrix(self):
        assert np.array_equal(fold(np.zeros((3, 20)), 1, (3, 4, 5)), np.zeros((3, 4, 5)))

    def test_fold_cp_identity(self):
        rng = np.random.default_rng(6)
        f = random_factors(rng, (3, 3, 4), 2)
        folded = fold(f.A @ khatri_rao(f.C, f.B).T, 1, (3, 3, 4))
        assert np.allclose(folded, cp_reconstruct(f), atol=1e-12)

    def test_invalid_mode_rejected(self):
        with pytest.raises(ValueError):
            matricize(np.ones((2, 2, 2)), 0)
        with pytest.raises(ValueError):
            fold(np.ones((2, 4)), 4, (2, 2, 2))

    def test_fold_shape_mismatch_rejected(self):
        with pytest.raises(ValueError):
            fold(np.ones((2, 5)), 1, (2, 2, 2))


class TestVec:
    def test_column_stacking(self):
        m = np.array([[1.0, 3.0], [2.0, 4.0]])
        assert np.array_equal(vec(m), np.array([1.0, 2.0, 3.0, 4.0]))

    def test_vec_axb_identity(self):
        rng = np.random.default_rng(7)
        a, x, b = rng.random((2, 3)), rng.random((3, 2)), rng.random((2, 2))
        assert np.allclose(vec(a @ x @ b), kronecker(b.T, a) @ vec(x), atol=1e-12)

    def test_vec_hadamard_identity(self):
        rng = np.random.default_rng(8)
        a, b = rng.random((3, 4)), rng.random((3, 4))
        assert np.allclose(vec(a * b), vec(a) * vec(b))

    def test_unvec_round_trip(self):
        rng = np.random.default_rng(9)
        m = rng.random((4, 5))
        assert np.array_equal(unvec(vec(m), 4, 5), m)

    def test_unvec_length_mismatch_rejected(self):
        with pytest.raises(ValueError):
            unvec(np.ones(7), 2, 3)


class TestCpReconstruct:
    def test_all_ones_rank_one(self):
        f = FactorSet(np.ones((2, 1)), np.ones((2, 1)), np.ones((4, 1)))
        assert np.array_equal(cp_reconstruct(f), np.ones((2, 2, 4)))

    def test_hand_outer_product(self):
        f = FactorSet(
            np.array([[1.0], [2.0]]), np.array([[1.0], [0.0]]), np.array([[3.0]])
        )
        out = cp_reconstruct(f)
        expected = np.zeros((2, 2, 1))
        expected[0, 0, 0] = 3.0
        expected[1, 0, 0] = 6.0
        assert np.array_equal(out, expected)

    def test_matches_brute_force(self):
        rng = np.random.default_rng(10)
        f = random_factors(rng, (4, 4, 6), 3)
        assert np.allclose(cp_reconstruct(f), cp_brute_force(f.A, f.B, f.C), atol=1e-12)

    def test_shape_mismatch_rejected(self):
        with pytest.raises(ValueError):
            FactorSet(np.ones((2, 2)), np.ones((2, 3)), np.ones((4, 2)))
        with pytest.raises(ValueError):
            FactorSet(np.ones((2, 2)), np.ones((3, 2)), np.ones((4, 2)))


class TestFrobeniusNorm:
    def test_zero_tensor(self):
        assert frobenius_norm(np.zeros((2, 3, 4))) == 0.0

    def test_all_ones(self):
        assert frobenius_norm(np.ones((2, 2, 2))) == pytest.approx(np.sqrt(8.0))

    def test_matches_flat_loop(self):
        rng = np.random.default_rng(11)
        t = rng.standard_normal((3, 4, 5))
        expected = np.sqrt(sum(v * v for v in t.ravel().tolist()))
        assert frobenius_norm(t) == pytest.approx(expected, rel=1e-12)


def penrose_conditions_hold(m, p, tol):
    scale = max(np.linalg.norm(m), 1.0)
    return (
        np.linalg.norm(m @ p @ m - m) <= tol * scale
        and np.linalg.norm(p @ m @ p - p) <= tol * scale
        and np.linalg.norm((m @ p).T - m @ p) <= tol * scale
        and np.linalg.norm((p @ m).T - p @ m) <= tol * scale
    )


class TestPseudoInverse:
    def test_identity(self):
        assert np.allclose(pseudo_inverse(np.eye(4)), np.eye(4))

    def test_singular_diagonal(self):
        out = pseudo_inverse(np.diag([2.0, 0.0]))
        assert np.allclose(out, np.diag([0.5, 0.0]))

    def test_penrose_on_rank_deficient(self):
        rng = np.random.default_rng(12)
        base = rng.standard_normal((6, 2))
        m = base @ rng.standard_normal((2, 4))  # rank 2, 6x4
        p = pseudo_inverse(m)
        assert penrose_conditions_hold(m, p, 1e-8)

    def test_hermitian_path_matches(self):
        rng = np.random.default_rng(13)
        a = rng.standard_normal((5, 3))
        s = a @ a.T  # symmetric PSD, rank 3
        assert np.allclose(pseudo_inverse(s, hermitian=True), pseudo_inverse(s), atol=1e-10)
        assert penrose_conditions_hold(s, pseudo_inverse(s, hermitian=True), 1e-8)


small_dims = st.tuples(
    st.integers(min_value=2, max_value=4),
    st.integers(min_value=2, max_value=4),
    st.integers(min_value=2, max_value=5),
)


@settings(max_examples=25, deadline=None)
@given(dims=small_dims, rank=st.integers(min_value=1, max_value=3), seed=st.integers(0, 2**31))
def test_property_unfolding_identities(dims, rank, seed):
    rng = np.random.default_rng(seed)
    dims = (dims[0], dims[0], dims[2])  # A and B share the region count
    f = random_factors(rng, dims, rank)
    x = cp_reconstruct(f)
    for mode, expected in (
        (1, f.A @ khatri_rao(f.C, f.B).T),
        (2, f.B @ khatri_rao(f.C, f.A).T),
        (3, f.C @ khatri_rao(f.B, f.A).T),
    ):
        denom = max(np.linalg.norm(expected), 1e-12)
        assert np.linalg.norm(matricize(x, mode) - expected) / denom < 1e-10


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**31))
def test_property_round_trip_and_vec(seed):
    rng = np.random.default_rng(seed)
    t = rng.standard_normal((3, 4, 5))
    for mode in (1, 2, 3):
        assert np.array_equal(fold(matricize(t, mode), mode, t.shape), t)
    m = rng.standard_normal((4, 3))
    assert np.array_equal(unvec(vec(m), 4, 3), m)
