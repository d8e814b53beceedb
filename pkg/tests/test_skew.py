import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_skew, random_valid_kernel
from pfpp.errors import (
    ConditioningError,
    NoLKernelError,
    NotSkewError,
    ShapeError,
    SingularPivotError,
)
from pfpp.skew import (
    SkewMatrix,
    condition,
    kernel_convert,
    pfaffian,
    pfaffian_combinatorial,
    pfaffian_value,
    point_rows,
    skew_cholesky,
    standard_symplectic,
)


def pf_of(A, X):
    r = point_rows(X)
    return pfaffian_value(A[np.ix_(r, r)])


seeds = st.integers(0, 2**32 - 1)


class TestSkewMatrix:
    def test_rejects_asymmetry_beyond_tolerance(self):
        A = np.array([[0.0, 1.0], [-1.0 + 1e-9, 0.0]])
        with pytest.raises(NotSkewError):
            SkewMatrix(A)

    def test_accepts_within_tolerance_and_zeroes_diagonal(self):
        A = np.array([[1e-13, 1.0], [-1.0 + 1e-13, 0.0]])
        S = SkewMatrix(A)
        assert S.array[0, 0] == 0.0
        assert np.array_equal(S.array, -S.array.T)

    def test_odd_order_rejected(self):
        with pytest.raises(ShapeError):
            SkewMatrix(np.zeros((3, 3)))

    def test_binary_round_trip_layout(self, tmp_path, rng):
        S = SkewMatrix(random_skew(rng, 6))
        path = tmp_path / "k.pfk"
        S.save(path)
        raw = path.read_bytes()
        assert raw[:8] == b"PFPPSKW1"
        assert int.from_bytes(raw[8:16], "little") == 3
        assert len(raw) == 16 + 8 * 36
        assert np.frombuffer(raw[16:24], "<f8")[0] == S.array[0, 0]
        assert np.frombuffer(raw[24:32], "<f8")[0] == S.array[0, 1]
        assert SkewMatrix.load(path) == S

    def test_bad_magic(self):
        with pytest.raises(ShapeError):
            SkewMatrix.from_bytes(b"NOTMAGIC" + bytes(8))


class TestCombinatorial:
    def test_standard_symplectic(self):
        assert pfaffian_combinatorial(standard_symplectic(2)) == 1.0

    def test_two_by_two(self):
        assert pfaffian_combinatorial([[0, 0.3], [-0.3, 0]]) == pytest.approx(0.3, abs=0)

    def test_four_by_four_closed_form(self, rng):
        A = random_skew(rng, 4)
        expect = A[0, 1] * A[2, 3] - A[0, 2] * A[1, 3] + A[0, 3] * A[1, 2]
        assert pfaffian_combinatorial(A) == pytest.approx(expect, rel=1e-14)

    def test_six_by_six_fifteen_matchings(self, rng):
        A = random_skew(rng, 6)
        # expansion along the first row: pf(A) = Σ_j (-1)^(j+1) a_0j pf(A without 0, j)
        total = 0.0
        for j in range(1, 6):
            rest = [k for k in range(1, 6) if k != j]
            total += (-1) ** (j + 1) * A[0, j] * pfaffian_combinatorial(A[np.ix_(rest, rest)])
        assert pfaffian_combinatorial(A) == pytest.approx(total, rel=1e-12)

    def test_size_errors(self):
        with pytest.raises(ShapeError):
            pfaffian_combinatorial(np.zeros((3, 3)))
        with pytest.raises(ShapeError):
            pfaffian_combinatorial(np.zeros((14, 14)))


class TestPfaffian:
    @pytest.mark.parametrize("n", [1, 2, 5])
    def test_standard_symplectic(self, n):
        assert pfaffian(standard_symplectic(n)) == (1, 0.0)

    def test_matches_combinatorial_8x8(self, rng):
        A = random_skew(rng, 8)
        assert pfaffian_value(A) == pytest.approx(pfaffian_combinatorial(A), rel=1e-10)

    def test_squared_equals_det_20x20(self, rng):
        A = random_skew(rng, 20)
        sign, la = pfaffian(A)
        s_det, l_det = np.linalg.slogdet(A)
        assert s_det > 0
        assert math.exp(2 * la - l_det) == pytest.approx(1.0, rel=1e-8)

    def test_singular_sentinel(self):
        A = np.zeros((4, 4))
        assert pfaffian(A) == (0, -math.inf)

    def test_log_space_handles_overflow(self):
        A = 1e200 * standard_symplectic(4)
        sign, la = pfaffian(A)
        assert sign == 1 and la == pytest.approx(4 * math.log(1e200), rel=1e-14)

    def test_input_not_mutated(self, rng):
        A = random_skew(rng, 6)
        B = A.copy()
        pfaffian(A)
        assert np.array_equal(A, B)

    @settings(max_examples=40, deadline=None)
    @given(seed=seeds, n=st.integers(1, 4))
    def test_congruence(self, seed, n):
        r = np.random.default_rng(seed)
        A = random_skew(r, 2 * n)
        B = r.standard_normal((2 * n, 2 * n))
        lhs = pfaffian_value(B @ A @ B.T)
        rhs = np.linalg.det(B) * pfaffian_value(A)
        assert lhs == pytest.approx(rhs, rel=1e-8, abs=1e-12)

    @settings(max_examples=40, deadline=None)
    @given(seed=seeds, n=st.integers(1, 10))
    def test_square_is_determinant(self, seed, n):
        A = random_skew(np.random.default_rng(seed), 2 * n)
        assert pfaffian_value(A) ** 2 == pytest.approx(np.linalg.det(A), rel=1e-8)


class TestSkewCholesky:
    def test_identity_for_standard_symplectic(self):
        f = skew_cholesky(standard_symplectic(3))
        assert np.array_equal(f.B, np.eye(6))

    def test_zero_matrix(self):
        f = skew_cholesky(np.zeros((4, 4)))
        assert np.array_equal(f.B, np.zeros((4, 4)))

    def test_reconstruction(self, rng):
        for _ in range(20):
            C = rng.standard_normal((8, 8))
            A = C @ standard_symplectic(4) @ C.T
            f = skew_cholesky(A)
            err = np.max(np.abs(f.B @ standard_symplectic(4) @ f.B.T - A))
            assert err <= 1e-10 * np.max(np.abs(A))

    def test_block_triangular_without_pivoting(self, rng):
        A = random_skew(rng, 8)
        B = skew_cholesky(A).B
        for i in range(4):
            for j in range(i + 1, 4):
                assert np.all(B[2 * i:2 * i + 2, 2 * j:2 * j + 2] == 0)

    def test_singular_pivot(self):
        A = np.zeros((4, 4))
        A[0, 2], A[2, 0] = 1.0, -1.0
        A[1, 3], A[3, 1] = 1.0, -1.0
        with pytest.raises(SingularPivotError):
            skew_cholesky(A)
        f = skew_cholesky(A, pivot=True)
        P = np.eye(4)[f.perm]
        assert np.allclose(f.B @ standard_symplectic(2) @ f.B.T, P @ A @ P.T, atol=1e-14)
        assert f.pfaffian() == pytest.approx(pfaffian_value(A), rel=1e-14)

    @settings(max_examples=30, deadline=None)
    @given(seed=seeds, n=st.integers(1, 6))
    def test_pfaffian_through_factor(self, seed, n):
        A = random_skew(np.random.default_rng(seed), 2 * n)
        assert skew_cholesky(A, pivot=True).pfaffian() == pytest.approx(pfaffian_value(A), rel=1e-10)


class TestKernelConvert:
    def test_zero(self):
        L = kernel_convert(np.zeros((4, 4)), "K_to_L")
        assert np.max(np.abs(L.array)) < 1e-15

    def test_half_symplectic(self):
        J = standard_symplectic(3)
        L = kernel_convert(0.5 * J, "K_to_L")
        assert np.allclose(L.array, J, atol=1e-14)
        assert np.allclose(kernel_convert(J, "L_to_K").array, 0.5 * J, atol=1e-14)

    def test_round_trip(self, rng):
        K = random_valid_kernel(rng, 5)
        back = kernel_convert(kernel_convert(K, "K_to_L"), "L_to_K").array
        assert np.max(np.abs(back - K)) < 1e-8

    def test_no_l_kernel(self):
        with pytest.raises(NoLKernelError):
            kernel_convert(standard_symplectic(2), "K_to_L")

    def test_unknown_direction(self):
        with pytest.raises(ValueError):
            kernel_convert(np.zeros((2, 2)), "sideways")


class TestCondition:
    def test_empty(self, rng):
        K = random_valid_kernel(rng, 4)
        C, rest = condition(K, [], "include")
        assert np.array_equal(C.array, SkewMatrix(K).array) and rest == [0, 1, 2, 3]

    def test_include_pfaffian_identity(self, rng):
        K = random_valid_kernel(rng, 4)
        C, rest = condition(K, [0], "include")
        pY = pf_of(K, [0])
        for mask in range(1, 8):
            X = [i for i in range(3) if mask >> i & 1]
            lhs = pf_of(C.array, X) * pY
            assert lhs == pytest.approx(pf_of(K, [0] + [rest[i] for i in X]), abs=1e-12)

    def test_total_probability(self, rng):
        for _ in range(5):
            K = random_valid_kernel(rng, 4)
            for i in range(4):
                Cin, rest = condition(K, [i], "include")
                Cout, _ = condition(K, [i], "exclude")
                p = pf_of(K, [i])
                for mask in range(1, 8):
                    X = [k for k in range(3) if mask >> k & 1]
                    rhs = pf_of(Cin.array, X) * p + pf_of(Cout.array, X) * (1 - p)
                    assert pf_of(K, [rest[k] for k in X]) == pytest.approx(rhs, abs=1e-10)

    def test_impossible_event(self):
        with pytest.raises(ConditioningError):
            condition(np.zeros((4, 4)), [0], "include")
        with pytest.raises(ConditioningError):
            condition(standard_symplectic(2), [1], "exclude")

    @settings(max_examples=25, deadline=None)
    @given(seed=seeds, m1=st.sampled_from(["include", "exclude"]),
           m2=st.sampled_from(["include", "exclude"]))
    def test_commutes(self, seed, m1, m2):
        K = random_valid_kernel(np.random.default_rng(seed), 5)
        A, _ = condition(K, [1], m1)      # remaining 0, 2, 3, 4
        A, _ = condition(A, [2], m2)      # point 3 has local index 2
        B, _ = condition(K, [3], m2)      # remaining 0, 1, 2, 4
        B, _ = condition(B, [1], m1)      # point 1 has local index 1
        assert np.max(np.abs(A.array - B.array)) < 1e-9
