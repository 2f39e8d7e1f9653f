import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st

from qjensen.calculus import (
    MECPreconditionError,
    SuperOperator,
    apply_function,
    divided_difference,
    divided_difference_table,
    finite_diff_directional,
    frechet_apply,
    from_coords,
    superop_invert,
    superop_matrix,
    to_coords,
    trace_function,
)
from qjensen.catalog import get_generator
from qjensen.hermitian import DomainError, eigendecompose, hs_inner, random_hermitian, random_pd

from conftest import frob

QUAD = get_generator("quadratic")
XLOGX = get_generator("xlogx")
P15 = get_generator("power:1.5")
IDENT = get_generator("affine:1,0")
seeds = st.integers(0, 2**32 - 1)
smooth = ["quadratic", "xlogx", "power:1.5", "power:3", "exp"]


class TestDividedDifference:
    def test_polynomial(self):
        assert divided_difference(QUAD.f, QUAD.f1, 1.0, 3.0) == pytest.approx(4.0, rel=1e-15)

    def test_diagonal_is_derivative(self):
        assert divided_difference(QUAD.f, QUAD.f1, 2.0, 2.0) == 4.0

    def test_near_degenerate_against_extended_precision(self):
        x, y = 2.0, 2.0 + 1e-9
        mpmath.mp.dps = 50
        X, Y = mpmath.mpf(x), mpmath.mpf(y)
        exact = float((X * mpmath.log(X) - Y * mpmath.log(Y)) / (X - Y))
        assert exact == pytest.approx(1.693147180809945, rel=1e-15)
        got = divided_difference(XLOGX.f, XLOGX.f1, x, y)
        assert got == pytest.approx(exact, rel=1e-9)

    @pytest.mark.parametrize("x,y", [(0.0, 1.0), (-1.0, 2.0)])
    def test_domain(self, x, y):
        with pytest.raises(DomainError):
            divided_difference(XLOGX.f, XLOGX.f1, x, y)

    @pytest.mark.parametrize("tau", [1e-9, 1e-7, 1e-5])
    def test_tau_sensitivity(self, tau):
        # the midpoint fallback error is O(|x - y|^2); any sane tau agrees to 1e-9
        lam = np.array([1.0, 1.0 + 3e-8, 1.0 + 5e-6, 2.5])
        ref = divided_difference_table(XLOGX.f, XLOGX.f1, lam, tau=1e-7)
        got = divided_difference_table(XLOGX.f, XLOGX.f1, lam, tau=tau)
        np.testing.assert_allclose(got, ref, rtol=1e-8)

    def test_table_matches_scalar(self):
        lam = np.array([0.3, 1.1, 1.1, 4.0])
        L = divided_difference_table(P15.f, P15.f1, lam)
        for j in range(4):
            for k in range(4):
                assert L[j, k] == pytest.approx(
                    divided_difference(P15.f, P15.f1, lam[j], lam[k]), rel=1e-14)


class TestApplyFunction:
    def test_identity_map(self):
        A = random_pd(3, 0.2, 5.0, 1)
        np.testing.assert_allclose(apply_function(IDENT, A), A, atol=1e-13)

    def test_square(self):
        np.testing.assert_allclose(apply_function(QUAD, [[2, 1], [1, 2]]), [[5, 4], [4, 5]],
                                   atol=1e-13)

    def test_xlogx_identity(self):
        np.testing.assert_allclose(apply_function(XLOGX, np.eye(3)), 0, atol=1e-15)

    def test_zero_eigenvalue_uses_extension(self):
        np.testing.assert_allclose(apply_function(XLOGX, np.diag([0.0, 1.0])), 0, atol=1e-15)
        exp = get_generator("exp")
        np.testing.assert_allclose(apply_function(exp, np.zeros((2, 2))), np.eye(2), atol=1e-15)

    def test_negative_eigenvalue(self):
        with pytest.raises(DomainError) as info:
            apply_function(XLOGX, np.diag([-0.5, 1.0]))
        assert info.value.eigenvalue == pytest.approx(-0.5)

    def test_hermitian_output(self):
        R = apply_function(P15, random_pd(4, 0.2, 5.0, 2))
        np.testing.assert_array_equal(R, R.conj().T)


class TestTraceFunction:
    def test_examples(self):
        assert trace_function(QUAD, np.diag([1.0, 2.0])) == 5.0
        assert trace_function(XLOGX, np.eye(4)) == 0.0

    @pytest.mark.parametrize("seed", range(10))
    def test_against_eigenvalue_sum(self, seed):
        A = random_pd(4, 0.2, 5.0, seed)
        w = np.linalg.eigvalsh(A)
        oracle = sum(x * np.log(x) for x in w)
        assert trace_function(XLOGX, A) == pytest.approx(oracle, rel=1e-12)
        assert trace_function(XLOGX, A) == pytest.approx(
            np.trace(apply_function(XLOGX, A)).real, rel=1e-12)


class TestFrechet:
    def test_scalar_base_point(self):
        B = random_hermitian(3, 1.0, 5)
        for name in smooth:
            g = get_generator(name)
            np.testing.assert_allclose(frechet_apply(g, 1.7 * np.eye(3), B),
                                       g.f1(1.7) * B, atol=1e-12)

    def test_square_is_anticommutator(self):
        A, B = random_pd(4, 0.2, 5.0, 6), random_hermitian(4, 1.0, 7)
        np.testing.assert_allclose(frechet_apply(QUAD, A, B), A @ B + B @ A, atol=1e-12)

    @pytest.mark.parametrize("name", ["xlogx", "power:1.5", "exp"])
    def test_central_difference_ladder(self, name):
        g = get_generator(name)
        A, B = random_pd(3, 0.5, 3.0, 8), random_hermitian(3, 1.0, 9)
        D = frechet_apply(g, A, B)
        errs = [frob(finite_diff_directional(g, A, B, t) - D) for t in (1e-2, 1e-3)]
        assert errs[1] < errs[0] / 50

    def test_finite_difference_linear_exact(self):
        A, B = random_pd(3, 0.5, 3.0, 8), random_hermitian(3, 0.1, 9)
        lin = get_generator("affine:2.5,1")
        for t in (0.5, 1e-3):
            np.testing.assert_allclose(finite_diff_directional(lin, A, B, t),
                                       frechet_apply(lin, A, B), atol=1e-10)

    def test_finite_difference_quadratic_exact(self):
        A, B = random_pd(3, 0.5, 3.0, 8), random_hermitian(3, 0.1, 9)
        for t in (0.5, 1e-2):
            np.testing.assert_allclose(finite_diff_directional(QUAD, A, B, t), A @ B + B @ A,
                                       atol=1e-11)

    def test_finite_difference_leaves_cone(self):
        with pytest.raises(DomainError):
            finite_diff_directional(XLOGX, np.eye(2), np.eye(2), 2.0)

    def test_domain(self):
        with pytest.raises(DomainError):
            frechet_apply(XLOGX, np.diag([0.0, 1.0]), np.eye(2))

    @given(seeds, st.integers(1, 5), st.sampled_from(smooth), st.floats(-2, 2), st.floats(-2, 2))
    def test_linear_in_direction(self, seed, n, name, a, b):
        g = get_generator(name)
        A = random_pd(n, 0.2, 5.0, [seed, 0])
        B1, B2 = random_hermitian(n, 1.0, [seed, 1]), random_hermitian(n, 1.0, [seed, 2])
        lhs = frechet_apply(g, A, a * B1 + b * B2)
        rhs = a * frechet_apply(g, A, B1) + b * frechet_apply(g, A, B2)
        assert frob(lhs - rhs) <= 1e-10 * (1 + frob(lhs))

    @given(seeds, st.integers(1, 5), st.sampled_from(smooth))
    def test_self_adjoint(self, seed, n, name):
        g = get_generator(name)
        A = random_pd(n, 0.2, 5.0, [seed, 0])
        B, C = random_hermitian(n, 1.0, [seed, 1]), random_hermitian(n, 1.0, [seed, 2])
        lhs = hs_inner(frechet_apply(g, A, B), C)
        assert lhs == pytest.approx(hs_inner(B, frechet_apply(g, A, C)), abs=1e-10 * (1 + abs(lhs)))

    @given(seeds, st.integers(1, 5), st.sampled_from(smooth))
    def test_commuting_case(self, seed, n, name):
        g = get_generator(name)
        A = random_pd(n, 0.2, 5.0, [seed, 0])
        _, U = eigendecompose(A)
        B = (U * np.random.default_rng(seed).standard_normal(n)) @ U.conj().T
        expected = apply_function(g.derivative(), A) @ B
        assert frob(frechet_apply(g, A, B) - expected) <= 1e-10 * (1 + frob(expected))


class TestSuperOperator:
    def test_quadratic_is_twice_identity(self):
        for n in (1, 2, 4):
            S = superop_matrix(QUAD, random_pd(n, 0.2, 5.0, n))
            np.testing.assert_allclose(S.matrix, 2 * np.eye(n * n), atol=1e-12)

    def test_scalar(self):
        S = superop_matrix(XLOGX, [[2.5]])
        assert S.matrix.shape == (1, 1)
        assert S.matrix[0, 0] == pytest.approx(1 / 2.5, rel=1e-15)

    def test_spectrum_is_divided_difference_multiset(self):
        A = random_pd(3, 0.2, 5.0, 21)
        w = np.linalg.eigvalsh(A)
        table = [divided_difference(P15.f1, P15.f2, x, y) for x in w for y in w]
        S = superop_matrix(P15, A)
        np.testing.assert_allclose(S.eigenvalues(), np.sort(table), rtol=1e-9)

    @pytest.mark.parametrize("name", smooth)
    def test_action_matches_frechet(self, name):
        g = get_generator(name)
        A, X = random_pd(3, 0.2, 5.0, 30), random_hermitian(3, 1.0, 31)
        S = superop_matrix(g, A)
        np.testing.assert_allclose(S.apply(X), frechet_apply(g.derivative(), A, X), atol=1e-10)
        np.testing.assert_allclose(S.matrix, S.matrix.T, atol=1e-10)
        assert S.eigenvalues()[0] > 0

    def test_coordinates_round_trip(self):
        X = random_hermitian(4, 1.0, 3)
        np.testing.assert_allclose(from_coords(to_coords(X)), X, atol=1e-14)

    def test_invert(self):
        S = SuperOperator(2, 2 * np.eye(4), np.eye(2), "two")
        np.testing.assert_allclose(superop_invert(S).matrix, 0.5 * np.eye(4))
        T = superop_matrix(XLOGX, [[2.5]])
        assert superop_invert(T).matrix[0, 0] == pytest.approx(2.5, rel=1e-14)

    @pytest.mark.parametrize("seed", range(20))
    def test_invert_composes_to_identity(self, seed):
        n = 1 + seed % 4
        S = superop_matrix(XLOGX, random_pd(n, 0.2, 5.0, seed))
        np.testing.assert_allclose(S.matrix @ superop_invert(S).matrix, np.eye(n * n), atol=1e-8)

    def test_singular_rejected(self):
        S = superop_matrix(get_generator("affine:1,0"), np.eye(2))
        with pytest.raises(MECPreconditionError):
            superop_invert(S)
