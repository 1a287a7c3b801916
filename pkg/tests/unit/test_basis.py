"""Tests for the log-Hermite basis and state vectors"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from acsq.core.errors import AccuracyError, BasisMismatchError, DomainError, NumericError
from acsq.hilbert.basis import (
    StateVector,
    completeness_defect,
    exponential_moments,
    gram_stability,
    hermite_derivative_matrix,
    hermite_functions,
    inner_product,
    make_basis,
)


@pytest.fixture(scope="module")
def basis8():
    return make_basis(8)


@pytest.mark.unit
class TestHermiteFunctions:

    def test_ground_state_value(self):
        """h_0(0) = pi^(-1/4)"""
        assert hermite_functions(1, 0.0)[0] == pytest.approx(math.pi ** -0.25)

    def test_shape(self):
        """Output has shape (n,) + y.shape"""
        assert hermite_functions(3, np.linspace(-1, 1, 5)).shape == (3, 5)

    def test_orthonormal_by_scipy_quad(self):
        """int h_3 h_3 dy = 1 and int h_2 h_4 dy = 0"""
        norm, _ = integrate.quad(lambda y: hermite_functions(4, y)[3] ** 2, -np.inf, np.inf)
        cross, _ = integrate.quad(
            lambda y: hermite_functions(5, y)[2] * hermite_functions(5, y)[4], -np.inf, np.inf
        )
        assert norm == pytest.approx(1.0, abs=1e-10)
        assert cross == pytest.approx(0.0, abs=1e-10)

    def test_derivative_matrix_example(self):
        """L for n = 2 matches the ladder relation"""
        expected = np.array([[0.0, math.sqrt(0.5)], [-math.sqrt(0.5), 0.0], [0.0, -1.0]])
        np.testing.assert_allclose(hermite_derivative_matrix(2), expected, atol=1e-15)

    def test_derivative_matrix_against_finite_differences(self):
        """h' = L^T h agrees with a central difference"""
        n = 6
        y = np.linspace(-3.0, 3.0, 13)
        step = 1e-5
        numeric = (hermite_functions(n, y + step) - hermite_functions(n, y - step)) / (2 * step)
        exact = hermite_derivative_matrix(n).T @ hermite_functions(n + 1, y)
        np.testing.assert_allclose(numeric, exact, atol=1e-8)

    def test_exponential_moments_identity_at_zero(self):
        """k = 0 gives the Gram matrix of the Hermite functions"""
        np.testing.assert_allclose(exponential_moments(4, 0.0), np.eye(4), atol=1e-13)

    def test_exponential_moments_ground_state(self):
        """int h_0^2 e^{-2y} dy = e"""
        assert exponential_moments(1, 2.0)[0, 0] == pytest.approx(math.e, rel=1e-13)

    @pytest.mark.parametrize("m,n,k", [(0, 1, 1.0), (2, 3, -0.5), (4, 4, 3.0)])
    def test_exponential_moments_against_quad(self, m, n, k):
        """Entries agree with scipy quadrature"""
        size = max(m, n) + 1
        value, _ = integrate.quad(
            lambda y: hermite_functions(size, y)[m] * hermite_functions(size, y)[n] * math.exp(-k * y),
            -np.inf,
            np.inf,
        )
        assert exponential_moments(size, k)[m, n] == pytest.approx(value, rel=1e-7, abs=1e-9)

    def test_exponential_moments_extra_rows(self):
        """extra adds rows beyond n"""
        assert exponential_moments(3, 1.0, extra=2).shape == (5, 3)


@pytest.mark.unit
class TestBasisSet:

    def test_gram_identity(self, basis8):
        """Gram matrix on the checked grid is the identity within 1e-10"""
        assert basis8.gram_defect < 1e-10
        np.testing.assert_allclose(basis8.gram(), np.eye(8), atol=1e-10)

    def test_coarse_grid_raises(self):
        """A grid far below 2N cannot reproduce the Gram identity"""
        with pytest.raises(AccuracyError) as excinfo:
            make_basis(8, 4)
        assert excinfo.value.achieved > excinfo.value.tolerance

    def test_size_must_be_positive(self):
        """N = 0 is rejected"""
        with pytest.raises(DomainError):
            make_basis(0)

    def test_functions_reject_non_positive_x(self, basis8):
        """e_n is defined on x > 0 only"""
        with pytest.raises(DomainError):
            basis8.functions(np.array([1.0, 0.0]))

    def test_functions_are_log_hermite(self, basis8):
        """e_n(x) = h_n(ln x)"""
        x = np.array([0.3, 1.0, 4.0])
        np.testing.assert_allclose(basis8.functions(x), hermite_functions(8, np.log(x)))

    def test_gram_stability_two_resolutions(self):
        """The Gram matrix does not change between grid orders 32 and 64"""
        assert gram_stability(8) < 1e-12


@pytest.mark.unit
class TestStateVector:

    def test_projection_of_basis_function(self, basis8):
        """Projecting e_2 gives the unit vector at index 2"""
        state = StateVector.from_function(basis8, lambda x: basis8.functions(x)[2])
        np.testing.assert_allclose(state.coefficients, StateVector.unit(basis8, 2).coefficients, atol=1e-10)

    def test_evaluate_reconstructs(self, basis8):
        """A finite combination is reconstructed exactly"""
        coefficients = np.array([0.5, 0, 0.5j, 0, 0, 0, 0, -0.25])
        state = StateVector(coefficients, basis8)
        x = np.array([0.5, 2.0])
        expected = coefficients @ basis8.functions(x)
        np.testing.assert_allclose(state.evaluate(x), expected)

    def test_wrong_length_rejected(self, basis8):
        """Coefficient count must match N"""
        with pytest.raises(BasisMismatchError):
            StateVector(np.ones(5), basis8)

    def test_non_finite_rejected(self, basis8):
        """NaN coefficients are refused"""
        coefficients = np.zeros(8)
        coefficients[0] = np.nan
        with pytest.raises(NumericError):
            StateVector(coefficients, basis8)

    def test_unit_index_checked(self, basis8):
        """Indices outside 0..N-1 are a DomainError"""
        with pytest.raises(DomainError):
            StateVector.unit(basis8, 8)

    def test_norm_and_conjugate(self, basis8):
        """norm() is the coefficient 2-norm; conjugation keeps it"""
        state = StateVector(np.array([3, 4j, 0, 0, 0, 0, 0, 0]), basis8)
        assert state.norm() == pytest.approx(5.0)
        assert state.conjugate().coefficients[1] == -4j


@pytest.mark.unit
class TestInnerProduct:

    def test_state_pairing(self, basis8):
        """<e_2|e_2> = 1 in coefficient space"""
        e2 = StateVector.unit(basis8, 2)
        assert inner_product(e2, e2) == pytest.approx(1.0)

    def test_function_pairing(self):
        """int e^{-(ln x)^2} dx/x = sqrt(pi)"""
        g = lambda x: np.exp(-0.5 * np.log(x) ** 2)  # noqa: E731
        assert inner_product(g, g).real == pytest.approx(math.sqrt(math.pi), rel=1e-10)

    def test_mismatched_bases(self, basis8):
        """States of different N cannot be paired"""
        with pytest.raises(BasisMismatchError):
            inner_product(StateVector.unit(basis8, 0), StateVector.unit(make_basis(6), 0))

    @settings(max_examples=25, deadline=None)
    @given(
        st.lists(st.floats(-2, 2), min_size=8, max_size=8),
        st.lists(st.floats(-2, 2), min_size=8, max_size=8),
    )
    def test_conjugate_symmetry(self, a, b):
        """<a|b> = conj(<b|a>)"""
        basis = make_basis(8)
        sa = StateVector(np.array(a) + 0.5j * np.array(b), basis)
        sb = StateVector(np.array(b) - 0.25j * np.array(a), basis)
        assert inner_product(sa, sb) == pytest.approx(np.conj(inner_product(sb, sa)), abs=1e-12)

    def test_completeness_defect_for_span_members(self, basis8):
        """Probes inside the span satisfy Parseval exactly"""
        e1 = lambda x: basis8.functions(x)[1]  # noqa: E731
        e5 = lambda x: basis8.functions(x)[5]  # noqa: E731
        assert completeness_defect(basis8, [(e1, e1), (e1, e5)]) < 1e-10

    def test_completeness_defect_shrinks_with_n(self):
        """A probe outside every span has a Parseval gap that closes as N grows"""
        probe = lambda x: np.exp(-0.5 * (np.log(x) - 1.5) ** 2)  # noqa: E731
        small = completeness_defect(make_basis(4), [(probe, probe)])
        large = completeness_defect(make_basis(24), [(probe, probe)])
        assert large < small
        assert large < 1e-6
