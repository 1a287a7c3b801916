"""Tests for phase-space observables"""

import math

import numpy as np
import pytest

from acsq.core.errors import DomainError
from acsq.quantizer.observables import (
    GENERIC,
    LINEAR_IN_P,
    P_INDEPENDENT,
    SEPARABLE_GAUSSIAN_P,
    GaussianProfile,
    Observable,
    gaussian_bump,
)


@pytest.mark.unit
class TestConstruction:

    def test_kinds_of_builtins(self):
        """position is p-independent, dilation is linear in p"""
        assert Observable.position().kind == P_INDEPENDENT
        assert Observable.dilation().kind == LINEAR_IN_P
        assert gaussian_bump().kind == SEPARABLE_GAUSSIAN_P
        assert Observable.generic(lambda p, q: p * p + q).kind == GENERIC

    def test_unknown_kind(self):
        """Kinds outside the four shapes are refused"""
        with pytest.raises(DomainError):
            Observable("quadratic", g0=lambda q: q)

    def test_missing_pieces(self):
        """A linear-in-p observable needs g1"""
        with pytest.raises(DomainError, match="missing"):
            Observable(LINEAR_IN_P, g0=lambda q: q)

    def test_gaussian_profile_width(self):
        """Widths must be positive"""
        with pytest.raises(DomainError):
            GaussianProfile(1.0, 0.0, 0.0)


@pytest.mark.unit
class TestEvaluation:

    def test_position_and_dilation(self):
        """q and p q on a grid"""
        p = np.array([1.0, -2.0])
        q = np.array([3.0, 0.5])
        np.testing.assert_allclose(Observable.position()(p, q), q)
        np.testing.assert_allclose(Observable.dilation()(p, q), p * q)

    def test_broadcasting(self):
        """Scalar p against an array of q"""
        values = Observable.dilation()(2.0, np.array([1.0, 2.0, 3.0]))
        np.testing.assert_allclose(values, [2.0, 4.0, 6.0])

    def test_constant_broadcasts(self):
        """A constant has the broadcast shape"""
        assert Observable.constant(3.0)(np.zeros((2, 3)), 1.0).shape == (2, 3)

    def test_bump_value(self):
        """The bump centred at ln q = 1 peaks at (0, e)"""
        assert gaussian_bump(1.0)(0.0, math.e) == pytest.approx(1.0)

    def test_linear_with_offset(self):
        """p g1 + g0"""
        f = Observable.linear_in_p(lambda q: q ** 2, lambda q: 1.0 / q)
        assert f(3.0, 2.0) == pytest.approx(12.5)


@pytest.mark.unit
class TestTransformations:

    def test_substitute_inverse_q(self):
        """f(p, 1/q) for every kind"""
        assert Observable.position().substitute_inverse_q()(0.0, 4.0) == pytest.approx(0.25)
        assert Observable.dilation().substitute_inverse_q()(2.0, 4.0) == pytest.approx(0.5)
        generic = Observable.generic(lambda p, q: p + q).substitute_inverse_q()
        assert generic(1.0, 2.0) == pytest.approx(1.5)
        bump = gaussian_bump(1.0).substitute_inverse_q()
        assert bump(0.0, math.exp(-1.0)) == pytest.approx(1.0)

    def test_substitution_records_source(self):
        """The substituted observable remembers where it came from"""
        flipped = Observable.position().substitute_inverse_q()
        assert flipped.source["substituted"] == "q -> 1/q"
        assert flipped.name == "q(p,1/q)"

    def test_combine(self):
        """2 q + 3 at q = 1 is 5"""
        combined = Observable.position().combine(Observable.constant(1), 2, 3)
        assert combined(0, 1) == pytest.approx(5.0)

    def test_combine_rejects_mixed_kinds(self):
        """p-independent and linear-in-p do not combine"""
        with pytest.raises(DomainError):
            Observable.position().combine(Observable.dilation(), 1, 1)

    def test_combine_rejects_different_profiles(self):
        """Separable observables need equal p-profiles"""
        with pytest.raises(DomainError):
            gaussian_bump(0.0, p_width=1.0).combine(gaussian_bump(0.0, p_width=2.0), 1, 1)

    def test_scaled(self):
        """scaled multiplies every value"""
        assert Observable.dilation().scaled(-2.0)(1.0, 3.0) == pytest.approx(-6.0)

    def test_combine_keeps_sources(self):
        """Combined and scaled observables still describe what they were built from"""
        combined = Observable.position().combine(Observable.constant(1), 2, 3)
        assert combined.source == {"combined": [2, 3], "of": [{"g": "q"}, {"g": "1"}]}
        assert combined.describe()["source"]["of"][0] == {"g": "q"}
        generic = Observable.generic(lambda p, q: p * q, source={"f": "p*q"})
        assert generic.combine(generic, 1, 1).source["of"] == [{"f": "p*q"}, {"f": "p*q"}]
        scaled = Observable.dilation().scaled(-2.0)
        assert scaled.source == {"scaled": -2.0, "of": {"g1": "q"}}
        assert scaled.name == "-2*p*q"

    def test_inversion_symmetry(self):
        """Bumps centred at ln q = 0 are symmetric, shifted ones are not"""
        assert gaussian_bump(0.0).is_inversion_symmetric()
        assert not gaussian_bump(1.0).is_inversion_symmetric()
        assert not Observable.position().is_inversion_symmetric()

    def test_is_zero(self):
        """Only the zero observable is zero"""
        assert Observable.constant(0.0).is_zero()
        assert not Observable.position().is_zero()

    def test_describe(self):
        """describe carries kind, name, source and the p-profile"""
        description = gaussian_bump(1.0).describe()
        assert description["kind"] == SEPARABLE_GAUSSIAN_P
        assert description["p_profile"] == {"amplitude": 1.0, "center": 0.0, "width": 1.0}
        assert "f" in description["source"]
