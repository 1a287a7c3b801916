"""Tests for boundedness certificates and the spectral-norm check"""

import math

import pytest

from acsq.analysis.boundedness import (
    BOUNDED,
    DIVERGENT,
    boundedness_certificate,
    norm_bound_check,
)
from acsq.core.errors import DivergenceError
from acsq.fiducial.vectors import make_fiducial
from acsq.group.affine import PARAM1, PARAM2
from acsq.hilbert.basis import make_basis
from acsq.quantizer.observables import Observable, gaussian_bump
from acsq.quantizer.operators import quantize


@pytest.fixture(scope="module")
def phi():
    return make_fiducial(2, 1)


@pytest.mark.unit
class TestCertificates:

    def test_centred_bump_is_bounded(self, phi):
        """(2 pi A)^-1 int q^-2 e^{-p^2 - (ln q)^2} = 0.75 e^{1/4}"""
        certificate = boundedness_certificate(gaussian_bump(0.0), PARAM1, phi)
        assert certificate.verdict == BOUNDED
        assert certificate.bounded
        assert certificate.integral_value == pytest.approx(0.75 * math.exp(0.25), rel=1e-7)

    def test_position_is_divergent(self, phi):
        """f = q has no integrable |sigma f|"""
        certificate = boundedness_certificate(Observable.position(), PARAM1, phi)
        assert certificate.verdict == DIVERGENT
        assert certificate.integral_value is None

    def test_absolute_value_is_integrated(self, phi):
        """A sign flip leaves the certificate unchanged"""
        plain = boundedness_certificate(gaussian_bump(0.0), PARAM2, phi)
        flipped = boundedness_certificate(gaussian_bump(0.0).scaled(-1.0), PARAM2, phi)
        assert flipped.integral_value == pytest.approx(plain.integral_value, rel=1e-12)

    def test_to_dict(self, phi):
        """Records name the observable and the parametrization"""
        description = boundedness_certificate(gaussian_bump(0.0), PARAM1, phi).to_dict()
        assert description["parametrization"] == "param1"
        assert description["verdict"] == BOUNDED
        assert description["nesting_trace"]

    def test_divergent_quantization_carries_certificate(self):
        """quantize() attaches a certificate to its DivergenceError"""
        weak = make_fiducial(0.8, 1, require_b=False)
        with pytest.raises(DivergenceError) as excinfo:
            quantize(Observable.position(), PARAM2, weak, make_basis(6))
        assert excinfo.value.certificate is not None
        assert excinfo.value.certificate.verdict == DIVERGENT


@pytest.mark.unit
class TestNormBound:

    def test_bound_holds_for_bump(self, phi):
        """The truncated operator norm stays below the certificate"""
        f = gaussian_bump(0.0)
        certificate = boundedness_certificate(f, PARAM1, phi)
        check = norm_bound_check(quantize(f, PARAM1, phi, make_basis(8)), certificate)
        assert check.holds is True
        assert 0.0 < check.spectral_norm <= check.bound

    def test_no_bound_without_certificate(self, phi):
        """A divergent certificate leaves the check open"""
        certificate = boundedness_certificate(Observable.position(), PARAM1, phi)
        check = norm_bound_check(quantize(Observable.position(), PARAM1, phi, make_basis(6)), certificate)
        assert check.holds is None
        assert check.bound is None
        assert check.to_dict()["spectral_norm"] > 0.0
