"""Tests for trace formulas and the trace comparison between parametrizations"""

import math

import pytest

from acsq.fiducial.vectors import make_fiducial
from acsq.group.affine import PARAM1, PARAM2
from acsq.hilbert.basis import make_basis
from acsq.quantizer.observables import Observable, gaussian_bump
from acsq.quantizer.operators import quantize
from acsq.analysis.traces import (
    INCONCLUSIVE,
    INEQUIVALENT,
    analytic_trace,
    numeric_trace,
    trace_inequivalence_test,
)


@pytest.fixture(scope="module")
def phi():
    return make_fiducial(2, 1)


@pytest.fixture(scope="module")
def bump():
    """e^{-p^2} e^{-(ln q - 1)^2}"""
    return gaussian_bump(1.0)


@pytest.mark.unit
class TestAnalyticTrace:

    def test_param1_value(self, phi, bump):
        """(2 pi A)^-1 int q^-2 f = 0.75 e^-0.75"""
        trace = analytic_trace(bump, PARAM1, phi)
        assert trace.verdict == "converged"
        assert trace.value == pytest.approx(0.75 * math.exp(-0.75), rel=1e-7)

    def test_param2_value(self, phi, bump):
        """(2 pi A)^-1 int f = 0.75 e^1.25"""
        trace = analytic_trace(bump, PARAM2, phi)
        assert trace.value == pytest.approx(0.75 * math.exp(1.25), rel=1e-7)
        assert trace.trace_class

    def test_divergent_trace(self, phi):
        """A constant is not trace-class; the value is withheld"""
        trace = analytic_trace(Observable.constant(1.0), PARAM1, phi)
        assert trace.verdict == "divergent"
        assert trace.value is None
        assert not trace.trace_class

    def test_nesting_trace_is_recorded(self, phi, bump):
        """Every nesting is kept for the record"""
        description = analytic_trace(bump, PARAM1, phi).to_dict()
        assert len(description["nesting_trace"]) >= 2
        assert description["parametrization"] == "param1"


@pytest.mark.unit
class TestNumericTrace:

    def test_identity_trace(self, phi):
        """The identity on N functions has trace N and no analytic partner"""
        op = quantize(Observable.constant(1.0), PARAM1, phi, make_basis(6))
        report = numeric_trace(op)
        assert report.numeric_trace == pytest.approx(6.0, abs=1e-10)
        assert report.analytic_trace is None
        assert report.consistent is None

    def test_positive_operator_trace_increases_to_the_limit(self, phi, bump):
        """Partial traces of a positive operator stay below the analytic trace"""
        expected = 0.75 * math.exp(-0.75)
        small = numeric_trace(quantize(bump, PARAM1, phi, make_basis(6)))
        large = numeric_trace(quantize(bump, PARAM1, phi, make_basis(12)), analytic=small.analytic)
        assert small.numeric_trace < large.numeric_trace <= expected + 1e-8
        assert large.numeric_trace > 0.5 * expected

    def test_report_fields(self, phi, bump):
        """to_dict carries the truncation and both traces"""
        report = numeric_trace(quantize(bump, PARAM1, phi, make_basis(6)))
        description = report.to_dict()
        assert description["truncation_N"] == 6
        assert description["analytic_trace"] == pytest.approx(0.75 * math.exp(-0.75), rel=1e-7)
        assert description["trace_class"] is True
        assert report.tolerance >= 1e-3

    @pytest.mark.slow
    def test_consistent_at_large_truncation(self, phi, bump):
        """At N = 24 the diagonal sum matches the phase-space trace"""
        report = numeric_trace(quantize(bump, PARAM1, phi, make_basis(24)))
        assert report.numeric_trace == pytest.approx(0.75 * math.exp(-0.75), rel=2e-2)


@pytest.mark.unit
class TestInequivalence:

    def test_shifted_bump_separates_parametrizations(self, phi, bump):
        """Traces 0.75 e^-0.75 and 0.75 e^1.25 differ"""
        report = trace_inequivalence_test(bump, phi)
        assert report.verdict == INEQUIVALENT
        assert report.difference == pytest.approx(0.75 * (math.exp(-0.75) - math.exp(1.25)), rel=1e-6)
        assert not report.symmetric

    def test_symmetric_bump_is_inconclusive(self, phi):
        """f(p, q) = f(p, 1/q) cannot tell the two apart"""
        report = trace_inequivalence_test(gaussian_bump(0.0), phi)
        assert report.symmetric
        assert report.verdict == INCONCLUSIVE

    def test_non_trace_class_is_inconclusive(self, phi):
        """Divergent traces give no verdict"""
        report = trace_inequivalence_test(Observable.position(), phi)
        assert report.difference is None
        assert report.verdict == INCONCLUSIVE

    def test_report_carries_scope_note(self, phi, bump):
        """Records explain the trace-class restriction"""
        description = trace_inequivalence_test(bump, phi).to_dict()
        assert "trace-class" in description["note"]
        assert description["symmetric_under_inversion"] is False
