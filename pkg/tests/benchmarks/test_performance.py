"""
Performance benchmarks for the quantization paths.

The closed-form route should be far cheaper than quadrature, and the
acceptance-scale builds should stay within desk-scale budgets.
"""

import time

import pytest

from acsq import PARAM1, PARAM2, Observable, experiment, make_basis, make_fiducial, quantize
from acsq.quantizer.observables import gaussian_bump
from acsq.quantizer.operators import resolution_of_identity_matrix
from acsq.quantizer.paths import REDUCED_QUADRATURE


@pytest.fixture(scope="module")
def phi():
    return make_fiducial(2, 1)


@pytest.fixture(scope="module")
def basis8():
    return make_basis(8)


class TestPerformanceBenchmarks:
    """Timing of the acceptance-scale builds"""

    def test_benchmark_resolution_of_identity(self, phi, basis8, benchmark):
        """Benchmark the resolution-of-identity matrix at N = 8"""
        op = benchmark(resolution_of_identity_matrix, PARAM1, phi, basis8)
        assert op.size == 8

    def test_benchmark_closed_form(self, phi, basis8, benchmark):
        """Benchmark the closed-form position operator at N = 8"""
        op = benchmark(quantize, Observable.position(), PARAM2, phi, basis8)
        assert op.path == "closed-form"

    def test_benchmark_separable_bump(self, phi, basis8, benchmark):
        """Benchmark the Gaussian-kernel route at N = 8"""
        op = benchmark.pedantic(quantize, args=(gaussian_bump(1.0), PARAM1, phi, basis8), rounds=3)
        assert op.hermiticity_defect < 1e-6

    def test_closed_form_beats_quadrature(self, phi, basis8):
        """The closed form is faster than the reduced quadrature it replaces"""
        start = time.time()
        for _ in range(5):
            quantize(Observable.position(), PARAM1, phi, basis8)
        closed_time = time.time() - start

        start = time.time()
        for _ in range(5):
            quantize(Observable.position(), PARAM1, phi, basis8, path=REDUCED_QUADRATURE)
        reduced_time = time.time() - start

        assert closed_time < reduced_time

        print(f"\nPosition operator, 5 builds at N=8:")
        print(f"  closed-form: {closed_time:.3f}s")
        print(f"  reduced-quadrature: {reduced_time:.3f}s")

    def test_acceptance_budgets(self, phi, basis8):
        """RoI under 30 s and both position operators under 60 s at N = 8"""
        start = time.time()
        resolution_of_identity_matrix(PARAM1, phi, basis8)
        resolution_of_identity_matrix(PARAM2, phi, basis8)
        assert time.time() - start < 30.0

        start = time.time()
        quantize(Observable.position(), PARAM1, phi, basis8)
        quantize(Observable.position(), PARAM2, phi, basis8)
        assert time.time() - start < 60.0

    def test_provenance_overhead(self, phi, basis8):
        """Provenance tracking adds little to a quantization"""

        @experiment(name="bump")
        def build(basis):
            return quantize(gaussian_bump(1.0), PARAM1, phi, basis)

        start = time.time()
        plain = build(basis8)
        time_plain = time.time() - start

        start = time.time()
        tracked = build.run(basis8)
        time_tracked = time.time() - start

        assert tracked.result.size == plain.size
        overhead = (time_tracked - time_plain) / time_plain * 100
        assert overhead < 100, f"Provenance overhead too high: {overhead:.1f}%"

        print(f"\nProvenance Tracking Overhead:")
        print(f"  Without provenance: {time_plain:.3f}s")
        print(f"  With provenance: {time_tracked:.3f}s")


class TestScalability:
    """Growth of the closed-form build with the truncation"""

    @pytest.mark.slow
    @pytest.mark.parametrize("size", [8, 16, 32])
    def test_closed_form_sizes(self, phi, size):
        """Closed-form builds stay well under a second up to N = 32"""
        basis = make_basis(size)
        start = time.time()
        op = quantize(Observable.dilation(), PARAM1, phi, basis)
        assert time.time() - start < 1.0
        assert op.hermiticity_defect < 1e-10
