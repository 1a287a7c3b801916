"""
acsq: Affine Coherent State Quantization

Operator matrices of classical observables on the half-plane, in a log-Hermite
basis of L^2(R+, dx/x), with the checks that go with them.
"""

__version__ = "0.1.0"

from acsq.hilbert.basis import StateVector, inner_product, make_basis
from acsq.group.affine import PARAM1, PARAM2, Parametrization, get_parametrization, measure_density
from acsq.fiducial.vectors import load_profile, make_fiducial
from acsq.quantizer.observables import Observable
from acsq.quantizer.operators import apply, quantize, resolution_of_identity_matrix
from acsq.analysis.traces import numeric_trace, trace_inequivalence_test
from acsq.analysis.commutators import commutator_check
from acsq.analysis.boundedness import boundedness_certificate
from acsq.core.experiment import experiment
from acsq.core.task import numeric_task

__all__ = [
    # Hilbert space
    "make_basis",
    "StateVector",
    "inner_product",
    # Affine group
    "PARAM1",
    "PARAM2",
    "Parametrization",
    "get_parametrization",
    "measure_density",
    # Fiducial vectors
    "make_fiducial",
    "load_profile",
    # Quantization (CORE FEATURES)
    "Observable",
    "quantize",
    "apply",
    "resolution_of_identity_matrix",
    # Analysis
    "numeric_trace",
    "trace_inequivalence_test",
    "commutator_check",
    "boundedness_certificate",
    # Orchestration
    "experiment",
    "numeric_task",
]
