"""
Traces of quantized observables and the parametrization-dependence test.

The analytic trace is (2 pi A)^-1 int sigma f dp dq. Two parametrizations that
produced unitarily equivalent operators would give equal traces; for the two
built-ins the traces are the integrals of f with weights 1/q^2 and 1, which
differ unless f is symmetric under q -> 1/q.
"""

import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

from loguru import logger

from acsq.core.settings import DEFAULT_TOLERANCES, Tolerances
from acsq.fiducial.vectors import FiducialVector
from acsq.group.affine import PARAM1, PARAM2, Parametrization, measure_density
from acsq.hilbert.quadrature import half_plane_integral
from acsq.quantizer.observables import Observable

INEQUIVALENT = "inequivalent"
NOT_DISTINGUISHED = "not-distinguished"
INCONCLUSIVE = "inconclusive"

SCOPE_NOTE = (
    "Trace comparison is restricted to observables whose phase-space integral "
    "converges on nested domains (empirically trace-class)."
)


@dataclass(frozen=True)
class AnalyticTrace:
    """
    (2 pi A)^-1 int sigma f dp dq on nested domains.

    Contract:
        value: outermost value when converged, None otherwise
        verdict: converged, divergent or inconclusive
        tolerance: change across the outermost nesting, divided by 2 pi A
        nesting_trace: (domain, value) per nesting
    """

    value: Optional[float]
    verdict: str
    tolerance: float
    parametrization: str
    nesting_trace: List[Tuple[Tuple[float, ...], float]] = field(default_factory=list)

    @property
    def trace_class(self) -> bool:
        return self.verdict == "converged"

    def to_dict(self) -> Dict[str, Any]:
        return {
            "value": self.value,
            "verdict": self.verdict,
            "tolerance": self.tolerance,
            "parametrization": self.parametrization,
            "nesting_trace": [
                {"domain": list(domain), "value": value} for domain, value in self.nesting_trace
            ],
        }


def analytic_trace(
    f: Observable,
    param: Parametrization,
    phi: FiducialVector,
    tolerances: Tolerances = DEFAULT_TOLERANCES
) -> AnalyticTrace:
    '''
    Phase-space trace formula by nested 2D quadrature; divergence is a verdict, not an error.

    analytic_trace: f: Observable, param: Parametrization, phi: FiducialVector -> AnalyticTrace

    Examples:
        analytic_trace(bump(ln q - 1), PARAM2, make_fiducial(2, 1)) -> value 0.75 e^1.25
        analytic_trace(bump(ln q - 1), PARAM1, make_fiducial(2, 1)) -> value 0.75 e^-0.75
        analytic_trace(q e^(-p^2), PARAM2, phi) -> verdict 'divergent', value None
    '''
    sigma = measure_density(param)
    norm = 2.0 * math.pi * phi.A
    result = half_plane_integral(
        lambda p, q: sigma(p, q) * f(p, q), growth=tolerances.divergence_growth
    )
    trace = [(domain, value / norm) for domain, value in result.nesting_trace()]
    value = result.values[-1] / norm if result.converged else None
    if not result.converged:
        logger.warning(f"Trace integral of '{f.name}' under '{param.name}' is {result.verdict}")
    return AnalyticTrace(
        value=value,
        verdict=result.verdict,
        tolerance=result.absolute_tolerance / norm,
        parametrization=param.name,
        nesting_trace=trace,
    )


@dataclass(frozen=True)
class TraceReport:
    """
    Truncated diagonal sum paired with the analytic trace.

    Contract:
        numeric_trace: sum of the N diagonal entries
        convergence_estimate: |trace_N - trace_{N-2}|
        analytic: the phase-space trace, possibly divergent
    """

    numeric_trace: float
    truncation_N: int
    convergence_estimate: float
    parametrization: str
    analytic: AnalyticTrace

    @property
    def analytic_trace(self) -> Optional[float]:
        return self.analytic.value

    @property
    def tolerance(self) -> float:
        return max(1e-3, 3.0 * self.convergence_estimate)

    @property
    def consistent(self) -> Optional[bool]:
        """Whether the numeric trace matches the analytic one; None when not trace-class"""
        if self.analytic.value is None:
            return None
        return abs(self.numeric_trace - self.analytic.value) <= self.tolerance

    def to_dict(self) -> Dict[str, Any]:
        return {
            "numeric_trace": self.numeric_trace,
            "analytic_trace": self.analytic.value,
            "analytic_verdict": self.analytic.verdict,
            "truncation_N": self.truncation_N,
            "convergence_estimate": self.convergence_estimate,
            "tolerance": self.tolerance,
            "consistent": self.consistent,
            "parametrization": self.parametrization,
            "trace_class": self.analytic.trace_class,
        }


def numeric_trace(
    op,
    analytic: Optional[AnalyticTrace] = None,
    tolerances: Tolerances = DEFAULT_TOLERANCES
) -> TraceReport:
    '''
    Diagonal sum of an operator matrix with a truncation estimate and its analytic partner.

    numeric_trace: op: OperatorMatrix, analytic: Optional[AnalyticTrace] = None -> TraceReport

    Examples:
        numeric_trace(quantize(Observable.constant(1), PARAM1, phi, make_basis(6)))
            -> numeric_trace 6.0, analytic verdict 'divergent'
    '''
    size = op.size
    diagonal = [float(value.real) for value in op.entries.diagonal()]
    total = sum(diagonal)
    estimate = abs(sum(diagonal[size - 2:])) if size > 2 else math.inf
    if analytic is None:
        analytic = analytic_trace(op.observable, op.parametrization, op.fiducial, tolerances)
    report = TraceReport(
        numeric_trace=total,
        truncation_N=size,
        convergence_estimate=estimate,
        parametrization=op.parametrization.name,
        analytic=analytic,
    )
    logger.debug(
        f"Trace of '{op.observable.name}' at N={size}: {total:.10g} "
        f"(estimate {estimate:.2e}, analytic {analytic.value})"
    )
    return report


@dataclass(frozen=True)
class InequivalenceReport:
    """
    Analytic traces under both built-in parametrizations and the verdict.

    Contract:
        verdict: inequivalent when |Tr1 - Tr2| exceeds the threshold,
                 not-distinguished when it does not,
                 inconclusive for q -> 1/q symmetric f or non-trace-class f
    """

    trace_1: AnalyticTrace
    trace_2: AnalyticTrace
    difference: Optional[float]
    threshold: float
    verdict: str
    symmetric: bool
    note: str = SCOPE_NOTE

    def to_dict(self) -> Dict[str, Any]:
        return {
            "trace_1": self.trace_1.to_dict(),
            "trace_2": self.trace_2.to_dict(),
            "difference": self.difference,
            "threshold": self.threshold,
            "verdict": self.verdict,
            "symmetric_under_inversion": self.symmetric,
            "note": self.note,
        }


def trace_inequivalence_test(
    f: Observable,
    phi: FiducialVector,
    tolerances: Tolerances = DEFAULT_TOLERANCES
) -> InequivalenceReport:
    '''
    Compare the traces of f under param1 and param2.

    Unequal traces of a trace-class observable rule out a unitary map between the
    two quantizations. Symmetric f (f(p, q) = f(p, 1/q)) cannot separate them.

    trace_inequivalence_test: f: Observable, phi: FiducialVector -> InequivalenceReport

    Examples:
        trace_inequivalence_test(bump(ln q - 1), make_fiducial(2, 1)) -> verdict 'inequivalent'
        trace_inequivalence_test(bump(ln q), make_fiducial(2, 1)) -> verdict 'inconclusive'
        trace_inequivalence_test(Observable.constant(0), phi) -> verdict 'inconclusive'
    '''
    first = analytic_trace(f, PARAM1, phi, tolerances)
    second = analytic_trace(f, PARAM2, phi, tolerances)
    symmetric = f.is_inversion_symmetric()
    threshold = max(10.0 * (first.tolerance + second.tolerance), 1e-12)
    difference = None
    if first.value is not None and second.value is not None:
        difference = first.value - second.value

    if symmetric or difference is None:
        verdict = INCONCLUSIVE
    elif abs(difference) > threshold:
        verdict = INEQUIVALENT
    else:
        verdict = NOT_DISTINGUISHED
    logger.info(
        f"Trace comparison for '{f.name}': Tr1={first.value}, Tr2={second.value} -> {verdict}"
    )
    return InequivalenceReport(
        trace_1=first,
        trace_2=second,
        difference=difference,
        threshold=threshold,
        verdict=verdict,
        symmetric=symmetric,
    )
