"""Boundedness certificates: (2 pi A)^-1 int |sigma f| dp dq < inf bounds the operator norm"""

import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from loguru import logger

from acsq.core.settings import DEFAULT_TOLERANCES, Tolerances
from acsq.fiducial.vectors import FiducialVector
from acsq.group.affine import Parametrization, measure_density
from acsq.hilbert.quadrature import half_plane_integral
from acsq.quantizer.observables import Observable

BOUNDED = "bounded"
DIVERGENT = "divergent"
INCONCLUSIVE = "inconclusive"

_VERDICTS = {"converged": BOUNDED, "divergent": DIVERGENT, "inconclusive": INCONCLUSIVE}


@dataclass(frozen=True)
class BoundednessCertificate:
    """
    Nested-domain value of (2 pi A)^-1 int |sigma f| dp dq.

    Contract:
        integral_value: the outermost value when bounded, None otherwise
        verdict: bounded, divergent or inconclusive
        nesting_trace: (domain, value) per nesting, values already divided by 2 pi A
        observable, parametrization: names for records
    """

    integral_value: Optional[float]
    verdict: str
    nesting_trace: List[Tuple[Tuple[float, ...], float]] = field(default_factory=list)
    observable: str = "f"
    parametrization: str = ""

    @property
    def bounded(self) -> bool:
        return self.verdict == BOUNDED

    def to_dict(self) -> Dict[str, Any]:
        return {
            "integral_value": self.integral_value,
            "verdict": self.verdict,
            "nesting_trace": [
                {"domain": list(domain), "value": value} for domain, value in self.nesting_trace
            ],
            "observable": self.observable,
            "parametrization": self.parametrization,
        }


def boundedness_certificate(
    f: Observable,
    param: Parametrization,
    phi: FiducialVector,
    tolerances: Tolerances = DEFAULT_TOLERANCES
) -> BoundednessCertificate:
    '''
    Certify boundedness of the quantized f by nested quadrature of |sigma f|.

    boundedness_certificate: f: Observable, param: Parametrization, phi: FiducialVector
                             -> BoundednessCertificate

    Examples:
        boundedness_certificate(Observable.position(), PARAM1, phi) -> verdict 'divergent'
        boundedness_certificate(bump(ln q), PARAM1, make_fiducial(2, 1))
            -> verdict 'bounded', integral_value 0.75 e^(1/4)
    '''
    sigma = measure_density(param)
    norm = 2.0 * math.pi * phi.A

    def integrand(p, q):
        return np.abs(sigma(p, q) * f(p, q))

    result = half_plane_integral(integrand, growth=tolerances.divergence_growth)
    verdict = _VERDICTS[result.verdict]
    trace = [(domain, value / norm) for domain, value in result.nesting_trace()]
    value = result.values[-1] / norm if verdict == BOUNDED else None
    if verdict != BOUNDED:
        logger.warning(f"Boundedness of '{f.name}' under '{param.name}': {verdict}")
    return BoundednessCertificate(
        integral_value=value,
        verdict=verdict,
        nesting_trace=trace,
        observable=f.name,
        parametrization=param.name,
    )


@dataclass(frozen=True)
class NormBoundCheck:
    """Spectral norm of a truncated operator against its certificate bound"""

    spectral_norm: float
    bound: Optional[float]
    holds: Optional[bool]

    def to_dict(self) -> Dict[str, Any]:
        return {"spectral_norm": self.spectral_norm, "bound": self.bound, "holds": self.holds}


def norm_bound_check(op, certificate: BoundednessCertificate, slack: float = 1e-6) -> NormBoundCheck:
    '''
    ||P f^ P|| <= ||f^|| <= certificate value, since coherent states have unit norm.

    norm_bound_check: op: OperatorMatrix, certificate: BoundednessCertificate,
                      slack: float = 1e-6 -> NormBoundCheck

    Examples:
        norm_bound_check(quantize(bump, PARAM1, phi, basis), certificate) -> holds True
        norm_bound_check(op, divergent_certificate) -> holds None
    '''
    spectral = float(np.linalg.norm(op.entries, 2))
    if not certificate.bounded:
        return NormBoundCheck(spectral_norm=spectral, bound=None, holds=None)
    bound = certificate.integral_value
    holds = spectral <= bound * (1.0 + slack) + 1e-12
    if not holds:
        logger.warning(f"Spectral norm {spectral:.6g} exceeds the certified bound {bound:.6g}")
    return NormBoundCheck(spectral_norm=spectral, bound=bound, holds=holds)
