"""Affine commutation relations of the quantized position and dilation"""

import math
from dataclasses import dataclass
from typing import Any, Dict, Optional

import numpy as np
from loguru import logger

from acsq.core.errors import AdmissibilityError, DomainError
from acsq.core.settings import DEFAULT_TOLERANCES, Tolerances
from acsq.fiducial.vectors import FiducialVector
from acsq.group.affine import Parametrization
from acsq.hilbert.basis import BasisSet, make_basis
from acsq.quantizer.observables import Observable
from acsq.quantizer.operators import quantize


@dataclass(frozen=True)
class CommutatorReport:
    """
    Interior defect of [Q, D] against its closed-form right-hand side.

    Contract:
        defect: max |C - RHS| over m, n < N - margin
        defect_opposite_sign: same with the sign of RHS flipped (param1 only)
        reference: the right-hand side that was used
        working_size: basis size the matrices were built on before truncation
    """

    parametrization: str
    truncation_N: int
    working_size: int
    margin: int
    reference: str
    defect: float
    tolerance: float
    defect_opposite_sign: Optional[float] = None

    @property
    def passed(self) -> bool:
        return self.defect < self.tolerance

    def to_dict(self) -> Dict[str, Any]:
        return {
            "parametrization": self.parametrization,
            "truncation_N": self.truncation_N,
            "working_size": self.working_size,
            "margin": self.margin,
            "reference": self.reference,
            "defect": self.defect,
            "defect_opposite_sign": self.defect_opposite_sign,
            "tolerance": self.tolerance,
            "passed": self.passed,
        }


def commutator_check(
    param: Parametrization,
    phi: FiducialVector,
    basis: BasisSet,
    tolerances: Tolerances = DEFAULT_TOLERANCES
) -> CommutatorReport:
    '''
    Build Q = quantize(q) and D = quantize(p q), form C = QD - DQ and compare with
    -i A Q^3 (param1) or i (B/A) Q (param2) on the interior block.

    The matrices are built on a working basis of N + padding functions and cut back
    to N; the cube Q^3 is the cube of the working matrix.

    commutator_check: param: Parametrization, phi: FiducialVector, basis: BasisSet
                      -> CommutatorReport

    Examples:
        commutator_check(PARAM2, make_fiducial(2, 1), make_basis(16)) -> defect < 1e-4
        commutator_check(PARAM1, make_fiducial(2, 1), make_basis(16)) -> defect < 1e-4
        commutator_check(PARAM2, make_fiducial(0.8, 1, require_b=False), basis)
            -> Raises AdmissibilityError
    '''
    if param.name not in ("param1", "param2"):
        raise DomainError(
            f"Commutator checks are defined for the built-in parametrizations, got '{param.name}'"
        )
    if not phi.real:
        raise DomainError("Commutator checks need a real fiducial vector")
    if param.name == "param2" and not math.isfinite(phi.B):
        raise AdmissibilityError(
            f"B diverges for {phi.tag}; the param2 relation [Q, D] = i (B/A) Q needs finite B.",
            constant="B",
        )
    size = basis.size
    margin = tolerances.commutator_margin
    padding = size if tolerances.commutator_padding is None else tolerances.commutator_padding
    if size - margin < 1:
        raise DomainError(f"N={size} leaves no interior block with margin {margin}")
    working = make_basis(size + padding, gram_tolerance=basis.gram_tolerance)

    q_op = quantize(Observable.position(), param, phi, working, tolerances=tolerances).entries
    d_op = quantize(Observable.dilation(), param, phi, working, tolerances=tolerances).entries
    commutator = (q_op @ d_op - d_op @ q_op)[:size, :size]

    if param.name == "param1":
        rhs = (-1j * phi.A * (q_op @ q_op @ q_op))[:size, :size]
        reference = "-i A Q^3"
    else:
        rhs = (1j * phi.B / phi.A * q_op)[:size, :size]
        reference = "i (B/A) Q"

    inner = size - margin
    gap = np.abs(commutator - rhs)[:inner, :inner]
    defect = float(np.max(gap))
    opposite = None
    if param.name == "param1":
        opposite = float(np.max(np.abs(commutator + rhs)[:inner, :inner]))
    report = CommutatorReport(
        parametrization=param.name,
        truncation_N=size,
        working_size=working.size,
        margin=margin,
        reference=reference,
        defect=defect,
        tolerance=tolerances.commutator,
        defect_opposite_sign=opposite,
    )
    logger.info(f"Commutator check {param.name} N={size}: defect {defect:.3e} against {reference}")
    return report
