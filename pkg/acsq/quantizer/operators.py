"""
Quantization of observables into truncated operator matrices.

quantize() picks the cheapest exact route for the observable and the
parametrization (see acsq.quantizer.paths) and records which one was used.
"""

import math
import time
from dataclasses import dataclass
from typing import Any, Callable, Dict, Optional

import numpy as np
from loguru import logger

from acsq.core.errors import (
    AccuracyError,
    BasisMismatchError,
    DegenerateParametrizationError,
    DivergenceError,
    DomainError,
    NumericError,
)
from acsq.core.settings import DEFAULT_TOLERANCES, Tolerances
from acsq.core.task import numeric_task
from acsq.fiducial.vectors import FiducialVector
from acsq.group.affine import SAMPLE_P, SAMPLE_Q, Parametrization, measure_density
from acsq.hilbert.basis import BasisSet, StateVector, hermite_functions, make_basis
from acsq.hilbert.quadrature import composite_gauss_legendre
from acsq.quantizer import paths
from acsq.quantizer.observables import (
    GENERIC,
    P_INDEPENDENT,
    SEPARABLE_GAUSSIAN_P,
    Observable,
)
from acsq.quantizer.paths import CLOSED_FORM, GENERIC_QUADRATURE, PATHS, REDUCED_QUADRATURE

# relative spread of sigma over p allowed for central-difference jacobians
SIGMA_P_TOLERANCE = 1e-6
ROI_CHUNK = 256


def _frozen(entries: np.ndarray) -> np.ndarray:
    array = np.array(entries, dtype=complex)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class OperatorMatrix:
    """
    Matrix <e_m| f^ |e_n> of a quantized observable on a truncated basis.

    Contract:
        entries: N x N complex, read-only
        basis: the truncated basis
        observable: the classical observable
        parametrization: the chi used for the coherent states
        fiducial: the fiducial vector Phi
        path: closed-form, reduced-quadrature or generic-quadrature
        hermiticity_defect: max |M - M^dagger| entrywise
    """

    entries: np.ndarray
    basis: BasisSet
    observable: Observable
    parametrization: Parametrization
    fiducial: FiducialVector
    path: str
    hermiticity_defect: float

    @property
    def size(self) -> int:
        return self.basis.size

    def trace(self) -> float:
        return float(np.real(np.trace(self.entries)))

    def truncated(self, size: int) -> "OperatorMatrix":
        '''
        Leading size x size block, on the matching smaller basis.

        truncated: size: int -> OperatorMatrix

        Examples:
            quantize(f, PARAM1, phi, make_basis(12)).truncated(10).size -> 10
        '''
        if not 1 <= size <= self.size:
            raise DomainError(f"Cannot truncate an N={self.size} operator to {size}")
        if size == self.size:
            return self
        basis = make_basis(size, self.basis.grid.order, self.basis.gram_tolerance)
        block = self.entries[:size, :size]
        return OperatorMatrix(
            entries=_frozen(block),
            basis=basis,
            observable=self.observable,
            parametrization=self.parametrization,
            fiducial=self.fiducial,
            path=self.path,
            hermiticity_defect=_hermiticity_defect(block),
        )

    def to_dict(self, include_entries: bool = True) -> Dict[str, Any]:
        description: Dict[str, Any] = {
            "N": self.size,
            "path": self.path,
            "hermiticity_defect": self.hermiticity_defect,
            "observable": self.observable.describe(),
            "parametrization": self.parametrization.name,
            "fiducial": self.fiducial.describe(),
        }
        if include_entries:
            description["entries"] = {
                "real": np.real(self.entries).tolist(),
                "imag": np.imag(self.entries).tolist(),
            }
        return description

    def __repr__(self) -> str:
        return (
            f"OperatorMatrix(N={self.size}, observable='{self.observable.name}', "
            f"param='{self.parametrization.name}', path={self.path}, "
            f"hermiticity_defect={self.hermiticity_defect:.1e})"
        )


def _hermiticity_defect(entries: np.ndarray) -> float:
    return float(np.max(np.abs(entries - entries.conj().T))) if entries.size else 0.0


def _finish(
    entries: np.ndarray,
    basis: BasisSet,
    f: Observable,
    param: Parametrization,
    phi: FiducialVector,
    path: str,
    tolerances: Tolerances
) -> OperatorMatrix:
    if not np.all(np.isfinite(entries)):
        raise NumericError(
            f"Quantizing '{f.name}' under '{param.name}' produced non-finite entries.\n"
            f"Check the observable for singularities inside the fiducial support."
        )
    defect = _hermiticity_defect(entries)
    tolerance = (
        tolerances.hermiticity_closed_form if path == CLOSED_FORM
        else tolerances.hermiticity_quadrature
    )
    scale = max(1.0, float(np.max(np.abs(entries))) if entries.size else 0.0)
    if phi.real and not defect <= tolerance * scale:
        raise AccuracyError(
            f"Operator for '{f.name}' under '{param.name}' is not Hermitian: "
            f"defect {defect:.3e} on entries of size {scale:.3e} ({path}).\n"
            f"Refine the quadrature (grid order cap) or check the observable is real.",
            achieved=defect / scale,
            tolerance=tolerance,
        )
    return OperatorMatrix(
        entries=_frozen(entries),
        basis=basis,
        observable=f,
        parametrization=param,
        fiducial=phi,
        path=path,
        hermiticity_defect=defect,
    )


def _eta_function(param: Parametrization, fn: Callable[[np.ndarray], np.ndarray]):
    def wrapped(eta):
        eta = np.asarray(eta, dtype=float)
        return np.asarray(fn(param.q_of_eta(eta)), dtype=float)

    return wrapped


def _reduced_pieces(f: Observable, param: Parametrization):
    """eta-profiles of the multiplier part and the first-order part"""
    reduction = param.reduction()
    if f.kind == P_INDEPENDENT:
        return _eta_function(param, f.g0), None

    slope, offset, g1 = reduction.slope, reduction.offset, f.g1
    g0 = f.g0

    def first_order(q):
        return g1(q) / slope(q)

    def multiplier(q):
        base = g0(q) if g0 is not None else 0.0
        return base - offset(q) * g1(q) / slope(q)

    return _eta_function(param, multiplier), _eta_function(param, first_order)


def _choose_path(f: Observable, param: Parametrization, phi: FiducialVector, requested: Optional[str]) -> str:
    if requested is not None and requested not in PATHS:
        raise DomainError(f"Unknown quantization path '{requested}'; expected one of {PATHS}")
    reducible = param.reduction() is not None
    if f.kind == GENERIC or not reducible:
        natural = GENERIC_QUADRATURE
    elif f.kind == SEPARABLE_GAUSSIAN_P:
        natural = REDUCED_QUADRATURE
    else:
        multiplier, first_order = _reduced_pieces(f, param)
        fits = [paths.monomial_fit(multiplier)]
        if first_order is not None:
            fits.append(paths.monomial_fit(first_order))
        exact = phi.family_params is not None and all(fit is not None for fit in fits)
        natural = CLOSED_FORM if exact else REDUCED_QUADRATURE
    if requested is None or requested == natural:
        return natural
    if requested == GENERIC_QUADRATURE:
        return requested
    if requested == REDUCED_QUADRATURE and natural == CLOSED_FORM:
        return requested
    raise DomainError(
        f"Path '{requested}' is not available for a {f.kind} observable under '{param.name}'.\n"
        f"The natural path here is '{natural}'."
    )


def _attach_certificate(error: DivergenceError, f: Observable, param: Parametrization, phi: FiducialVector) -> None:
    if error.certificate is not None:
        return
    from acsq.analysis.boundedness import boundedness_certificate

    try:
        error.certificate = boundedness_certificate(f, param, phi)
    except Exception as inner:
        logger.debug(f"No boundedness certificate for '{f.name}': {inner}")


@numeric_task(name="quantize")
def quantize(
    f: Observable,
    param: Parametrization,
    phi: FiducialVector,
    basis: BasisSet,
    path: Optional[str] = None,
    tolerances: Tolerances = DEFAULT_TOLERANCES
) -> OperatorMatrix:
    '''
    Quantize f into (2 pi A)^-1 int sigma dp dq f |xi, eta><xi, eta| on the basis.

    quantize: f: Observable, param: Parametrization, phi: FiducialVector, basis: BasisSet,
              path: Optional[str] = None, tolerances: Tolerances -> OperatorMatrix

    Examples:
        quantize(Observable.position(), PARAM1, make_fiducial(2, 1), make_basis(8))
            -> matrix of multiplication by 1/(A x), path closed-form
        quantize(Observable.position(), PARAM2, make_fiducial(2, 1), make_basis(8))
            -> matrix of multiplication by (B/A) x
        quantize(Observable.dilation(), PARAM1, phi, basis) -> matrix of -(i/A) d/dx(. / x)
        quantize(Observable.position(), PARAM1, phi, basis, path="generic-quadrature")
            -> Raises ResolutionError (no decay in p)
    '''
    start_time = time.time()
    chosen = _choose_path(f, param, phi, path)
    size = basis.size
    logger.debug(f"Quantizing '{f.name}' ({f.kind}) under '{param.name}' via {chosen}")
    try:
        if chosen == GENERIC_QUADRATURE:
            entries = paths.generic_matrix(basis, phi, param, f, tolerances)
        elif f.kind == SEPARABLE_GAUSSIAN_P:
            reduction = param.reduction()
            profile = f.p_profile
            entries = paths.separable_matrix(
                basis,
                phi,
                _eta_function(param, f.g0),
                _eta_function(param, reduction.slope),
                _eta_function(param, reduction.offset),
                profile.amplitude,
                profile.center,
                profile.width,
                tolerances,
            )
        else:
            multiplier, first_order = _reduced_pieces(f, param)
            if chosen == CLOSED_FORM:
                c0, k0 = paths.monomial_fit(multiplier)
                entries = paths.closed_form_multiplier(basis, phi, c0, k0)
                if first_order is not None:
                    c1, k1 = paths.monomial_fit(first_order)
                    entries = entries + paths.closed_form_first_order(basis, phi, c1, k1)
            else:
                entries = np.zeros((size, size), dtype=complex)
                growth = tolerances.divergence_growth
                if paths.monomial_fit(multiplier) != (0.0, 0.0):
                    paths.check_profile_transform(multiplier, phi, growth)
                    entries = entries + paths.reduced_multiplier(basis, phi, multiplier)
                if first_order is not None:
                    paths.check_profile_transform(first_order, phi, growth)
                    entries = entries + paths.reduced_first_order(basis, phi, first_order)
    except DivergenceError as error:
        _attach_certificate(error, f, param, phi)
        raise
    op = _finish(entries, basis, f, param, phi, chosen, tolerances)
    logger.info(
        f"Quantized '{f.name}' under '{param.name}' at N={size} via {chosen} "
        f"in {time.time() - start_time:.2f}s"
    )
    return op


def apply(op: OperatorMatrix, psi: StateVector) -> StateVector:
    '''
    The state f^ psi in the operator's basis.

    apply: op: OperatorMatrix, psi: StateVector -> StateVector

    Examples:
        apply(identity_op, psi) -> psi
        apply(op_on_8, StateVector.unit(make_basis(10), 0)) -> Raises BasisMismatchError
    '''
    if not op.basis.compatible(psi.basis):
        raise BasisMismatchError(
            f"Operator on N={op.size} cannot act on a state of N={psi.basis.size}.\n"
            f"Project the state with StateVector.from_function on the operator's basis."
        )
    return StateVector(op.entries @ psi.coefficients, psi.basis)


@numeric_task(name="resolution_of_identity")
def resolution_of_identity_matrix(
    param: Parametrization,
    phi: FiducialVector,
    basis: BasisSet,
    tolerances: Tolerances = DEFAULT_TOLERANCES
) -> OperatorMatrix:
    '''
    int sigma dp dq <e_m|xi, eta><xi, eta|e_n>, expected to equal 2 pi A times the identity.

    The integral is taken in the chart itself: with xi = a(q) p + b(q) the p-integral
    is 2 pi delta(x - x') / |a(q)|, which leaves
    2 pi int dy h_m(y) h_n(y) e^-y int dq sigma(q) / |a(q)| |Phi(eta(q) e^y)|^2,
    evaluated by quadrature in y and ln q. A chart whose sigma does not match its
    coordinates gives a matrix away from 2 pi A I.

    resolution_of_identity_matrix: param: Parametrization, phi: FiducialVector,
                                   basis: BasisSet -> OperatorMatrix

    Examples:
        resolution_of_identity_matrix(PARAM1, make_fiducial(2, 1), make_basis(8))
            -> 2 pi (2/3) I within 1e-6
        chart with jacobian 2 in place of 1 -> 4 pi (2/3) I, roi_defect about 4.19
    '''
    reduction = param.reduction()
    if reduction is None:
        raise DomainError(
            f"Resolution of the identity under '{param.name}' needs eta = eta(q) "
            f"and xi affine in p.\n"
            f"Reparametrize the chart so the p-integral can be taken analytically."
        )
    sigma = measure_density(param)
    p_sample, q_sample = np.meshgrid(SAMPLE_P, SAMPLE_Q, indexing="ij")
    on_sample = sigma(p_sample, q_sample)
    at_zero = sigma(np.zeros_like(SAMPLE_Q), SAMPLE_Q)
    if not np.all(np.abs(on_sample - at_zero[None, :]) <= SIGMA_P_TOLERANCE * at_zero[None, :]):
        raise DegenerateParametrizationError(
            f"Measure density of '{param.name}' depends on p although xi is affine in p.\n"
            f"The jacobian supplied for the chart does not match its coordinates."
        )

    reach = paths.basis_reach(basis.size)
    lo, hi = phi.support
    q_ends = param.q_of_eta(np.array([lo * math.exp(-reach), hi * math.exp(reach)]))
    t_lo, t_hi = np.log(np.sort(q_ends))
    t, w_t = composite_gauss_legendre(float(t_lo), float(t_hi), 0.25, 12)
    q = np.exp(t)
    _, eta = param.to_group(np.zeros_like(q), q)
    weight_q = w_t * q * sigma(np.zeros_like(q), q) / np.abs(reduction.slope(q))

    y, w_y = composite_gauss_legendre(-reach, reach, 0.25, 12)
    profile = np.empty_like(y)
    for start in range(0, y.size, ROI_CHUNK):
        block = y[start:start + ROI_CHUNK]
        u = np.outer(np.exp(block), eta)
        density = np.abs(phi(u.ravel()).reshape(u.shape)) ** 2
        profile[start:start + ROI_CHUNK] = np.exp(-block) * (density @ weight_q)
    h = hermite_functions(basis.size, y)
    entries = 2.0 * math.pi * ((h * (w_y * profile)[None, :]) @ h.T)
    logger.debug(
        f"Resolution of the identity under '{param.name}': {t.size} ln q nodes, {y.size} y nodes, "
        f"mean diagonal {float(np.mean(np.diag(entries))):.12g} "
        f"vs 2 pi A = {2.0 * math.pi * phi.A:.12g}"
    )
    return _finish(
        entries.astype(complex),
        basis,
        Observable.constant(2.0 * math.pi * phi.A, name="roi"),
        param,
        phi,
        REDUCED_QUADRATURE,
        tolerances,
    )


def roi_defect(op: OperatorMatrix) -> float:
    """max |M - 2 pi A delta| of a resolution-of-identity matrix"""
    target = 2.0 * math.pi * op.fiducial.A * np.eye(op.size)
    return float(np.max(np.abs(op.entries - target)))
