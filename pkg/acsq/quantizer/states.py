"""Affine coherent states <x|xi, eta> = e^{i xi x} Phi(eta x) and their overlaps"""

import math
import warnings
from dataclasses import dataclass
from typing import Callable, List, Optional, Tuple, Union

import numpy as np
from loguru import logger
from scipy import integrate

from acsq.core.errors import DomainError, NumericError, ResolutionError
from acsq.core.settings import DEFAULT_TOLERANCES, Tolerances
from acsq.fiducial.vectors import FiducialVector
from acsq.group.affine import Parametrization, PhasePoint
from acsq.hilbert.basis import StateVector
from acsq.quantizer.paths import basis_reach

# subinterval width in ln x for the oscillatory quadrature
_LOG_STEP = 0.5


@dataclass(frozen=True, eq=False)
class CoherentState:
    """
    The coherent state U(xi, eta)|Phi> at a phase point.

    Contract:
        point: phase point (p, q)
        parametrization: the chi used to reach the group element
        fiducial: the fiducial vector Phi
    """

    point: PhasePoint
    parametrization: Parametrization
    fiducial: FiducialVector

    @property
    def group_element(self) -> Tuple[float, float]:
        xi, eta = self.parametrization.to_group(self.point.p, self.point.q)
        return float(xi), float(eta)

    def __call__(self, x) -> np.ndarray:
        return coherent_eval(self, x)

    def __repr__(self) -> str:
        return (
            f"CoherentState(p={self.point.p:g}, q={self.point.q:g}, "
            f"param='{self.parametrization.name}', fiducial='{self.fiducial.tag}')"
        )


def coherent_eval(cs: CoherentState, x) -> np.ndarray:
    '''
    <x|xi(p, q), eta(p, q)> = e^{i xi x} Phi(eta x).

    coherent_eval: cs: CoherentState, x: array -> np.ndarray

    Examples:
        coherent_eval(CoherentState(PhasePoint(0, 1), PARAM1, phi), 1.5) -> phi(1.5)
        coherent_eval(CoherentState(PhasePoint(0, 2), PARAM2, phi), 1.5) -> phi(0.75)
    '''
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise DomainError("Coherent states are functions of x > 0")
    xi, eta = cs.group_element
    return np.exp(1j * xi * x) * cs.fiducial(eta * x)


def _log_subintervals(lo: float, hi: float) -> np.ndarray:
    pieces = max(1, int(math.ceil(math.log(hi / lo) / _LOG_STEP)))
    return np.geomspace(lo, hi, pieces + 1)


def _quad(fn: Callable[[float], float], a: float, b: float, weight: Optional[str], omega: float) -> float:
    options = dict(epsabs=1e-14, epsrel=1e-12, limit=200)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", integrate.IntegrationWarning)
        if weight is None:
            value, _ = integrate.quad(fn, a, b, **options)
        else:
            value, _ = integrate.quad(fn, a, b, weight=weight, wvar=omega, **options)
    for warning in caught:
        logger.debug(f"quad on [{a:.3g}, {b:.3g}]: {warning.message}")
    return value


def fourier_integral(
    g: Callable[[float], complex],
    omega: float,
    lo: float,
    hi: float,
    real: bool = False
) -> complex:
    '''
    int_lo^hi g(x) e^{i omega x} dx with QAWO on log-spaced subintervals.

    fourier_integral: g: Callable, omega: float, lo: float, hi: float,
                      real: bool = False -> complex

    Examples:
        fourier_integral(lambda x: np.exp(-x), 0.0, 1e-8, 60.0) -> (1+0j)
    '''
    if not hi > lo:
        return 0j

    def g_re(x):
        return float(np.real(g(x)))

    def g_im(x):
        return float(np.imag(g(x)))

    total = 0j
    edges = _log_subintervals(lo, hi)
    for a, b in zip(edges[:-1], edges[1:]):
        if omega == 0.0:
            total += _quad(g_re, a, b, None, 0.0)
            if not real:
                total += 1j * _quad(g_im, a, b, None, 0.0)
            continue
        cos_re = _quad(g_re, a, b, "cos", omega)
        sin_re = _quad(g_re, a, b, "sin", omega)
        total += cos_re + 1j * sin_re
        if not real:
            cos_im = _quad(g_im, a, b, "cos", omega)
            sin_im = _quad(g_im, a, b, "sin", omega)
            total += 1j * cos_im - sin_im
    if not np.isfinite(total):
        raise NumericError(f"Non-finite oscillatory integral at omega={omega:g}")
    return complex(total)


def _state_window(psi: Union[StateVector, Callable]) -> Tuple[float, float]:
    if isinstance(psi, StateVector):
        reach = basis_reach(psi.basis.size)
        return math.exp(-reach), math.exp(reach)
    return 0.0, math.inf


def overlap(
    cs: CoherentState,
    psi: Union[StateVector, Callable[[np.ndarray], np.ndarray]],
    tolerances: Tolerances = DEFAULT_TOLERANCES
) -> complex:
    '''
    <xi, eta|psi> = int dnu(x) e^{-i xi x} conj(Phi(eta x)) psi(x).

    overlap: cs: CoherentState, psi: StateVector | Callable -> complex

    Examples:
        overlap(CoherentState(identity(PARAM1), PARAM1, phi), phi_expanded) -> ~1.0
        overlap(CoherentState(PhasePoint(50, 1), PARAM1, phi), psi) -> Raises ResolutionError
    '''
    xi, eta = cs.group_element
    if abs(xi) > tolerances.p_max:
        raise ResolutionError(
            f"Coherent-state momentum xi={xi:g} exceeds p_max={tolerances.p_max:g}.\n"
            f"Raise p_max in the tolerances if the basis resolves such oscillations.",
            requested=abs(xi),
            allowed=tolerances.p_max,
        )
    u_lo, u_hi = cs.fiducial.support
    s_lo, s_hi = _state_window(psi)
    lo, hi = max(u_lo / eta, s_lo), min(u_hi / eta, s_hi)
    evaluate = psi.evaluate if isinstance(psi, StateVector) else psi
    phi = cs.fiducial
    real = phi.real and isinstance(psi, StateVector) and not np.any(np.imag(psi.coefficients))

    def g(x):
        return np.conj(phi(eta * x)) * evaluate(np.asarray(x)) / x

    return fourier_integral(g, -xi, lo, hi, real=real)


def coherent_overlap(cs_a: CoherentState, cs_b: CoherentState) -> complex:
    '''
    <cs_a|cs_b> for two coherent states of the same fiducial vector.

    coherent_overlap: cs_a: CoherentState, cs_b: CoherentState -> complex

    Examples:
        coherent_overlap(cs, cs) -> (1+0j)
    '''
    xa, ea = cs_a.group_element
    xb, eb = cs_b.group_element
    lo_a, hi_a = cs_a.fiducial.support
    lo_b, hi_b = cs_b.fiducial.support
    lo, hi = max(lo_a / ea, lo_b / eb), min(hi_a / ea, hi_b / eb)
    real = cs_a.fiducial.real and cs_b.fiducial.real

    def g(x):
        return np.conj(cs_a.fiducial(ea * x)) * cs_b.fiducial(eb * x) / x

    return fourier_integral(g, xb - xa, lo, hi, real=real)


def overlap_table(
    states: List[CoherentState],
    psi: Union[StateVector, Callable[[np.ndarray], np.ndarray]],
    tolerances: Tolerances = DEFAULT_TOLERANCES
) -> np.ndarray:
    """Overlaps of psi with a list of coherent states"""
    return np.array([overlap(cs, psi, tolerances) for cs in states], dtype=complex)
