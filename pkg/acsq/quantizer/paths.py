"""
Matrix assembly for f -> (2 pi A)^-1 int sigma dp dq f(p, q) |xi, eta><xi, eta|.

In group coordinates sigma dp dq = dxi deta / eta^2. Three assembly routes:

closed-form         p-independent or linear-in-p observables whose eta-profile is
                    a monomial c eta^k, with a fiducial of the (alpha, beta) family
reduced-quadrature  the dxi-integral done analytically (delta function, its
                    derivative, or the Gaussian kernel of a separable profile)
generic-quadrature  the dxi-integral done numerically from coherent-state overlaps
"""

import math
from typing import Callable, Optional, Tuple

import numpy as np
from loguru import logger

from acsq.core.errors import DivergenceError, NumericError, ResolutionError
from acsq.core.settings import Tolerances
from acsq.fiducial.vectors import FiducialVector
from acsq.group.affine import Parametrization
from acsq.hilbert.basis import (
    BasisSet,
    exponential_moments,
    hermite_derivative_matrix,
    hermite_functions,
)
from acsq.hilbert.quadrature import (
    QuadratureGrid,
    composite_gauss_legendre,
    half_line_integral,
)

CLOSED_FORM = "closed-form"
REDUCED_QUADRATURE = "reduced-quadrature"
GENERIC_QUADRATURE = "generic-quadrature"
PATHS = (CLOSED_FORM, REDUCED_QUADRATURE, GENERIC_QUADRATURE)

# basis functions are negligible this far beyond their outermost turning point
BASIS_MARGIN = 6.0
# exp(-W^2 s^2 / 4) is below 1e-17 once |s| W exceeds this
KERNEL_CUTOFF = 12.5
_ROW_CHUNK = 512

EtaFn = Callable[[np.ndarray], np.ndarray]


def basis_reach(size: int) -> float:
    """Half-width in y = ln x outside which all of e_0 ... e_{N-1} vanish to roundoff"""
    return math.sqrt(2 * size + 1) + BASIS_MARGIN


def monomial_fit(profile: EtaFn) -> Optional[Tuple[float, float]]:
    '''
    Detect profile(eta) = c eta^k on a log-spaced sample.

    monomial_fit: profile: Callable -> Optional[Tuple[float, float]]

    Examples:
        monomial_fit(lambda eta: eta) -> (1.0, 1.0)
        monomial_fit(lambda eta: 3 / eta) -> (3.0, -1.0)
        monomial_fit(lambda eta: np.exp(-eta)) -> None
    '''
    eta = np.geomspace(1e-3, 1e3, 13)
    with np.errstate(all="ignore"):
        values = np.asarray(profile(eta), dtype=float)
        center = float(np.asarray(profile(np.array([1.0])), dtype=float)[0])
    if not np.all(np.isfinite(values)) or not math.isfinite(center):
        return None
    if np.all(values == 0):
        return 0.0, 0.0
    if center == 0 or np.any(np.sign(values) != np.sign(center)):
        return None
    k = math.log(values[-1] / values[0]) / math.log(eta[-1] / eta[0])
    if abs(k - round(k)) < 1e-9:
        k = float(round(k))
    if np.all(np.abs(values - center * eta ** k) <= 1e-10 * np.abs(values)):
        return center, k
    return None


def _divergent(message: str, certificate=None) -> DivergenceError:
    logger.warning(message)
    return DivergenceError(message, certificate=certificate)


def closed_form_multiplier(basis: BasisSet, phi: FiducialVector, c: float, k: float) -> np.ndarray:
    '''
    Matrix of multiplication by (c / A) M_k x^-k, the image of c eta^k.

    closed_form_multiplier: basis: BasisSet, phi: FiducialVector, c: float, k: float -> np.ndarray

    Examples:
        closed_form_multiplier(basis, make_fiducial(2, 1), 1.0, 1.0) -> matrix of 1/(A x)
        closed_form_multiplier(basis, make_fiducial(2, 1), 1.0, -1.0) -> matrix of (B/A) x
    '''
    size = basis.size
    if c == 0:
        return np.zeros((size, size), dtype=complex)
    moment = phi.moment(k)
    if not math.isfinite(moment):
        raise _divergent(
            f"Multiplier of eta^{k:g} needs the fiducial moment M_{k:g}, which diverges for "
            f"{phi.tag}."
        )
    return (c * moment / phi.A) * exponential_moments(size, k).astype(complex)


def closed_form_first_order(basis: BasisSet, phi: FiducialVector, c: float, k: float) -> np.ndarray:
    '''
    Matrix of the symmetric first-order operator quantizing xi c eta^k.

    With F(x) = (c / A) M_k x^-k the operator is
    -(i/2) int dy (F(e^y) / e^y) (h_m h_n' - h_m' h_n).

    closed_form_first_order: basis: BasisSet, phi: FiducialVector, c: float, k: float -> np.ndarray

    Examples:
        closed_form_first_order(basis, phi, 1.0, 1.0) -> matrix of -(i/A) d/dx (. / x)
    '''
    size = basis.size
    if c == 0:
        return np.zeros((size, size), dtype=complex)
    moment = phi.moment(k)
    if not math.isfinite(moment):
        raise _divergent(
            f"First-order term xi eta^{k:g} needs the fiducial moment M_{k:g}, which diverges "
            f"for {phi.tag}."
        )
    weights = exponential_moments(size + 1, k + 1)[:size, :]
    transport = weights @ hermite_derivative_matrix(size)
    return -0.5j * (c * moment / phi.A) * (transport - transport.T)


def _y_rule(size: int) -> Tuple[np.ndarray, np.ndarray]:
    reach = basis_reach(size)
    return composite_gauss_legendre(-reach, reach, 0.25, 12)


def _u_rule(phi: FiducialVector) -> QuadratureGrid:
    lo, hi = phi.support
    return QuadratureGrid.adaptive_panel(math.log(lo), math.log(hi), 0.0, 12, 0.25)


def check_profile_transform(profile: EtaFn, phi: FiducialVector, growth: float) -> None:
    """Raise DivergenceError when int du u^-2 profile(u) |Phi(u)|^2 grows under domain extension"""
    lo, hi = phi.support
    result = half_line_integral(
        lambda u: u ** -2.0 * profile(u) * np.abs(phi(u)) ** 2, lo, hi, growth=growth
    )
    if result.verdict == "divergent":
        raise _divergent(
            f"The multiplier integral int du u^-2 G(u) |Phi(u)|^2 diverges for {phi.tag}: "
            f"nested values {list(result.values)}"
        )


def profile_transform(profile: EtaFn, phi: FiducialVector, x: np.ndarray) -> np.ndarray:
    '''
    R(x) = int du u^-2 profile(u / x) |Phi(u)|^2 at each x.

    profile_transform: profile: Callable, phi: FiducialVector, x: np.ndarray -> np.ndarray

    Examples:
        profile_transform(lambda eta: np.ones_like(eta), make_fiducial(2, 1), x) -> A everywhere
    '''
    grid = _u_rule(phi)
    u = grid.nodes
    density = grid.weights * np.abs(phi(u)) ** 2 / u
    out = np.empty(x.shape, dtype=float)
    for start in range(0, x.size, _ROW_CHUNK):
        block = x[start:start + _ROW_CHUNK]
        with np.errstate(all="ignore"):
            values = np.asarray(profile((u[None, :] / block[:, None]).ravel()), dtype=float)
        values = values.reshape(block.size, u.size)
        out[start:start + _ROW_CHUNK] = values @ density
    if not np.all(np.isfinite(out)):
        raise NumericError("Non-finite values in the reduced multiplier")
    return out


def reduced_multiplier(basis: BasisSet, phi: FiducialVector, profile: EtaFn) -> np.ndarray:
    """Multiplication by R(x) / A, R the profile transform, by quadrature in y"""
    y, w = _y_rule(basis.size)
    h = hermite_functions(basis.size, y)
    values = profile_transform(profile, phi, np.exp(y)) / phi.A
    return ((h * (w * values)[None, :]) @ h.T).astype(complex)


def reduced_first_order(basis: BasisSet, phi: FiducialVector, profile: EtaFn) -> np.ndarray:
    """Symmetric first-order operator for xi profile(eta), by quadrature in y"""
    size = basis.size
    y, w = _y_rule(size)
    h_ext = hermite_functions(size + 1, y)
    h = h_ext[:size]
    dh = hermite_derivative_matrix(size).T @ h_ext
    x = np.exp(y)
    weight = w * profile_transform(profile, phi, x) / (phi.A * x)
    forward = (h * weight[None, :]) @ dh.T
    return -0.5j * (forward - forward.T)


def _base_log_eta_range(size: int, phi: FiducialVector) -> Tuple[float, float]:
    lo, hi = phi.support
    reach = basis_reach(size)
    return math.log(lo) - reach, math.log(hi) + reach


def eta_rule(
    weight: Callable[[np.ndarray], np.ndarray],
    t_range: Tuple[float, float],
    window: float
) -> Tuple[np.ndarray, np.ndarray]:
    '''
    Gauss-Legendre rule in t = ln eta over the window where weight(t) >= window * max.

    eta_rule: weight: Callable, t_range: Tuple[float, float], window: float
              -> Tuple[np.ndarray, np.ndarray]

    Examples:
        eta_rule(lambda t: np.exp(-t * t), (-30, 30), 1e-9) -> nodes within |t| < 4.6
    '''
    t_sample = np.linspace(t_range[0], t_range[1], 241)
    with np.errstate(all="ignore"):
        values = np.abs(np.asarray(weight(t_sample), dtype=float))
    values = np.where(np.isfinite(values), values, np.inf)
    peak = float(np.max(values))
    if peak == 0:
        return np.empty(0), np.empty(0)
    if not math.isfinite(peak):
        raise NumericError("Non-finite eta-profile while sizing the eta window")
    keep = np.nonzero(values >= window * peak)[0]
    step = t_sample[1] - t_sample[0]
    lo = max(t_range[0], t_sample[keep[0]] - step)
    hi = min(t_range[1], t_sample[keep[-1]] + step)
    return composite_gauss_legendre(lo, hi, 0.5, 8)


def _u_window(size: int, phi: FiducialVector, t: float) -> Optional[Tuple[float, float]]:
    lo, hi = phi.support
    reach = basis_reach(size)
    u_lo = max(math.log(lo), t - reach)
    u_hi = min(math.log(hi), t + reach)
    if u_hi <= u_lo:
        return None
    return u_lo, u_hi


def _overlap_rows(basis: BasisSet, phi: FiducialVector, grid: QuadratureGrid, t: float) -> np.ndarray:
    """Rows w_j Phi(u_j) e_n(u_j / eta), shape (n_u, N)"""
    u = grid.nodes
    h = hermite_functions(basis.size, grid.log_nodes - t)
    return (grid.weights * phi(u))[:, None] * h.T


def separable_matrix(
    basis: BasisSet,
    phi: FiducialVector,
    profile: EtaFn,
    slope: EtaFn,
    offset: EtaFn,
    amplitude: float,
    center: float,
    width: float,
    tolerances: Tolerances
) -> np.ndarray:
    '''
    Quantize amplitude exp(-((p - center)/width)^2) g(q) under a reducible parametrization.

    With xi = a p + b the dxi-integral gives the kernel
    K(s) = amplitude W sqrt(pi) e^{i mu s} e^{-W^2 s^2 / 4}, mu = a center + b, W = |a| width,
    which is applied in u = eta x coordinates for every eta node. profile, slope and
    offset are g, a and b as functions of eta.

    separable_matrix: basis, phi, profile, slope, offset, amplitude, center, width,
                      tolerances -> np.ndarray

    Examples:
        separable_matrix(basis, phi, lambda eta: np.exp(-np.log(eta)**2), ...) -> Hermitian (N, N)
    '''
    size = basis.size
    matrix = np.zeros((size, size), dtype=complex)
    if amplitude == 0:
        return matrix
    t_nodes, t_weights = eta_rule(
        lambda t: np.exp(-t) * amplitude * profile(np.exp(t)),
        _base_log_eta_range(size, phi),
        tolerances.eta_window,
    )
    for t, weight in zip(t_nodes, t_weights):
        eta = math.exp(t)
        g = float(profile(np.array([eta]))[0])
        if g == 0:
            continue
        a = float(slope(np.array([eta]))[0])
        b = float(offset(np.array([eta]))[0])
        mu = a * center + b
        spread = abs(a) * width
        window = _u_window(size, phi, t)
        if window is None:
            continue
        grid = QuadratureGrid.adaptive_panel(
            *window, frequency=(abs(mu) + 3.0 * spread) / eta, nodes_per_panel=8, max_width=0.25
        )
        rows = _overlap_rows(basis, phi, grid, t)
        block = _gaussian_kernel_product(grid.nodes, rows, eta, mu, spread, amplitude)
        matrix += (weight * math.exp(-t) * g) * block
    return matrix / (2.0 * math.pi * phi.A)


def _gaussian_kernel_product(
    u: np.ndarray,
    rows: np.ndarray,
    eta: float,
    mu: float,
    spread: float,
    amplitude: float
) -> np.ndarray:
    """rows^T K conj(rows) for the banded kernel K_jk = K((u_j - u_k) / eta)"""
    band = KERNEL_CUTOFF * eta / spread
    scale = amplitude * spread * math.sqrt(math.pi)
    out = np.zeros((rows.shape[1], rows.shape[1]), dtype=complex)
    conj_rows = np.conj(rows)
    for start in range(0, u.size, _ROW_CHUNK):
        stop = min(start + _ROW_CHUNK, u.size)
        c0 = int(np.searchsorted(u, u[start] - band, side="left"))
        c1 = int(np.searchsorted(u, u[stop - 1] + band, side="right"))
        s = (u[start:stop, None] - u[None, c0:c1]) / eta
        kernel = scale * np.exp(1j * mu * s - 0.25 * (spread * s) ** 2)
        out += rows[start:stop].T @ (kernel @ conj_rows[c0:c1])
    return out


def generic_matrix(
    basis: BasisSet,
    phi: FiducialVector,
    param: Parametrization,
    observable: Callable[[np.ndarray, np.ndarray], np.ndarray],
    tolerances: Tolerances
) -> np.ndarray:
    '''
    Quantize an arbitrary f by integrating coherent-state projectors over (xi, eta).

    For every eta node the overlaps c_n(xi) = <xi, eta|e_n> are tabulated on a
    xi-rule, and sum_k w_k F_k conj(c_k) c_k^T is accumulated.

    generic_matrix: basis, phi, param, observable, tolerances -> np.ndarray

    Examples:
        generic_matrix(basis, phi, PARAM1, lambda p, q: np.exp(-p**2 - np.log(q)**2), tol) -> (N, N)
        generic_matrix(basis, phi, PARAM1, lambda p, q: q, tol) -> Raises ResolutionError
    '''
    size = basis.size
    p_max = tolerances.p_max
    t_range = _base_log_eta_range(size, phi)

    def group_values(xi: np.ndarray, eta: np.ndarray) -> np.ndarray:
        xi, eta = np.broadcast_arrays(np.asarray(xi, dtype=float), np.asarray(eta, dtype=float))
        p, q = param.from_group(xi, eta)
        with np.errstate(all="ignore"):
            return np.asarray(observable(p, q), dtype=float)

    xi_sample = np.linspace(-p_max, p_max, 801)
    t_sample = np.linspace(t_range[0], t_range[1], 241)
    sample = np.abs(group_values(xi_sample[:, None], np.exp(t_sample)[None, :]))
    if not np.all(np.isfinite(sample)):
        raise NumericError("Observable is non-finite on the (xi, eta) sample")
    peak = float(np.max(sample))
    matrix = np.zeros((size, size), dtype=complex)
    if peak == 0:
        return matrix
    significant = sample >= tolerances.support * peak
    if significant[0].any() or significant[-1].any():
        raise ResolutionError(
            f"The observable does not decay within |xi| <= p_max={p_max:g}.\n"
            f"The generic path needs a momentum profile that vanishes before p_max; "
            f"use the p-independent or linear-in-p kinds for polynomial momentum dependence.",
            requested=math.inf,
            allowed=p_max,
        )
    rows_hit = np.nonzero(significant.any(axis=1))[0]
    xi_step = xi_sample[1] - xi_sample[0]
    xi_lo = xi_sample[rows_hit[0]] - xi_step
    xi_hi = xi_sample[rows_hit[-1]] + xi_step
    column_peak = sample.max(axis=0)

    t_nodes, t_weights = eta_rule(
        lambda t: np.exp(-t) * np.interp(t, t_sample, column_peak), t_range, tolerances.eta_window
    )
    u_hi_global = phi.support[1]
    for t, weight in zip(t_nodes, t_weights):
        eta = math.exp(t)
        lo = max(xi_lo, -eta * tolerances.overlap_bandwidth)
        hi = min(xi_hi, eta * tolerances.overlap_bandwidth)
        window = _u_window(size, phi, t)
        if hi <= lo or window is None:
            continue
        u_top = min(u_hi_global, math.exp(window[1]))
        xi_nodes, xi_weights = composite_gauss_legendre(
            lo, hi, min(0.25, math.pi * eta / u_top), 8
        )
        values = group_values(xi_nodes, np.full(xi_nodes.shape, eta))
        if not np.any(values):
            continue
        grid = QuadratureGrid.adaptive_panel(
            *window, frequency=max(abs(lo), abs(hi)) / eta, nodes_per_panel=8, max_width=0.25
        )
        rows = np.conj(_overlap_rows(basis, phi, grid, t))
        block = np.zeros((size, size), dtype=complex)
        for start in range(0, xi_nodes.size, _ROW_CHUNK):
            xi_chunk = xi_nodes[start:start + _ROW_CHUNK]
            phase = np.exp(-1j * xi_chunk[:, None] * grid.nodes[None, :] / eta)
            overlaps = phase @ rows
            weights = xi_weights[start:start + _ROW_CHUNK] * values[start:start + _ROW_CHUNK]
            block += (np.conj(overlaps).T * weights[None, :]) @ overlaps
        matrix += (weight * math.exp(-t)) * block
    logger.debug(f"Generic assembly used {t_nodes.size} eta nodes, xi window [{xi_lo:.3g}, {xi_hi:.3g}]")
    return matrix / (2.0 * math.pi * phi.A)
