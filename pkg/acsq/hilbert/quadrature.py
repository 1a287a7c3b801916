"""
Quadrature on the half line R+ with measure dnu(x) = dx/x.

Every rule is built in the logarithmic coordinate y = ln x, where dnu(x) = dy
and the half line becomes the real line.
"""

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Tuple

import numpy as np
from loguru import logger

from acsq.core.errors import (
    AccuracyError,
    DivergenceError,
    DomainError,
    NumericError,
    ResolutionError,
)
from acsq.core.settings import grid_order_cap

GAUSS_IN_LOG = "gauss-in-log"
ADAPTIVE_PANEL = "adaptive-panel"

# panel count beyond which an adaptive grid is considered unresolvable
MAX_PANELS = 8192


def log_map(x: float) -> float:
    '''
    Map x in R+ to y = ln x in R.

    log_map: x: float -> float

    Examples:
        log_map(1.0) -> 0.0
        log_map(math.e) -> 1.0
        log_map(0.0) -> Raises DomainError
    '''
    if not math.isfinite(x) or x <= 0:
        raise DomainError(
            f"log_map requires a finite positive argument, got x={x}.\n"
            f"Points of the carrier space live on the open half line x > 0."
        )
    return math.log(x)


def exp_map(y: float) -> float:
    """Inverse of log_map: y -> e^y"""
    if not math.isfinite(y):
        raise DomainError(f"exp_map requires a finite argument, got y={y}")
    return math.exp(y)


def gauss_legendre(a: float, b: float, n: int) -> Tuple[np.ndarray, np.ndarray]:
    '''
    Gauss-Legendre nodes and weights on [a, b].

    gauss_legendre: a: float, b: float, n: int -> Tuple[np.ndarray, np.ndarray]

    Examples:
        gauss_legendre(0.0, 1.0, 4) -> (4 nodes in (0, 1), weights summing to 1.0)
    '''
    knots, weights = np.polynomial.legendre.leggauss(n)
    return 0.5 * (b - a) * knots + 0.5 * (b + a), 0.5 * (b - a) * weights


def composite_gauss_legendre(
    a: float,
    b: float,
    panel_width: float,
    order: int = 8
) -> Tuple[np.ndarray, np.ndarray]:
    '''
    Composite Gauss-Legendre rule with equal panels no wider than panel_width.

    composite_gauss_legendre: a: float, b: float, panel_width: float, order: int = 8
                              -> Tuple[np.ndarray, np.ndarray]

    Examples:
        composite_gauss_legendre(-1.0, 1.0, 0.5) -> (32 nodes, weights summing to 2.0)
    '''
    if b <= a:
        raise DomainError(f"Empty integration interval [{a}, {b}]")
    panels = max(1, int(math.ceil((b - a) / panel_width)))
    if panels > MAX_PANELS:
        raise ResolutionError(
            f"Interval [{a:.4g}, {b:.4g}] needs {panels} panels of width {panel_width:.3g}.\n"
            f"Narrow the integration window or lower the required resolution.",
            requested=float(panels),
            allowed=float(MAX_PANELS),
        )
    knots, weights = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * knots[None, :]).ravel()
    wts = (half[:, None] * weights[None, :]).ravel()
    return nodes, wts


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.ascontiguousarray(array, dtype=float)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class QuadratureGrid:
    """
    Nodes x_i > 0 with weights w_i such that sum_i w_i g(x_i) ~ int_0^inf g(x) dx/x.

    Contract:
        nodes: strictly increasing positive nodes
        weights: strictly positive dnu-weights
        order: number of nodes
        kind: 'gauss-in-log' or 'adaptive-panel'
    """

    nodes: np.ndarray
    weights: np.ndarray
    order: int
    kind: str
    log_nodes: np.ndarray = field(repr=False, default=None)  # type: ignore[assignment]

    def __post_init__(self):
        nodes = _frozen(self.nodes)
        weights = _frozen(self.weights)
        if nodes.shape != weights.shape or nodes.ndim != 1:
            raise DomainError("Quadrature nodes and weights must be 1-D arrays of equal length")
        if not np.all(nodes > 0) or not np.all(np.diff(nodes) > 0):
            raise DomainError("Quadrature nodes must be positive and strictly increasing")
        if not np.all(weights > 0):
            raise DomainError("Quadrature weights must be strictly positive")
        if self.kind not in (GAUSS_IN_LOG, ADAPTIVE_PANEL):
            raise DomainError(f"Unknown grid kind: {self.kind}")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "order", int(nodes.size))
        object.__setattr__(self, "log_nodes", _frozen(np.log(nodes)))

    @classmethod
    def gauss_in_log(cls, order: int) -> "QuadratureGrid":
        '''
        Gauss-Hermite nodes in y = ln x with weights converted to dnu.

        gauss_in_log: order: int -> QuadratureGrid

        Examples:
            QuadratureGrid.gauss_in_log(64) -> QuadratureGrid(order=64, kind='gauss-in-log')
        '''
        if order < 1:
            raise DomainError(f"Grid order must be positive, got {order}")
        cap = grid_order_cap()
        if order > cap:
            logger.warning(f"Grid order {order} capped to {cap}")
            order = cap
        y, w = np.polynomial.hermite.hermgauss(order)
        weights = np.exp(np.log(w) + y * y)
        return cls(nodes=np.exp(y), weights=weights, order=order, kind=GAUSS_IN_LOG)

    @classmethod
    def adaptive_panel(
        cls,
        y_min: float,
        y_max: float,
        frequency: float = 0.0,
        nodes_per_panel: int = 8,
        max_width: float = 0.5
    ) -> "QuadratureGrid":
        '''
        Composite Gauss-Legendre rule in y whose panels resolve e^{i frequency x}.

        The panel starting at y is no wider than pi / (frequency e^y), so every
        panel holds at most half an oscillation of the Fourier kernel.

        adaptive_panel: y_min: float, y_max: float, frequency: float = 0.0,
                        nodes_per_panel: int = 8, max_width: float = 0.5 -> QuadratureGrid

        Examples:
            QuadratureGrid.adaptive_panel(-8, 4, frequency=5.0) -> panels shrinking towards y = 4
        '''
        if y_max <= y_min:
            raise DomainError(f"Empty log-window [{y_min}, {y_max}]")
        knots, weights = np.polynomial.legendre.leggauss(nodes_per_panel)
        edges = [y_min]
        while edges[-1] < y_max:
            y = edges[-1]
            width = max_width
            if frequency > 0:
                width = min(width, math.pi / (frequency * math.exp(y)))
            edges.append(min(y_max, y + width))
            if len(edges) > MAX_PANELS:
                raise ResolutionError(
                    f"Resolving frequency {frequency:.4g} on y in [{y_min:.3g}, {y_max:.3g}] "
                    f"needs more than {MAX_PANELS} panels.\n"
                    f"Reduce the momentum range or the upper end of the window.",
                    requested=frequency,
                    allowed=math.pi * MAX_PANELS / max(math.exp(y_max), 1.0),
                )
        edges_arr = np.asarray(edges)
        half = 0.5 * np.diff(edges_arr)
        mid = 0.5 * (edges_arr[1:] + edges_arr[:-1])
        y_nodes = (mid[:, None] + half[:, None] * knots[None, :]).ravel()
        y_weights = (half[:, None] * weights[None, :]).ravel()
        logger.debug(
            f"Adaptive panel grid on [{y_min:.3g}, {y_max:.3g}]: "
            f"{len(edges_arr) - 1} panels, {y_nodes.size} nodes"
        )
        return cls(
            nodes=np.exp(y_nodes), weights=y_weights, order=y_nodes.size, kind=ADAPTIVE_PANEL
        )

    def integrate(self, values: np.ndarray) -> complex:
        """Apply the rule to samples taken at ``nodes`` (last axis)"""
        values = np.asarray(values)
        if not np.all(np.isfinite(values)):
            raise NumericError("Non-finite integrand samples on the quadrature grid")
        return np.tensordot(values, self.weights, axes=([-1], [0]))

    def gaussian_profile_defect(self, center: float = 0.0, width: float = 1.0) -> float:
        '''
        Error of the rule on a normalized Gaussian in y.

        gaussian_profile_defect: center: float = 0.0, width: float = 1.0 -> float

        Examples:
            QuadratureGrid.gauss_in_log(32).gaussian_profile_defect() -> 1e-15
        '''
        y = self.log_nodes
        profile = np.exp(-((y - center) / width) ** 2) / (math.sqrt(math.pi) * width)
        return abs(float(np.dot(profile, self.weights)) - 1.0)


@dataclass(frozen=True)
class NestedIntegral:
    """
    An integral evaluated on a sequence of growing domains.

    Contract:
        values: integral on each domain, innermost first
        domains: the domains as tuples of bounds
        relative_changes: |v_k - v_{k-1}| / scale for k >= 1
        verdict: 'converged', 'divergent' or 'inconclusive'
    """

    values: Tuple[float, ...]
    domains: Tuple[Tuple[float, ...], ...]
    relative_changes: Tuple[float, ...]
    verdict: str

    @property
    def value(self) -> Optional[float]:
        if self.verdict != "converged":
            return None
        return self.values[-1]

    @property
    def converged(self) -> bool:
        return self.verdict == "converged"

    @property
    def absolute_tolerance(self) -> float:
        """Change across the outermost nesting, used as the quadrature tolerance"""
        if len(self.values) < 2:
            return 0.0
        return abs(self.values[-1] - self.values[-2])

    def nesting_trace(self):
        return [(domain, value) for domain, value in zip(self.domains, self.values)]


def _judge(values, scales, growth: float) -> Tuple[Tuple[float, ...], str]:
    if not all(math.isfinite(v) for v in values) or not all(math.isfinite(s) for s in scales):
        return tuple(float("nan") for _ in values[1:]), "inconclusive"
    changes = []
    for k in range(1, len(values)):
        scale = max(abs(values[k]), scales[k], 1e-300)
        changes.append(abs(values[k] - values[k - 1]) / scale)
    if not changes:
        return (), "converged"
    if changes[-1] <= growth:
        return tuple(changes), "converged"
    if min(changes) > growth:
        return tuple(changes), "divergent"
    return tuple(changes), "inconclusive"


def half_line_integral(
    fn: Callable[[np.ndarray], np.ndarray],
    x_min: float,
    x_max: float,
    nestings: int = 2,
    growth: float = 1e-3,
    panel_width: float = 0.25,
    order: int = 10
) -> NestedIntegral:
    '''
    Integrate fn(x) dx over [x_min, x_max], halving x_min and doubling x_max per nesting.

    The quadrature runs in t = ln x with composite Gauss-Legendre panels.

    half_line_integral: fn: Callable, x_min: float, x_max: float, nestings: int = 2,
                        growth: float = 1e-3 -> NestedIntegral

    Examples:
        half_line_integral(lambda x: np.exp(-x), 1e-12, 50.0) -> NestedIntegral(values=(1.0, 1.0, 1.0), verdict='converged')
        half_line_integral(lambda x: 1.0 / x, 1e-12, 1.0) -> verdict='divergent'
    '''
    if not 0 < x_min < x_max:
        raise DomainError(f"Invalid half-line window [{x_min}, {x_max}]")
    values, scales, domains = [], [], []
    lo, hi = x_min, x_max
    for _ in range(nestings + 1):
        t, w = composite_gauss_legendre(math.log(lo), math.log(hi), panel_width, order)
        x = np.exp(t)
        with np.errstate(all="ignore"):
            samples = np.asarray(fn(x), dtype=complex) * x
        values.append(float(np.real(np.dot(samples, w))))
        scales.append(float(np.dot(np.abs(samples), w)))
        domains.append((lo, hi))
        lo, hi = lo / 2.0, hi * 2.0
    changes, verdict = _judge(values, scales, growth)
    return NestedIntegral(tuple(values), tuple(domains), changes, verdict)


def half_plane_integral(
    fn: Callable[[np.ndarray, np.ndarray], np.ndarray],
    p_half_width: float = 10.0,
    log_q_half_width: float = 20.0,
    nestings: int = 2,
    growth: float = 1e-3,
    panel_width: float = 0.5,
    order: int = 8
) -> NestedIntegral:
    '''
    Integrate fn(p, q) dp dq over the half plane on nested rectangles.

    Each nesting doubles the p half-width, halves q_min and doubles q_max. The
    rule is a tensor composite Gauss-Legendre rule in (p, t = ln q).

    half_plane_integral: fn: Callable, p_half_width: float = 10.0,
                         log_q_half_width: float = 20.0, nestings: int = 2,
                         growth: float = 1e-3 -> NestedIntegral

    Examples:
        half_plane_integral(lambda p, q: np.exp(-p**2 - q)) -> value sqrt(pi), verdict='converged'
        half_plane_integral(lambda p, q: q * np.exp(-p**2)) -> verdict='divergent'
    '''
    values, scales, domains = [], [], []
    half_p = p_half_width
    t_lo, t_hi = -log_q_half_width, log_q_half_width
    for _ in range(nestings + 1):
        p, wp = composite_gauss_legendre(-half_p, half_p, panel_width, order)
        t, wt = composite_gauss_legendre(t_lo, t_hi, panel_width, order)
        q = np.exp(t)
        with np.errstate(all="ignore"):
            samples = np.asarray(fn(p[:, None], q[None, :]), dtype=complex)
            samples = np.broadcast_to(samples, (p.size, q.size)) * q[None, :]
        weights = wp[:, None] * wt[None, :]
        values.append(float(np.real(np.sum(samples * weights))))
        scales.append(float(np.sum(np.abs(samples) * weights)))
        domains.append((-half_p, half_p, math.exp(t_lo), math.exp(t_hi)))
        half_p *= 2.0
        t_lo -= math.log(2.0)
        t_hi += math.log(2.0)
    changes, verdict = _judge(values, scales, growth)
    logger.debug(f"Half-plane integral values {values} -> {verdict}")
    return NestedIntegral(tuple(values), tuple(domains), changes, verdict)


def require_converged(result: NestedIntegral, what: str) -> float:
    """Return the converged value or raise with the nesting trace"""
    if result.verdict == "converged":
        return result.values[-1]
    if result.verdict == "divergent":
        raise DivergenceError(
            f"{what} grows under domain extension: values {list(result.values)}"
        )
    raise AccuracyError(
        f"{what} did not stabilise: values {list(result.values)}",
        achieved=max(result.relative_changes or (float("nan"),)),
        tolerance=0.0,
    )
